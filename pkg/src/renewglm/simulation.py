"""
Synthetic streaming experiments and selection metrics.

Design: intercept column of ones plus p-1 compound-symmetric normal covariates,
true coefficients (c, -c, c, -c, c, 0, ..., 0) with c = 0.5 (Gaussian) or 1 (logistic).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import ContractViolation, RenewGLMError
from .glm import Batch, Family
from .penalty import PenaltyConfig, PenaltyKind
from .solver import init_first_batch, process_batch
from .state import SolverConfig

logger = logging.getLogger(__name__)

TRUE_SUPPORT = np.arange(5)


@dataclass(frozen=True)
class ExperimentConfig:
    family: Family = Family.GAUSSIAN
    p: int = 10
    n: int = 100
    B: int = 50
    rho: float = 0.5
    replications: int = 20
    seed: int = 0
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    noise_sd: float = 1.0
    warm_start_size: int = 1000
    offline_reference: bool = False
    solver: SolverConfig | None = None

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ContractViolation("rho must lie in [0, 1)", )
        if self.p < 6:
            raise ContractViolation("p must be at least 6")
        if self.replications < 1 or self.n < 1 or self.B < 1:
            raise ContractViolation("replications, n and B must be positive")
        if self.noise_sd < 0:
            raise ContractViolation("noise_sd must be nonnegative")

    @property
    def warm_batches(self) -> int:
        """Number of leading batches pooled into the offline starting fit."""
        return min(self.B, max(1, math.ceil(self.warm_start_size / self.n)))

    @property
    def solver_config(self) -> SolverConfig:
        if self.solver is None:
            return SolverConfig(penalty=self.penalty)
        return self.solver

    @property
    def method(self) -> str:
        return f"Renew_{self.penalty.label}"

    @property
    def size_label(self) -> str:
        return f"n={self.n},B={self.B}"


@dataclass
class SelectionMetrics:
    """Replication averages. ``l2_sq`` is the squared (not root) l2 error."""

    NV: float
    IN: float
    CS: float
    I: float
    II: float
    l2_sq: float
    replications: int
    failures: int = 0


@dataclass
class ReplicationRecord:
    method: str
    replication: int
    batch: int
    N: int
    NV: int
    IN: int
    CS: int
    I: float
    II: float
    l2_sq: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: dict[str, SelectionMetrics]
    records: list[ReplicationRecord]
    finals: dict[str, list[ReplicationRecord]]
    failures: list[tuple[int, str]] = field(default_factory=list)


def true_beta(p: int, family: Family) -> NDArray:
    if p < 6:
        raise ContractViolation("p must be at least 6")
    c = 0.5 if family is Family.GAUSSIAN else 1.0
    beta = np.zeros(p)
    beta[:5] = c * np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    return beta


def gen_covariates(n: int, p: int, rho: float, rng: np.random.Generator) -> NDArray:
    """Intercept column plus p-1 unit-variance normals with pairwise correlation ``rho``."""
    shared = rng.standard_normal((n, 1))
    own = rng.standard_normal((n, p - 1))
    X = np.empty((n, p))
    X[:, 0] = 1.0
    X[:, 1:] = math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * own
    return X


def gen_response(family: Family, X: NDArray, beta0: NDArray, rng: np.random.Generator,
                 noise_sd: float = 1.0) -> NDArray:
    eta = X @ beta0
    if family is Family.GAUSSIAN:
        return eta + noise_sd * rng.standard_normal(eta.shape[0])
    return (rng.random(eta.shape[0]) < family.mean(eta)).astype(float)


def eval_selection(S_hat, S, p: int) -> dict:
    """NV, IN, CS and the type-I/II rates (both normalized by p) for one fit."""
    S_hat, S = set(int(i) for i in S_hat), set(int(i) for i in S)
    return {
        "NV": len(S_hat),
        "IN": int(S <= S_hat),
        "CS": int(S == S_hat),
        "I": len(S_hat - S) / p,
        "II": len(S - S_hat) / p,
    }


def l2_error(beta_hat, beta0) -> float:
    beta_hat, beta0 = np.asarray(beta_hat, dtype=float), np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise ContractViolation("length mismatch")
    d = beta_hat - beta0
    return float(d @ d)


def r_squared(y, y_hat) -> float:
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size < 2:
        raise ContractViolation("y and y_hat need equal lengths >= 2")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise ContractViolation("R^2 undefined for constant y")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / sst


def _record(method, rep, batch, N, beta, beta0, p) -> ReplicationRecord:
    sel = eval_selection(np.flatnonzero(beta), TRUE_SUPPORT, p)
    return ReplicationRecord(method=method, replication=rep, batch=batch, N=N,
                             l2_sq=l2_error(beta, beta0), **sel)


def aggregate(finals: list[ReplicationRecord], failures: int = 0) -> SelectionMetrics:
    k = len(finals)
    if k == 0:
        nan = float("nan")
        return SelectionMetrics(nan, nan, nan, nan, nan, nan, 0, failures)

    def mean(attr):
        return math.fsum(getattr(r, attr) for r in finals) / k

    return SelectionMetrics(NV=mean("NV"), IN=mean("IN"), CS=mean("CS"), I=mean("I"),
                            II=mean("II"), l2_sq=mean("l2_sq"), replications=k, failures=failures)


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, rep]))


def run_replication(config: ExperimentConfig, rep: int):
    """One stream; returns the per-step online records and, if requested, the offline final record."""
    rng = replication_rng(config.seed, rep)
    family, p, n = config.family, config.p, config.n
    beta0 = true_beta(p, family)
    solver = config.solver_config

    def draw():
        X = gen_covariates(n, p, config.rho, rng)
        return X, gen_response(family, X, beta0, rng, config.noise_sd)

    k0 = config.warm_batches
    chunks = [draw() for _ in range(k0)]
    seen = list(chunks)
    X0 = np.vstack([c[0] for c in chunks])
    y0 = np.concatenate([c[1] for c in chunks])
    state = init_first_batch(Batch(y0, X0, 1), solver, family)
    records = [_record(config.method, rep, k0, state.N, state.beta, beta0, p)]
    for t in range(k0, config.B):
        X, y = draw()
        if config.offline_reference:
            seen.append((X, y))
        state, _ = process_batch(state, Batch(y, X, state.b + 1), solver)
        records.append(_record(config.method, rep, t + 1, state.N, state.beta, beta0, p))

    offline = None
    if config.offline_reference:
        allX = np.vstack([c[0] for c in seen])
        ally = np.concatenate([c[1] for c in seen])
        ref = init_first_batch(Batch(ally, allX, 1), solver, family)
        offline = _record(f"Total_data_{config.penalty.label}", rep, config.B, ref.N, ref.beta,
                          beta0, p)
    return records, offline


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """
    Run all replications of one design and aggregate the final-batch metrics.

    Failed replications are logged and listed in ``failures``; they are
    excluded from the averages but counted in ``SelectionMetrics.failures``.
    """
    records, finals, offline, failures = [], [], [], []
    for rep in range(config.replications):
        try:
            recs, off = run_replication(config, rep)
        except (RenewGLMError, np.linalg.LinAlgError, FloatingPointError) as err:
            logger.error("replication %d failed: %s", rep, err)
            failures.append((rep, str(err)))
            continue
        records.extend(recs)
        finals.append(recs[-1])
        if off is not None:
            offline.append(off)
    result_finals = {config.method: finals}
    metrics = {config.method: aggregate(finals, len(failures))}
    if config.offline_reference:
        name = f"Total_data_{config.penalty.label}"
        result_finals[name] = offline
        metrics[name] = aggregate(offline, len(failures))
    return ExperimentResult(config=config, metrics=metrics, records=records,
                            finals=result_finals, failures=failures)


def metrics_rows(result: ExperimentResult) -> list[dict]:
    rows = []
    for method, m in result.metrics.items():
        rows.append({"Size": result.config.size_label, "Method": method, **asdict(m)})
    return rows
