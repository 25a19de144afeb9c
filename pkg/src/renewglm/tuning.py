"""
Penalty-level selection with the online BIC.

For a candidate ``beta_lam`` computed from the current batch's surrogate,

    BIC = s_hat * ln(N_b) + (beta_lam - beta_prev)' diag(cum_w) (beta_lam - beta_prev)
          - 2 * loglik_b(beta_lam)

where ``cum_w`` holds the cumulative diagonal Hessian of all earlier batches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .exceptions import ContractViolation
from .glm import Batch
from .state import SolverConfig, SolverState
from .surrogate import compute_zw, minimize_surrogate


@dataclass
class BicTrace:
    lambdas: NDArray
    bic_values: NDArray
    chosen_lambda: float
    chosen_index: int
    s_hat_per_lambda: NDArray
    candidate: NDArray = None

    @property
    def degenerate(self) -> bool:
        return self.chosen_lambda == 0.0


def lambda_max(Z) -> float:
    """Smallest level at which every coordinate update is zero: max |Z_j|."""
    Z = np.asarray(Z, dtype=float)
    if Z.size == 0:
        raise ContractViolation("lambda_max of an empty vector")
    return float(np.max(np.abs(Z)))


def lambda_grid(lmax: float, size: int = 100, min_ratio: float = 1e-3) -> NDArray:
    """``size`` log-spaced levels from ``lmax`` down to ``min_ratio * lmax``."""
    if not lmax > 0:
        raise ContractViolation("lmax must be positive")
    if size < 2:
        raise ContractViolation("grid size must be >= 2")
    if not 0 < min_ratio < 1:
        raise ContractViolation("min_ratio must lie in (0, 1)")
    grid = np.geomspace(lmax, min_ratio * lmax, size)
    grid[0], grid[-1] = lmax, min_ratio * lmax
    return grid


def _loglik_columns(family, batch: Batch, candidates: NDArray) -> NDArray:
    theta = batch.X @ candidates.T
    return batch.y @ theta - family.cumulant(theta).sum(axis=0)


def bic_path(state: SolverState, batch: Batch, candidates: NDArray) -> NDArray:
    """Online BIC for each row of ``candidates``."""
    candidates = np.atleast_2d(candidates)
    if candidates.shape[1] != state.p:
        raise ContractViolation("candidate length differs from p")
    n_total = state.N + batch.n
    s_hat = np.count_nonzero(candidates, axis=1)
    delta = candidates - state.beta
    quad = (delta * delta) @ state.cum_w
    loglik = _loglik_columns(state.family, batch, candidates)
    return s_hat * np.log(n_total) + quad - 2.0 * loglik


def bic(state: SolverState, batch: Batch, candidate) -> float:
    return float(bic_path(state, batch, np.asarray(candidate, dtype=float)[None, :])[0])


def _penalized_z(Z, config):
    return Z if config.penalize_intercept else Z[1:]


def choose(lambdas: NDArray, candidates: NDArray, values: NDArray) -> BicTrace:
    """Argmin of the BIC over a descending grid; exact ties go to the larger level."""
    idx = int(np.argmin(values))
    return BicTrace(
        lambdas=lambdas, bic_values=values, chosen_lambda=float(lambdas[idx]),
        chosen_index=idx, s_hat_per_lambda=np.count_nonzero(candidates, axis=1),
        candidate=candidates[idx].copy(),
    )


def degenerate_trace(state: SolverState, batch: Batch, candidate: NDArray) -> BicTrace:
    values = bic_path(state, batch, candidate[None, :])
    return BicTrace(
        lambdas=np.zeros(1), bic_values=values, chosen_lambda=0.0, chosen_index=0,
        s_hat_per_lambda=np.array([np.count_nonzero(candidate)]), candidate=candidate,
    )


def select_lambda(state: SolverState, batch: Batch, config: SolverConfig | None = None,
                  zw=None, grid=None) -> tuple[float, BicTrace]:
    """
    Evaluate the surrogate minimizer along a grid and return the BIC-optimal level.

    Levels are per observation (see :func:`surrogate.minimize_surrogate`); the
    default grid tops out at max_j |Z_j| / N_b, where every update is zero.
    The surrogate is linearized once at the previous estimate; grid points are
    independent of one another.
    """
    config = config or state.config
    Z, W = compute_zw(state, batch) if zw is None else zw
    scale = state.N + batch.n
    if grid is None:
        lmax = lambda_max(_penalized_z(Z, config) / scale) if state.p > 1 or config.penalize_intercept else 0.0
        if lmax == 0.0:
            candidate = minimize_surrogate(Z, W, 0.0, config, scale) if not config.penalize_intercept \
                else np.zeros(state.p)
            trace = degenerate_trace(state, batch, candidate)
            return 0.0, trace
        grid = lambda_grid(lmax, config.lambda_grid_size, config.lambda_min_ratio)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ContractViolation("empty lambda grid")
    candidates = minimize_surrogate(Z, W, grid, config, scale)
    trace = choose(grid, candidates, bic_path(state, batch, candidates))
    return trace.chosen_lambda, trace
