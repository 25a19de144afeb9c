"""
Online variable selection and estimation for streaming GLM batches.

The first batch gets an offline penalized fit (relinearized cyclic coordinate
descent over a lambda path, BIC-selected, then an unpenalized refit on the
support). Each later batch is handled by :func:`process_batch`, which only
touches the current batch and the summary statistics in :class:`SolverState`.
"""

from __future__ import annotations

import logging

import numba
import numpy as np
from numpy.typing import NDArray

from .exceptions import ContractViolation, DegenerateStreamError, RefitDegenerateError
from .glm import Batch, Family, hessian_diag, hessian_sub, score
from .penalty import KIND_CODE, PenaltyConfig, PenaltyKind, update_kernel
from .state import SolverConfig, SolverState
from .surrogate import compute_zw, select_active
from .tuning import (BicTrace, bic_path, choose, degenerate_trace, lambda_grid, lambda_max,
                     select_lambda)

logger = logging.getLogger(__name__)

MLE_MAX_ITER = 100
MLE_TOL = 1e-10


# ---------------------------------------------------------------------------
# offline fit for the first batch
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _sweep(G, grad, diag, beta, coords, lam, code, r, free):
    max_change = 0.0
    p = beta.shape[0]
    for j in coords:
        old = beta[j]
        new = update_kernel(code, grad[j] + diag[j] * old, diag[j], 0.0 if j == free else lam, r)
        d = new - old
        if d != 0.0:
            beta[j] = new
            for k in range(p):
                grad[k] -= G[k, j] * d
            max_change = max(max_change, abs(d))
    return max_change


@numba.njit(cache=True)
def _cd_kernel(G, c, beta, lam, code, r, free, tol, max_passes):
    diag = np.diag(G).copy()
    for j in range(beta.shape[0]):
        if diag[j] <= 0.0:
            beta[j] = 0.0
    grad = c - G @ beta
    usable = np.flatnonzero(diag > 0.0)
    # full sweeps alternate with sweeps restricted to the current support
    passes = 0
    while passes < max_passes:
        passes += 1
        if _sweep(G, grad, diag, beta, usable, lam, code, r, free) < tol:
            break
        support = usable[beta[usable] != 0.0]
        while passes < max_passes:
            passes += 1
            if _sweep(G, grad, diag, beta, support, lam, code, r, free) < tol:
                break
    return beta


def _cd_quadratic(G, c, beta, lam, config: SolverConfig):
    """Cyclic coordinate descent on 0.5 b'Gb - c'b + sum_j pen(b_j)."""
    free = -1 if config.penalize_intercept else 0
    return _cd_kernel(np.ascontiguousarray(G), np.ascontiguousarray(c), beta, float(lam),
                      KIND_CODE[config.penalty.kind], float(config.penalty.r), free,
                      float(config.cd_tol), int(config.cd_max_passes))


def penalized_fit(family: Family, batch: Batch, lam: float, config: SolverConfig,
                  beta0: NDArray | None = None) -> NDArray:
    """
    Penalized maximum likelihood on one batch at a fixed level.

    Each outer cycle recomputes the score and full Hessian at the current
    iterate and runs cyclic coordinate descent on the resulting quadratic.
    """
    X, y = batch.X, batch.y
    beta = np.zeros(batch.p) if beta0 is None else np.array(beta0, dtype=float)
    for _ in range(config.cd_max_passes):
        theta = X @ beta
        w = family.variance(theta)
        # per-observation scale so that lam and the SCAD/MCP regimes match the online step
        G = (X * w[:, None]).T @ X / batch.n
        c = X.T @ (y - family.mean(theta)) / batch.n + G @ beta
        new = _cd_quadratic(G, c, beta.copy(), lam, config)
        change = np.max(np.abs(new - beta)) if batch.p else 0.0
        beta = new
        if family is Family.GAUSSIAN or change < config.cd_tol:
            break
    return beta + 0.0


def mle_on_support(family: Family, batch: Batch, active, beta0: NDArray) -> NDArray:
    """Unpenalized Newton fit restricted to ``active``; raises RefitDegenerateError if singular."""
    active = np.asarray(active, dtype=np.intp)
    beta = np.zeros(batch.p)
    if active.size == 0:
        return beta
    beta[active] = beta0[active]
    for _ in range(MLE_MAX_ITER):
        U = score(family, batch, beta)[active]
        H = hessian_sub(family, batch, beta, active)
        step = _solve_pd(H, U, active)
        beta[active] += step
        if np.max(np.abs(step)) < MLE_TOL * (1.0 + np.max(np.abs(beta[active]))):
            break
        if family is Family.GAUSSIAN:
            break
    return beta


def _solve_pd(H, g, idx):
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise RefitDegenerateError(idx) from None
    return np.linalg.solve(H, g)


def offline_fit(batch: Batch, config: SolverConfig, family: Family,
                active: NDArray | None = None) -> tuple[NDArray, NDArray, NDArray, BicTrace]:
    """
    Offline penalized fit with BIC-chosen level followed by an MLE refit.

    Returns ``(beta, active, penalized_beta, trace)``. The BIC used here is
    the online criterion with no earlier batches (no carry-over term).
    """
    p = batch.p
    empty = SolverState(p=p, family=family, config=config)
    z0 = score(family, batch, np.zeros(p))
    h0 = hessian_diag(family, batch, np.zeros(p))
    if not np.any(h0 > 0):
        raise DegenerateStreamError("no covariate carries information in the first batch")
    zpen = z0 if config.penalize_intercept else z0[1:]
    lmax = lambda_max(zpen) / batch.n if zpen.size else 0.0
    if lmax == 0.0:
        candidate = penalized_fit(family, batch, 0.0, config) if not config.penalize_intercept \
            else np.zeros(p)
        trace = degenerate_trace(empty, batch, candidate)
    else:
        grid = lambda_grid(lmax, config.lambda_grid_size, config.lambda_min_ratio)
        path = np.empty((len(grid), p))
        beta = np.zeros(p)
        for k, lam in enumerate(grid):
            beta = penalized_fit(family, batch, lam, config, beta)
            path[k] = beta
        trace = choose(grid, path, bic_path(empty, batch, path))
        candidate = trace.candidate
    if active is None:
        active = select_active(candidate)
    active = np.asarray(active, dtype=np.intp)
    try:
        beta = mle_on_support(family, batch, active, candidate)
    except RefitDegenerateError as err:
        logger.warning("first-batch refit degenerate on %s; keeping penalized fit", err.indices)
        beta = np.where(np.isin(np.arange(p), active), candidate, 0.0)
    return beta, active, candidate, trace


def init_first_batch(batch: Batch, config: SolverConfig | None = None,
                     family: Family = Family.GAUSSIAN, active=None,
                     return_trace: bool = False):
    """
    Build the initial state from the first batch.

    ``active`` pins the support instead of selecting it (used for exactness checks).
    """
    config = config or SolverConfig()
    if batch.batch_index != 1:
        raise ContractViolation("the first batch must have batch_index 1")
    beta, active, _, trace = offline_fit(batch, config, family, active)
    state = SolverState(p=batch.p, family=family, config=config)
    state.beta = beta
    state.cum_w = hessian_diag(family, batch, beta)
    state.tracked = active.copy()
    state.cum_h = hessian_sub(family, batch, beta, active)
    np.fill_diagonal(state.cum_h, state.cum_w[active])
    state.active = active.copy()
    state.b, state.N = 1, batch.n
    state.lambda_history = [trace.chosen_lambda]
    if active.size == 0:
        logger.info("first batch selected an empty model")
    return (state, trace) if return_trace else state


# ---------------------------------------------------------------------------
# online steps
# ---------------------------------------------------------------------------

def refit_renewable_mle(state: SolverState, batch: Batch, active,
                        max_steps: int | None = None) -> NDArray:
    """
    Renewable Newton refit on ``active``.

    Solves  C (beta_prev - beta) + U_b(beta) = 0  over the active block, where
    C is the cumulative Hessian of earlier batches, starting from the previous
    estimate. One step gives beta_prev + (C + J_b)^{-1} U_b(beta_prev).
    Coordinates outside ``active`` are returned as exactly zero.
    """
    max_steps = state.config.refit_max_steps if max_steps is None else max_steps
    active = np.asarray(active, dtype=np.intp)
    out = np.zeros(state.p)
    if active.size == 0:
        return out
    C = state.cumulative_block(active)
    prev = state.beta[active]
    beta = state.beta.copy()
    for k in range(max_steps):
        U = score(state.family, batch, beta)[active]
        H = C + hessian_sub(state.family, batch, beta, active)
        g = U + C @ (prev - beta[active])
        step = _solve_pd(H, g, active)
        new = beta[active] + step
        if k == 0:
            beta = np.zeros(state.p)
        beta[active] = new
        if np.max(np.abs(step)) == 0.0:
            break
    out[active] = beta[active]
    return out


def _check_tracked_growth(state: SolverState):
    limit = min(state.p, 10 * max(1, len(state.active)))
    if len(state.tracked) > limit:
        logger.warning("tracked set has %d indices (limit %d); active set is churning",
                       len(state.tracked), limit)


def process_batch(state: SolverState, batch: Batch, config: SolverConfig | None = None,
                  active=None) -> tuple[SolverState, BicTrace]:
    """
    Consume one batch and return the updated state and its BIC trace.

    The input ``state`` is not modified and ``batch`` is not retained.
    ``active`` pins the support instead of selecting it.
    """
    config = config or state.config
    if batch.batch_index != state.b + 1:
        raise ContractViolation(
            f"expected batch_index {state.b + 1}, got {batch.batch_index}")
    zw = compute_zw(state, batch)
    lam, trace = select_lambda(state, batch, config, zw=zw)
    candidate = trace.candidate
    A = select_active(candidate) if active is None else np.asarray(active, dtype=np.intp)
    try:
        beta = refit_renewable_mle(state, batch, A, config.refit_max_steps)
    except RefitDegenerateError as err:
        logger.warning("batch %d: refit degenerate on %s; using penalized candidate",
                       batch.batch_index, err.indices)
        beta = np.where(np.isin(np.arange(state.p), A), candidate, 0.0)

    new = state.copy()
    new.config = config
    tracked = np.union1d(state.tracked, A).astype(np.intp)
    cum_w = state.cum_w + hessian_diag(state.family, batch, beta)
    cum_h = state.cumulative_block(tracked) + hessian_sub(state.family, batch, beta, tracked)
    np.fill_diagonal(cum_h, cum_w[tracked])
    new.beta, new.cum_w, new.tracked, new.cum_h, new.active = beta, cum_w, tracked, cum_h, A
    new.b += 1
    new.N += batch.n
    new.lambda_history.append(lam)
    _check_tracked_growth(new)
    return new, trace


class StreamingGLM:
    """
    Convenience wrapper feeding ``(X, y)`` chunks through the online solver.

    Examples
    --------
    >>> model = StreamingGLM(family="gaussian", penalty="scad")
    >>> for X, y in chunks:                           # doctest: +SKIP
    ...     model.partial_fit(X, y)
    >>> model.coef_, model.active_                    # doctest: +SKIP
    """

    def __init__(self, family="gaussian", penalty="lasso", r=None, config: SolverConfig | None = None,
                 **config_kwargs):
        self.family = family if isinstance(family, Family) else Family.from_name(family)
        if config is None:
            pen = penalty if isinstance(penalty, PenaltyConfig) else PenaltyConfig(PenaltyKind(penalty), r)
            config = SolverConfig(penalty=pen, **config_kwargs)
        self.config = config
        self.state: SolverState | None = None
        self.traces: list[BicTrace] = []

    @classmethod
    def from_state(cls, state: SolverState) -> "StreamingGLM":
        model = cls(family=state.family, config=state.config)
        model.state = state
        return model

    def partial_fit(self, X, y, active=None) -> "StreamingGLM":
        index = 1 if self.state is None else self.state.b + 1
        batch = Batch(y=y, X=X, batch_index=index)
        if self.state is None:
            self.state, trace = init_first_batch(batch, self.config, self.family, active=active,
                                                 return_trace=True)
        else:
            self.state, trace = process_batch(self.state, batch, self.config, active=active)
        self.traces.append(trace)
        return self

    @property
    def coef_(self) -> NDArray:
        return self.state.beta

    @property
    def active_(self) -> NDArray:
        return self.state.active

    def predict(self, X) -> NDArray:
        return self.family.mean(np.asarray(X, dtype=float) @ self.state.beta)
