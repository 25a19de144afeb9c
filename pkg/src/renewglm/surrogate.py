"""
Linearized per-batch surrogate and its coordinate-wise minimizer.

Around the previous estimate the batch objective is replaced by a quadratic
whose curvature is the diagonal of (cumulative + current) negative Hessian.
The surrogate is separable, so a single pass over the coordinates is its
exact minimizer and the visiting order does not matter.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .exceptions import ContractViolation
from .glm import Batch, hessian_diag, score
from .penalty import threshold
from .state import SolverConfig, SolverState


def compute_zw(state: SolverState, batch: Batch) -> tuple[NDArray, NDArray]:
    """
    Linearized score ``Z`` and curvature ``W`` for every coordinate.

    W_j = cum_w_j + J_b(beta_prev)[j, j],  Z_j = U_b(beta_prev)[j] + beta_prev_j * W_j
    """
    if batch.p != state.p:
        raise ContractViolation(f"batch has p={batch.p}, state has p={state.p}")
    W = state.cum_w + hessian_diag(state.family, batch, state.beta)
    Z = score(state.family, batch, state.beta) + state.beta * W
    return Z, W


def minimize_surrogate(Z: NDArray, W: NDArray, lam, config: SolverConfig,
                       scale: float = 1.0) -> NDArray:
    """
    Coordinate updates for one or many penalty levels.

    The penalty enters as ``scale * pen(beta; lam)``, so the thresholding rules
    are applied to ``Z / scale`` and ``W / scale``; the solver passes the
    cumulative sample size, which puts ``lam`` on a per-observation scale.
    ``lam`` may be a scalar or a 1-d grid; with a grid the result has one row
    per level.
    """
    lam = np.asarray(lam, dtype=float)
    Zs, Ws = np.asarray(Z) / scale, np.asarray(W) / scale
    out = threshold(config.penalty, Zs, Ws, lam if lam.ndim == 0 else lam[:, None])
    if not config.penalize_intercept and Ws[0] > 0:
        out[..., 0] = Zs[0] / Ws[0]
    return out


def coordinate_descent(state: SolverState, batch: Batch, lam: float,
                       config: SolverConfig | None = None, zw=None) -> NDArray:
    """
    Exact minimizer of the diagonal surrogate at penalty level ``lam``.

    ``lam`` is per observation: the penalty is weighted by N_b = state.N + batch.n.
    """
    if not lam > 0:
        raise ContractViolation("lambda must be positive")
    config = config or state.config
    Z, W = compute_zw(state, batch) if zw is None else zw
    return minimize_surrogate(Z, W, lam, config, scale=state.N + batch.n)


def select_active(candidate) -> NDArray:
    """Support of ``candidate`` (literal nonzeros), as sorted 0-based indices."""
    return np.flatnonzero(np.asarray(candidate) != 0).astype(np.intp)
