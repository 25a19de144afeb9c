"""Solver configuration and the fixed-size state carried between batches."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import ContractViolation
from .glm import Family
from .penalty import PenaltyConfig


@dataclass(frozen=True)
class SolverConfig:
    """
    Tuning knobs for the online solver.

    ``cd_tol`` and ``cd_max_passes`` only affect the offline fit of the first
    batch; online batches use a separable surrogate that one pass solves exactly.
    """

    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    lambda_grid_size: int = 100
    lambda_min_ratio: float = 1e-3
    cd_tol: float = 1e-7
    cd_max_passes: int = 1000
    refit_max_steps: int = 1
    penalize_intercept: bool = True

    def __post_init__(self):
        if self.lambda_grid_size < 2:
            raise ContractViolation("lambda_grid_size must be >= 2")
        if not 0 < self.lambda_min_ratio < 1:
            raise ContractViolation("lambda_min_ratio must lie in (0, 1)")
        if not self.cd_tol > 0:
            raise ContractViolation("cd_tol must be positive")
        if self.cd_max_passes < 1 or self.refit_max_steps < 1:
            raise ContractViolation("cd_max_passes and refit_max_steps must be >= 1")


@dataclass
class SolverState:
    """
    Everything the stream remembers: no raw observations are kept.

    Attributes
    ----------
    beta : (p,) current estimate, zero off ``active``.
    cum_w : (p,) cumulative diagonal of the negative Hessians.
    tracked : sorted indices whose cross-information is accumulated in ``cum_h``.
    cum_h : (|tracked|, |tracked|) cumulative negative-Hessian block.
    active : sorted indices of the current model, a subset of ``tracked``.
    """

    p: int
    family: Family
    config: SolverConfig
    b: int = 0
    N: int = 0
    beta: NDArray = None
    cum_w: NDArray = None
    tracked: NDArray = None
    cum_h: NDArray = None
    active: NDArray = None
    lambda_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.beta is None:
            self.beta = np.zeros(self.p)
        if self.cum_w is None:
            self.cum_w = np.zeros(self.p)
        if self.tracked is None:
            self.tracked = np.zeros(0, dtype=np.intp)
        if self.cum_h is None:
            self.cum_h = np.zeros((len(self.tracked), len(self.tracked)))
        if self.active is None:
            self.active = np.zeros(0, dtype=np.intp)
        self.tracked = np.asarray(self.tracked, dtype=np.intp)
        self.active = np.asarray(self.active, dtype=np.intp)

    def copy(self) -> "SolverState":
        return SolverState(
            p=self.p, family=self.family, config=self.config, b=self.b, N=self.N,
            beta=self.beta.copy(), cum_w=self.cum_w.copy(), tracked=self.tracked.copy(),
            cum_h=self.cum_h.copy(), active=self.active.copy(),
            lambda_history=list(self.lambda_history),
        )

    def cumulative_block(self, idx) -> NDArray:
        """
        Cumulative Hessian over ``idx``.

        Tracked pairs come from ``cum_h``; an untracked index contributes only
        its diagonal ``cum_w`` entry, since its cross terms were never stored.
        """
        idx = np.asarray(idx, dtype=np.intp)
        H = np.diag(self.cum_w[idx])
        pos = np.searchsorted(self.tracked, idx)
        inside = (pos < len(self.tracked)) & (self.tracked[np.minimum(pos, len(self.tracked) - 1)] == idx) \
            if len(self.tracked) else np.zeros(len(idx), dtype=bool)
        sel = np.flatnonzero(inside)
        if sel.size:
            H[np.ix_(sel, sel)] = self.cum_h[np.ix_(pos[sel], pos[sel])]
        return H

    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.beta, self.cum_w, self.tracked, self.cum_h, self.active))
