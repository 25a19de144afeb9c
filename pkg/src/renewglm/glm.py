"""
Exponential-family primitives for canonical-link GLMs.

The simplified log-likelihood of one batch is

    l(beta; D) = y' X beta - 1' b(X beta)

with the dispersion a(phi) fixed to 1. Its gradient (the score) is
X'(y - b'(X beta)) and the negative Hessian is X' diag(b''(X beta)) X.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import ContractViolation, NumericOverflowError

# exp(30) is far from overflow and 1 - sigmoid(30) ~ 9e-14
LOGIT_CLAMP = 30.0


class Family(enum.Enum):
    """Canonical exponential-family members supported by the solver."""

    GAUSSIAN = "gaussian_identity"
    BINOMIAL = "binomial_logit"

    @classmethod
    def from_name(cls, name: str) -> "Family":
        aliases = {
            "gaussian": cls.GAUSSIAN,
            "gaussian_identity": cls.GAUSSIAN,
            "binomial": cls.BINOMIAL,
            "logit": cls.BINOMIAL,
            "logistic": cls.BINOMIAL,
            "binomial_logit": cls.BINOMIAL,
        }
        try:
            return aliases[name.lower()]
        except KeyError:
            raise ContractViolation(f"unknown family {name!r}") from None

    def _clamp(self, theta: NDArray) -> NDArray:
        if self is Family.BINOMIAL:
            return np.clip(theta, -LOGIT_CLAMP, LOGIT_CLAMP)
        return theta

    def cumulant(self, theta: NDArray) -> NDArray:
        """b(theta)."""
        theta = self._clamp(np.asarray(theta, dtype=float))
        if self is Family.GAUSSIAN:
            return 0.5 * theta * theta
        return np.logaddexp(0.0, theta)

    def mean(self, theta: NDArray) -> NDArray:
        """b'(theta), the inverse canonical link."""
        theta = self._clamp(np.asarray(theta, dtype=float))
        if self is Family.GAUSSIAN:
            return theta.copy()
        return 1.0 / (1.0 + np.exp(-theta))

    def variance(self, theta: NDArray) -> NDArray:
        """b''(theta)."""
        theta = self._clamp(np.asarray(theta, dtype=float))
        if self is Family.GAUSSIAN:
            return np.ones_like(theta)
        mu = 1.0 / (1.0 + np.exp(-theta))
        return mu * (1.0 - mu)


@dataclass
class Batch:
    """One chunk of the stream: response ``y`` (n,) and covariates ``X`` (n, p)."""

    y: NDArray
    X: NDArray
    batch_index: int = 1
    n: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        self.y = np.ascontiguousarray(self.y, dtype=float)
        self.X = np.ascontiguousarray(self.X, dtype=float)
        if self.y.ndim != 1 or self.X.ndim != 2:
            raise ContractViolation("y must be 1-d and X 2-d")
        if self.X.shape[0] != self.y.shape[0]:
            raise ContractViolation(
                f"X has {self.X.shape[0]} rows but y has length {self.y.shape[0]}")
        if self.y.shape[0] < 1:
            raise ContractViolation("a batch needs at least one observation")
        if self.batch_index < 1:
            raise ContractViolation("batch_index starts at 1")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ContractViolation("batch contains non-finite entries")
        self.n, self.p = self.X.shape


def _linear_predictor(batch: Batch, beta: ArrayLike) -> NDArray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (batch.p,):
        raise ContractViolation(f"beta has shape {beta.shape}, expected ({batch.p},)")
    with np.errstate(over="ignore", invalid="ignore"):
        theta = batch.X @ beta
    if not np.all(np.isfinite(theta)):
        raise NumericOverflowError("linear predictor is not finite")
    return theta


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NumericOverflowError(f"{what} is not finite")
    return value


def _weighted_col_sq(X, w):
    # one dot product per column, so any column subset reproduces the same bits
    Xf = np.asfortranarray(X)
    return np.array([w @ (Xf[:, j] * Xf[:, j]) for j in range(Xf.shape[1])])


def log_likelihood(family: Family, batch: Batch, beta: ArrayLike) -> float:
    """Simplified log-likelihood sum_i [y_i theta_i - b(theta_i)]."""
    theta = _linear_predictor(batch, beta)
    value = float(batch.y @ theta - family.cumulant(theta).sum())
    return _check_finite(value, "log-likelihood")


def score(family: Family, batch: Batch, beta: ArrayLike) -> NDArray:
    """Gradient of :func:`log_likelihood`, X'(y - b'(X beta))."""
    theta = _linear_predictor(batch, beta)
    return _check_finite(batch.X.T @ (batch.y - family.mean(theta)), "score")


def hessian_diag(family: Family, batch: Batch, beta: ArrayLike) -> NDArray:
    """Diagonal of the negative Hessian, sum_i b''(theta_i) x_ij^2."""
    theta = _linear_predictor(batch, beta)
    w = family.variance(theta)
    return _check_finite(_weighted_col_sq(batch.X, w), "Hessian diagonal")


def hessian_sub(family: Family, batch: Batch, beta: ArrayLike, idx) -> NDArray:
    """The ``[idx, idx]`` block of the negative Hessian X' diag(b'') X."""
    idx = np.asarray(idx, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= batch.p):
        raise ContractViolation(f"index out of range for p={batch.p}: {idx.tolist()}")
    if idx.size > 1 and np.any(np.diff(idx) <= 0):
        raise ContractViolation("idx must be sorted and distinct")
    theta = _linear_predictor(batch, beta)
    w = family.variance(theta)
    Xa = batch.X[:, idx]
    H = (Xa * w[:, None]).T @ Xa
    # exact symmetry; the diagonal must agree bit-for-bit with hessian_diag
    H = 0.5 * (H + H.T)
    H[np.diag_indices_from(H)] = _weighted_col_sq(Xa, w)
    return _check_finite(H, "Hessian block")
