"""
Closed-form coordinate updates for LASSO, SCAD and MCP.

Every update minimizes the scalar problem

    0.5 * W * beta**2 - Z * beta + pen(|beta|; lam)

where ``W`` is a (cumulative) diagonal Hessian entry and ``Z`` the matching
linearized score. All operators work on ``|Z|`` and restore the sign at the
end, so ``update(-Z) == -update(Z)`` holds bit-for-bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import ContractViolation, RenewGLMError

# |W - 1/(r-1)| (SCAD) or |W - 1/r| (MCP) below this routes to the boundary case
REGIME_TOL = 1e-12


class DegenerateCoordinate(RenewGLMError):
    """Raised by the scalar updates when W == 0; the solver pins such coordinates to zero."""


class PenaltyKind(str, enum.Enum):
    LASSO = "lasso"
    SCAD = "scad"
    MCP = "mcp"


DEFAULT_R = {PenaltyKind.LASSO: 0.0, PenaltyKind.SCAD: 3.7, PenaltyKind.MCP: 3.0}


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty kind and shape constant ``r`` (ignored for LASSO)."""

    kind: PenaltyKind = PenaltyKind.LASSO
    r: float | None = None

    def __post_init__(self):
        kind = PenaltyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        r = DEFAULT_R[kind] if self.r is None else float(self.r)
        object.__setattr__(self, "r", r)
        if kind is PenaltyKind.SCAD and not r > 2:
            raise ContractViolation(f"SCAD requires r > 2, got {r}")
        if kind is PenaltyKind.MCP and not r > 1:
            raise ContractViolation(f"MCP requires r > 1, got {r}")

    @property
    def label(self) -> str:
        return self.kind.value.upper()


def soft_threshold(z, gamma):
    """sign(z) * max(|z| - gamma, 0)."""
    z = np.asarray(z, dtype=float)
    out = np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)
    return float(out) if out.ndim == 0 else out


def penalty_value(config: PenaltyConfig, beta, lam):
    """p_lam(|beta|) for the configured penalty."""
    t = np.abs(np.asarray(beta, dtype=float))
    lam = np.asarray(lam, dtype=float)
    r = config.r
    if config.kind is PenaltyKind.LASSO:
        out = lam * t
    elif config.kind is PenaltyKind.SCAD:
        out = np.where(
            t <= lam,
            lam * t,
            np.where(
                t <= r * lam,
                (2.0 * r * lam * t - t * t - lam * lam) / (2.0 * (r - 1.0)),
                0.5 * (r + 1.0) * lam * lam,
            ),
        )
    else:
        out = np.where(t <= r * lam, lam * t - t * t / (2.0 * r), 0.5 * r * lam * lam)
    return float(out) if np.ndim(out) == 0 else out


def _scalar_objective(config, a, W, lam, b):
    return 0.5 * W * b * b - a * b + penalty_value(config, b, lam)


def _lasso_abs(a, W, lam):
    return np.maximum(a - lam, 0.0) / W


def _scad_abs(a, W, lam, r):
    t = 1.0 / (r - 1.0)
    soft = np.maximum(a - lam, 0.0)
    # W > 1/(r-1): the scalar problem is convex and the three branches are exact
    convex = np.where(
        a <= lam + lam * W,
        soft / W,
        np.where(
            a < r * lam * W,
            np.maximum(a - r * lam / (r - 1.0), 0.0) / np.where(W > t, W - t, 1.0),
            a / W,
        ),
    )
    boundary = np.where(a <= r * lam / (r - 1.0), (r - 1.0) * soft, (r - 1.0) * a)
    # W < 1/(r-1): the middle piece is concave, so the minimizer is one of the
    # two outer-piece solutions; pick the lower objective, ties to the smaller
    small = np.minimum(soft / W, lam)
    large = np.maximum(a / W, r * lam)
    cfg = PenaltyConfig(PenaltyKind.SCAD, r)
    f_small = _scalar_objective(cfg, a, W, lam, small)
    f_large = _scalar_objective(cfg, a, W, lam, large)
    nonconvex = np.where(f_large < f_small, large, small)
    return np.where(np.abs(W - t) <= REGIME_TOL, boundary, np.where(W > t, convex, nonconvex))


def _mcp_abs(a, W, lam, r):
    t = 1.0 / r
    convex = np.where(
        a <= r * lam * W,
        np.maximum(a - lam, 0.0) / np.where(W > t, W - t, 1.0),
        a / W,
    )
    boundary = np.where(a <= lam, 0.0, r * a)
    # W < 1/r: objective is concave on [0, r*lam]; compare zero with the flat-penalty solution
    large = np.maximum(a / W, r * lam)
    f_large = 0.5 * W * large * large - a * large + 0.5 * r * lam * lam
    nonconvex = np.where(f_large < 0.0, large, 0.0)
    return np.where(np.abs(W - t) <= REGIME_TOL, boundary, np.where(W > t, convex, nonconvex))


def threshold(config: PenaltyConfig, Z, W, lam):
    """
    Vectorized coordinate update for any penalty.

    Arguments broadcast, so a column of levels against a row of coordinates
    gives a whole path at once. Entries with ``W == 0`` carry no information
    and are returned as exactly 0.
    """
    Z = np.asarray(Z, dtype=float)
    W = np.asarray(W, dtype=float)
    a = np.abs(Z)
    ok = W > 0
    Ws = np.where(ok, W, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if config.kind is PenaltyKind.LASSO:
            mag = _lasso_abs(a, Ws, lam)
        elif config.kind is PenaltyKind.SCAD:
            mag = _scad_abs(a, Ws, lam, config.r)
        else:
            mag = _mcp_abs(a, Ws, lam, config.r)
    out = np.where(ok, np.sign(Z) * mag, 0.0)
    # normalise -0.0 so that supports and serialisations are stable
    return out + 0.0


KIND_CODE = {PenaltyKind.LASSO: 0, PenaltyKind.SCAD: 1, PenaltyKind.MCP: 2}


@numba.njit(cache=True)
def update_kernel(code, Z, W, lam, r):
    """
    Scalar coordinate update; ``code`` is ``KIND_CODE[kind]``.

    Compiled so that cyclic coordinate descent loops can call it cheaply.
    Must agree with :func:`threshold`.
    """
    if W <= 0.0:
        return 0.0
    a = abs(Z)
    soft = a - lam if a > lam else 0.0
    if code == 0:
        mag = soft / W
    elif code == 1:
        t = 1.0 / (r - 1.0)
        if abs(W - t) <= REGIME_TOL:
            mag = (r - 1.0) * soft if a <= r * lam / (r - 1.0) else (r - 1.0) * a
        elif W > t:
            if a <= lam + lam * W:
                mag = soft / W
            elif a < r * lam * W:
                mag = max(a - r * lam / (r - 1.0), 0.0) / (W - t)
            else:
                mag = a / W
        else:
            small = min(soft / W, lam)
            large = max(a / W, r * lam)
            # small <= lam sits on the linear piece, large >= r*lam on the flat one
            f_small = 0.5 * W * small * small - a * small + lam * small
            f_large = 0.5 * W * large * large - a * large + 0.5 * (r + 1.0) * lam * lam
            mag = large if f_large < f_small else small
    else:
        t = 1.0 / r
        if abs(W - t) <= REGIME_TOL:
            mag = 0.0 if a <= lam else r * a
        elif W > t:
            mag = soft / (W - t) if a <= r * lam * W else a / W
        else:
            large = max(a / W, r * lam)
            f_large = 0.5 * W * large * large - a * large + 0.5 * r * lam * lam
            mag = large if f_large < 0.0 else 0.0
    if mag == 0.0:
        return 0.0
    return mag if Z > 0 else -mag


def update_scalar(kind: PenaltyKind, Z: float, W: float, lam: float, r: float) -> float:
    return update_kernel(KIND_CODE[kind], float(Z), float(W), float(lam), float(r))


def _scalar(config, Z, W, lam):
    if not W > 0:
        raise DegenerateCoordinate(f"W must be positive, got {W}")
    return update_scalar(config.kind, float(Z), float(W), float(lam), config.r)


def coord_update_lasso(Z: float, W: float, lam: float) -> float:
    """Soft(Z, lam) / W."""
    return _scalar(PenaltyConfig(PenaltyKind.LASSO), Z, W, lam)


def coord_update_scad(Z: float, W: float, lam: float, r: float = 3.7) -> float:
    return _scalar(PenaltyConfig(PenaltyKind.SCAD, r), Z, W, lam)


def coord_update_mcp(Z: float, W: float, lam: float, r: float = 3.0) -> float:
    return _scalar(PenaltyConfig(PenaltyKind.MCP, r), Z, W, lam)
