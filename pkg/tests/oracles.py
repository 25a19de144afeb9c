"""Independent reference implementations used by the tests."""

import numpy as np


def penalty_closed_form(kind, t, lam, r):
    """Penalty on |beta| written from the textbook piecewise definitions."""
    t = np.abs(t)
    if kind == "lasso":
        return lam * t
    if kind == "scad":
        return np.piecewise(
            t, [t <= lam, (t > lam) & (t <= r * lam), t > r * lam],
            [lambda u: lam * u,
             lambda u: -(u * u - 2 * r * lam * u + lam * lam) / (2 * (r - 1)),
             lambda u: (r + 1) * lam * lam / 2])
    return np.piecewise(t, [t <= r * lam, t > r * lam],
                        [lambda u: lam * u - u * u / (2 * r), lambda u: r * lam * lam / 2])


def brute_force_update(kind, Z, W, lam, r, coarse=1e-4, fine=1e-7, delta=0.05):
    """
    argmin_b  W b^2 / 2 - Z b + pen(b)  by grid search.

    A grid of step ``coarse`` over [-|Z|/W - delta, |Z|/W + delta] (zero included)
    is refined with step ``fine`` around its best point.
    """
    half = abs(Z) / W + delta
    grid = np.concatenate([np.arange(-half, half, coarse), [0.0]])

    def obj(b):
        return 0.5 * W * b * b - Z * b + penalty_closed_form(kind, b, lam, r)

    best = grid[np.argmin(obj(grid))]
    local = np.concatenate([np.arange(best - 2 * coarse, best + 2 * coarse, fine), [0.0, best]])
    vals = obj(local)
    return float(local[np.argmin(vals)]), float(vals.min())


def pooled_ols(X, y, support):
    beta = np.zeros(X.shape[1])
    Xa = X[:, support]
    beta[support] = np.linalg.solve(Xa.T @ Xa, Xa.T @ y)
    return beta
