"""Regularizers on the probability simplex.

Both regularizers are 1-strongly convex with respect to their associated
norm (l1 for negative entropy, l2 for squared Euclidean); every regret
certificate in this package leans on that property.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NegativeEntropy",
    "SquaredEuclidean",
    "get_regularizer",
    "project_simplex",
    "softmax",
]


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max-subtraction)."""
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex.

    Full-sort threshold method: sort descending, find the largest k with
    v_(k) + (1 - sum_{j<=k} v_(j)) / k > 0, clip at that threshold.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    cond = u + (1.0 - css) / k > 0.0
    rho = k[cond][-1]
    theta = (css[rho - 1] - 1.0) / rho
    return np.maximum(v - theta, 0.0)


def _check_dim(d: int) -> None:
    if d < 1:
        raise ValueError(f"simplex dimension must be >= 1, got {d}")


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite entries")
    return x


class NegativeEntropy:
    """R(w) = sum_k w_k ln w_k, 1-strongly convex w.r.t. the l1 norm."""

    name = "entropy"
    primal_norm = "l1"
    dual_norm = "linf"

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(np.sum(np.where(w > 0.0, w * np.log(np.where(w > 0.0, w, 1.0)), 0.0)))

    def initial_point(self, d: int) -> np.ndarray:
        _check_dim(d)
        return np.full(d, 1.0 / d)

    def ftrl_argmax(self, G, eta: float) -> np.ndarray:
        """argmax over the simplex of <w, G> - R(w)/eta (softmax of eta*G)."""
        if eta <= 0.0:
            raise ValueError(f"eta must be positive, got {eta}")
        G = _check_finite(G, "cumulative utility vector")
        return softmax(eta * G)

    def prox_step(self, g, u, eta: float) -> np.ndarray:
        """Prox point: argmax of eta*<w, u> - D(w, g); closed form g*exp(eta*u)."""
        if eta <= 0.0:
            raise ValueError(f"eta must be positive, got {eta}")
        g = np.asarray(g, dtype=float)
        zeros = np.flatnonzero(g <= 0.0)
        if zeros.size:
            raise ValueError(
                f"entropy prox requires an interior point; coordinate {zeros[0]} is zero"
            )
        u = _check_finite(u, "utility vector")
        return softmax(np.log(g) + eta * u)

    def bregman(self, w, g) -> float:
        """KL divergence of w from g (g interior)."""
        g = np.asarray(g, dtype=float)
        zeros = np.flatnonzero(g <= 0.0)
        if zeros.size:
            raise ValueError(
                f"KL divergence needs an interior base point; coordinate {zeros[0]} is zero"
            )
        w = np.asarray(w, dtype=float)
        safe = np.where(w > 0.0, w, 1.0)
        return float(np.sum(np.where(w > 0.0, w * (np.log(safe) - np.log(g)), 0.0)))

    def norm(self, x) -> float:
        return float(np.abs(x).sum())

    def r_ftrl(self, d: int) -> float:
        """Range of R over the d-simplex: 0 - (-ln d) = ln d."""
        _check_dim(d)
        return float(np.log(d))

    def r_omd(self, d: int) -> float:
        """sup_f D(f, uniform) = ln d, attained at a vertex."""
        _check_dim(d)
        return float(np.log(d))


class SquaredEuclidean:
    """R(w) = ||w||^2 / 2, 1-strongly convex w.r.t. the l2 norm."""

    name = "euclidean"
    primal_norm = "l2"
    dual_norm = "l2"

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return 0.5 * float(w @ w)

    def initial_point(self, d: int) -> np.ndarray:
        _check_dim(d)
        return np.full(d, 1.0 / d)

    def ftrl_argmax(self, G, eta: float) -> np.ndarray:
        """argmax of <w, G> - ||w||^2/(2 eta): projection of eta*G onto the simplex."""
        if eta <= 0.0:
            raise ValueError(f"eta must be positive, got {eta}")
        G = _check_finite(G, "cumulative utility vector")
        return project_simplex(eta * G)

    def prox_step(self, g, u, eta: float) -> np.ndarray:
        if eta <= 0.0:
            raise ValueError(f"eta must be positive, got {eta}")
        g = np.asarray(g, dtype=float)
        u = _check_finite(u, "utility vector")
        return project_simplex(g + eta * u)

    def bregman(self, w, g) -> float:
        w = np.asarray(w, dtype=float)
        g = np.asarray(g, dtype=float)
        diff = w - g
        return 0.5 * float(diff @ diff)

    def norm(self, x) -> float:
        return float(np.sqrt(np.sum(np.square(x))))

    def r_ftrl(self, d: int) -> float:
        """Range of ||w||^2/2 on the simplex: (1 - 1/d) / 2 (vertex minus uniform)."""
        _check_dim(d)
        return 0.5 * (1.0 - 1.0 / d)

    def r_omd(self, d: int) -> float:
        """max_f ||f - uniform||^2 / 2 = (d - 1) / (2d), attained at a vertex."""
        _check_dim(d)
        return (d - 1.0) / (2.0 * d)


_REGISTRY = {
    "entropy": NegativeEntropy,
    "euclidean": SquaredEuclidean,
}


def get_regularizer(name: str):
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(
            f"unknown regularizer {name!r}; expected one of {sorted(_REGISTRY)}"
        ) from None
