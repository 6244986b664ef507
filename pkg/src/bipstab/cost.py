"""Distance-like cost functions and the likelihood-adapted cost.

Every evaluator broadcasts over leading axes: ``fn(U, V)`` takes arrays of
shape ``(..., d)`` and returns shape ``(...)``. Pairwise cost matrices are
assembled by :meth:`DistanceLikeCost.matrix`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NotMonotone

_CHUNK_ELEMS = 1 << 22


def _norm(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x, axis=-1)


@dataclass(frozen=True)
class DistanceLikeCost:
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    is_metric: bool
    weak_triangle_constant: float = 1.0
    description: str = ""
    # fast (n, d) x (m, d) -> (n, m) path; optional
    pairwise: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    # c(u, 0) for an (n, d) array; optional
    origin: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # power p when the cost is |u - v|^p, which makes the 1D quantile coupling optimal
    euclidean_power: Optional[float] = None

    def __call__(self, u, v):
        out = self.evaluator(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def matrix(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self.pairwise is not None:
            return self.pairwise(X, Y)
        n, m = X.shape[0], Y.shape[0]
        out = np.empty((n, m))
        rows = max(1, _CHUNK_ELEMS // max(1, m * X.shape[1]))
        for s in range(0, n, rows):
            out[s:s + rows] = self.evaluator(X[s:s + rows, None, :], Y[None, :, :])
        return out

    def to_origin(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.origin is not None:
            return self.origin(X)
        return self.evaluator(X, np.zeros_like(X))


def norm_cost(p_power: float = 1.0) -> DistanceLikeCost:
    """c(u, v) = |u - v|^p with the Euclidean norm."""
    if p_power < 1:
        raise ValueError(f"p_power must be >= 1, got {p_power}")
    p = float(p_power)

    def fn(u, v):
        return _norm(u - v) ** p

    return DistanceLikeCost(
        fn,
        is_metric=(p == 1.0),
        weak_triangle_constant=2.0 ** (p - 1.0),
        description=f"norm_p(p={p:g})",
        pairwise=lambda X, Y: cdist(X, Y) ** p,
        origin=lambda X: _norm(X) ** p,
        euclidean_power=p,
    )


def weighted_growth_cost(s: float) -> DistanceLikeCost:
    """c(u, v) = (|u| + |v|)^s |u - v|, the semi-metric of the product coupling lemma."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    s = float(s)
    if s == 0.0:
        base = norm_cost(1.0)
        return DistanceLikeCost(base.evaluator, True, 2.0, "growth_s(s=0)", base.pairwise, base.origin, 1.0)

    def fn(u, v):
        return (_norm(u) + _norm(v)) ** s * _norm(u - v)

    def pairwise(X, Y):
        nx, ny = _norm(X), _norm(Y)
        return (nx[:, None] + ny[None, :]) ** s * cdist(X, Y)

    return DistanceLikeCost(
        fn,
        is_metric=False,
        weak_triangle_constant=2.0 ** max(1.0, 2.0 * s - 1.0),
        description=f"growth_s(s={s:g})",
        pairwise=pairwise,
        origin=lambda X: _norm(X) ** (s + 1.0),
    )


@dataclass(frozen=True)
class AdaptedCostSpec:
    base: DistanceLikeCost
    growth_f: Callable[[np.ndarray], np.ndarray]
    lipschitz_L: Callable[[np.ndarray, np.ndarray, object], np.ndarray]
    data_y: object


def adapted_cost(spec: AdaptedCostSpec) -> DistanceLikeCost:
    """The cost that absorbs the likelihood's growth and local Lipschitz field:

    c_y(u, v) = [1 v c(u,0) v c(v,0)] [f(u) v f(v)] [1 v L(u,v;y)] c(u, v)
    """
    base, f, L, y = spec.base, spec.growth_f, spec.lipschitz_L, spec.data_y
    zero = np.zeros(1)

    def fn(u, v):
        u, v = np.broadcast_arrays(u, v)
        cu = base.evaluator(u, zero * u)
        cv = base.evaluator(v, zero * v)
        return (np.maximum(1.0, np.maximum(cu, cv))
                * np.maximum(f(u), f(v))
                * np.maximum(1.0, L(u, v, y))
                * base.evaluator(u, v))

    def pairwise(X, Y):
        c = base.matrix(X, Y)
        cx, cy = base.to_origin(X), base.to_origin(Y)
        fx, fy = np.asarray(f(X), dtype=float), np.asarray(f(Y), dtype=float)
        lip = np.broadcast_to(np.asarray(L(X[:, None, :], Y[None, :, :], y), dtype=float), c.shape)
        return (np.maximum(1.0, np.maximum(cx[:, None], cy[None, :]))
                * np.maximum(fx[:, None], fy[None, :])
                * np.maximum(1.0, lip)
                * c)

    return DistanceLikeCost(
        fn,
        is_metric=False,
        weak_triangle_constant=float("inf"),
        description=f"adapted({base.description})",
        pairwise=pairwise,
    )


def polynomial_adapted_cost(y_norm: float) -> DistanceLikeCost:
    """c'_y(u, v) = (1 + |u| + |v| + |y|)^2 |u - v|, a polynomial majorant of adapted costs."""
    k = 1.0 + float(y_norm)

    def fn(u, v):
        return (k + _norm(u) + _norm(v)) ** 2 * _norm(np.asarray(u) - np.asarray(v))

    def pairwise(X, Y):
        nx, ny = _norm(X), _norm(Y)
        return (k + nx[:, None] + ny[None, :]) ** 2 * cdist(X, Y)

    return DistanceLikeCost(fn, is_metric=False, weak_triangle_constant=float("inf"),
                            description=f"polynomial_adapted(|y|={y_norm:g})", pairwise=pairwise,
                            origin=None)


def tensorize_uniform_sup(L_field, radius: float, data_y, *, monotone_in_norm: bool = False,
                          maximizer: Optional[Callable] = None):
    """Replace L(u, v; y) by its supremum over data in the ball B_r(data_y).

    The supremum is located either by an explicit ``maximizer(data_y, radius)``
    returning the maximizing data vector, or, for fields declared monotone in
    |y|, at the point of the ball with the largest norm.
    """
    y0 = np.atleast_1d(np.asarray(data_y, dtype=float))
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if maximizer is not None:
        y_star = np.asarray(maximizer(y0, radius), dtype=float)
    elif monotone_in_norm:
        nrm = np.linalg.norm(y0)
        direction = y0 / nrm if nrm > 0 else np.eye(y0.size)[0]
        y_star = y0 + radius * direction
    else:
        raise NotMonotone("supply a maximizer rule or declare the field monotone in |y|")

    def uniform_field(u, v, y=None):
        return L_field(u, v, y_star)

    return uniform_field


COST_REGISTRY = {
    "norm_p": lambda p=1.0: norm_cost(p),
    "growth_s": lambda s=0.0: weighted_growth_cost(s),
}


def cost_from_config(key: str, **params) -> DistanceLikeCost:
    """Named cost constructors; ``adapted`` costs are built by the experiments."""
    if key not in COST_REGISTRY:
        raise KeyError(f"unknown cost {key!r}; known: {sorted(COST_REGISTRY)} (adapted is built from a potential)")
    return COST_REGISTRY[key](**params)
