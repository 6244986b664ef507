"""Likelihood potentials together with their envelope functions.

A :class:`Potential` bundles Phi(u; y) with functions f, g, h such that

    -log f(u) - log g(y) <= Phi(u; y) <= -log h(u, y),

an optional local Lipschitz field L with |Phi(u;y) - Phi(v;y)| <= L(u,v;y) c(u,v),
and an optional data-Lipschitz field b with |Phi(u;y) - Phi(u;y')| <= b(u) |y - y'|
for y' in a ball of radius ``data_ball_radius`` around the data.

All callables broadcast over leading axes of ``(..., d)`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import EnvelopeViolation, MissingEnvelope

Array = np.ndarray


def _norm(x):
    return np.linalg.norm(x, axis=-1)


def _ones_like_points(u):
    return np.ones(np.shape(u)[:-1])


@dataclass(frozen=True)
class Potential:
    phi: Callable[[Array, object], Array]
    envelope_f: Callable[[Array], Array]
    envelope_g: Callable[[object], float]
    envelope_h: Callable[[Array, object], Array]
    lipschitz_L: Optional[Callable[[Array, Array, object], Array]] = None
    data_lipschitz_b: Optional[Callable[[Array], Array]] = None
    data_ball_radius: Optional[float] = None
    # log h, used to keep evidence lower bounds finite when h underflows
    log_envelope_h: Optional[Callable[[Array, object], Array]] = None
    name: str = ""

    def __call__(self, u, y):
        return self.phi(np.asarray(u, dtype=float), y)

    def log_h(self, u, y) -> Array:
        if self.log_envelope_h is not None:
            return np.asarray(self.log_envelope_h(u, y), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.envelope_h(u, y), dtype=float))

    def with_data_ball(self, radius: float, b: Callable) -> "Potential":
        return replace(self, data_ball_radius=radius, data_lipschitz_b=b)


def check_envelopes(pot: Potential, points, y, *, rtol: float = 1e-9) -> None:
    """Raise :class:`EnvelopeViolation` unless the sandwich holds at every point."""
    points = np.atleast_2d(points)
    phi = np.asarray(pot.phi(points, y), dtype=float)
    lower = -np.log(pot.envelope_f(points)) - np.log(pot.envelope_g(y))
    upper = -pot.log_h(points, y)
    slack = rtol * (1.0 + np.abs(phi))
    bad_lo = np.flatnonzero(phi < lower - slack)
    bad_hi = np.flatnonzero(phi > upper + slack)
    if bad_lo.size or bad_hi.size:
        i = int(bad_lo[0] if bad_lo.size else bad_hi[0])
        raise EnvelopeViolation(
            f"envelope sandwich fails at {bad_lo.size + bad_hi.size} of {len(points)} points; "
            f"first at u={points[i]}: {lower[i]:.6g} <= {phi[i]:.6g} <= {upper[i]:.6g} is false")


def check_lipschitz(pot: Potential, cost, U, V, y, *, rtol: float = 1e-9) -> float:
    """Largest ratio |Phi(u)-Phi(v)| / (L c) over the pairs; raises if it exceeds 1 + rtol."""
    if pot.lipschitz_L is None:
        raise MissingEnvelope("potential carries no Lipschitz field")
    U, V = np.atleast_2d(U), np.atleast_2d(V)
    diff = np.abs(pot.phi(U, y) - pot.phi(V, y))
    cap = np.asarray(pot.lipschitz_L(U, V, y), dtype=float) * cost.evaluator(U, V)
    mask = cap > 0
    ratio = float(np.max(diff[mask] / cap[mask])) if np.any(mask) else 0.0
    if np.any(diff[~mask] > 0) or ratio > 1.0 + rtol:
        raise EnvelopeViolation(f"Lipschitz field violated: worst ratio {ratio:.6g}")
    return ratio


@dataclass(frozen=True)
class ForwardMap:
    """Forward operator G: R^d -> R^m with the metadata needed for envelopes.

    ``kind`` is ``"tanh"`` (componentwise tanh, so |G(u)| <= sqrt(d)) or
    ``"linear"`` (G(u) = A u with operator norm ``operator_norm_bound``).
    """

    g_map: Callable[[Array], Array]
    output_dim: int
    input_dim: int
    kind: str = "generic"
    operator_norm_bound: Optional[float] = None
    matrix: Optional[Array] = None

    def __call__(self, u):
        return self.g_map(np.asarray(u, dtype=float))


def tanh_forward(d: int) -> ForwardMap:
    return ForwardMap(np.tanh, output_dim=d, input_dim=d, kind="tanh", operator_norm_bound=1.0)


def linear_forward(A) -> ForwardMap:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    A.flags.writeable = False
    return ForwardMap(
        lambda u: u @ A.T,
        output_dim=A.shape[0],
        input_dim=A.shape[1],
        kind="linear",
        operator_norm_bound=float(np.linalg.norm(A, 2)),
        matrix=A,
    )


def gaussian_residual_potential(fwd: ForwardMap, sigma: float) -> Potential:
    """Phi(u; y) = |G(u) - y|^2 / (2 sigma^2) with envelopes for its forward map.

    tanh maps get f = g = 1, h = exp(-(d + |y|^2)/sigma^2) and the constant
    Lipschitz field (sqrt(d) + |y|)/sigma^2. Linear maps with operator norm
    ||G|| get h = exp(-(k ||G|| |u|^2 + |y|^2)/sigma^2) with k = max(1, ||G||)
    and L(u, v; y) = ||G||/sigma^2 (max(1, ||G||/2)(|u| + |v|) + |y|).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s2 = float(sigma) ** 2

    def phi(u, y):
        r = fwd.g_map(np.asarray(u, dtype=float)) - np.asarray(y, dtype=float)
        return 0.5 * np.sum(r * r, axis=-1) / s2

    one = lambda y: 1.0

    if fwd.kind == "tanh":
        d = fwd.output_dim

        def log_h(u, y):
            return np.full(np.shape(u)[:-1], -(d + float(np.sum(np.square(y)))) / s2)

        def lip(u, v, y):
            shape = np.broadcast_shapes(np.shape(u)[:-1], np.shape(v)[:-1])
            return np.full(shape, (np.sqrt(d) + float(np.linalg.norm(y))) / s2)

        return Potential(phi, _ones_like_points, one, lambda u, y: np.exp(log_h(u, y)), lip,
                         log_envelope_h=log_h, name=f"tanh_regression(d={d},sigma={sigma:g})")

    if fwd.kind == "linear" and fwd.operator_norm_bound is not None:
        gn = float(fwd.operator_norm_bound)
        quad = max(1.0, gn) * gn

        def log_h(u, y):
            return -(quad * _norm(np.asarray(u, dtype=float)) ** 2 + float(np.sum(np.square(y)))) / s2

        def lip(u, v, y):
            return gn / s2 * (max(1.0, gn / 2.0) * (_norm(u) + _norm(v)) + float(np.linalg.norm(y)))

        return Potential(phi, _ones_like_points, one, lambda u, y: np.exp(log_h(u, y)), lip,
                         log_envelope_h=log_h, name=f"linear(m={fwd.output_dim},sigma={sigma:g})")

    raise MissingEnvelope(f"forward map of kind {fwd.kind!r} carries no boundedness metadata")


def tanh_data_lipschitz(pot: Potential, fwd: ForwardMap, sigma: float, y, radius: float) -> Potential:
    """Attach b(u) = (|G(u)| + |y| + r)/sigma^2, valid for all y' in B_r(y)."""
    ynorm = float(np.linalg.norm(y))

    def b(u):
        return (_norm(fwd.g_map(np.asarray(u, dtype=float))) + ynorm + radius) / sigma**2

    return pot.with_data_ball(radius, b)


def shifted_potential(pot: Potential, delta: float) -> Potential:
    """Phi + delta, with envelopes adjusted so the sandwich still holds."""
    e = float(np.exp(-delta))
    return replace(
        pot,
        phi=lambda u, y: pot.phi(u, y) + delta,
        envelope_f=lambda u: pot.envelope_f(u) * max(1.0, e),
        envelope_h=lambda u, y: pot.envelope_h(u, y) * min(1.0, e),
        log_envelope_h=lambda u, y: pot.log_h(u, y) + min(0.0, -delta),
        name=f"{pot.name}+{delta:g}",
    )


def merged_envelopes(a: Potential, b: Potential):
    """Common envelopes f v f', g v g', h ^ h' for a pair of potentials."""

    def f(u):
        return np.maximum(a.envelope_f(u), b.envelope_f(u))

    def g(y):
        return max(a.envelope_g(y), b.envelope_g(y))

    def log_h(u, y):
        return np.minimum(a.log_h(u, y), b.log_h(u, y))

    return f, g, log_h


# ---------------------------------------------------------------------------
# smooth compactly supported filters for the function-space regression


def bump(t, center: float, halfwidth: float):
    """exp(-1/(1 - s^2)) for s = (t - center)/halfwidth inside the support, 0 outside."""
    s = (np.asarray(t, dtype=float) - center) / halfwidth
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def gauss_legendre_on(a: float, b: float, nodes: int = 64, panels: int = 1):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        xs.append(lo + half * (x + 1.0))
        ws.append(half * w)
    return np.concatenate(xs), np.concatenate(ws)


def filter_centers(m: int, halfwidth: float = 0.1) -> np.ndarray:
    """m equispaced centers whose supports stay inside (0, 1)."""
    return halfwidth + (1.0 - 2.0 * halfwidth) * (np.arange(m) + 0.5) / m


def filter_matrix(m: int, eigenfunctions: Callable, J: int, halfwidth: float = 0.1,
                  nodes: int = 16, panels: int = 4) -> np.ndarray:
    """K[i, j] = <kappa_i, x_j> for unit-mass bump filters kappa_i.

    ``eigenfunctions(t)`` returns the (len(t), J) matrix of basis values.
    """
    K = np.empty((m, J))
    for i, c in enumerate(filter_centers(m, halfwidth)):
        t, w = gauss_legendre_on(c - halfwidth, c + halfwidth, nodes, panels)
        kap = bump(t, c, halfwidth)
        kap /= np.dot(w, kap)
        K[i] = (w * kap) @ eigenfunctions(t)
    return K
