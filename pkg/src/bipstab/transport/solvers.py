"""Optimal transport between particle measures."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from ..cost import DistanceLikeCost
from ..errors import DimensionMismatch, InstanceTooLarge, MaxIterExceeded, UnbalancedWeights
from ..measure import ParticleMeasure
from . import _simplex

DEFAULT_CAP = 4096 * 4096
BALANCE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TransportPlan:
    coupling: np.ndarray
    primal_cost: float
    dual_u: np.ndarray
    dual_v: np.ndarray
    solver_tag: str
    converged: bool = True
    iterations: int = 0

    @property
    def dual_value(self) -> float:
        a = self.coupling.sum(axis=1)
        b = self.coupling.sum(axis=0)
        return float(np.dot(a, self.dual_u) + np.dot(b, self.dual_v))

    def to_csv(self, threshold: float = 0.0) -> str:
        rows = ["i,j,mass"]
        ii, jj = np.nonzero(self.coupling > threshold)
        for i, j in zip(ii, jj):
            rows.append(f"{i},{j},{self.coupling[i, j]:.17g}")
        return "\n".join(rows) + "\n"


def _check_pair(source: ParticleMeasure, target: ParticleMeasure):
    if source.dim != target.dim:
        raise DimensionMismatch(f"source has dim {source.dim}, target {target.dim}")
    gap = abs(source.weights.sum() - target.weights.sum())
    if gap > BALANCE_TOL:
        raise UnbalancedWeights(f"total masses differ by {gap:.3g}")


def solve_cost_matrix(a, b, C, *, max_iter: Optional[int] = None) -> TransportPlan:
    """Exact transport for an explicit cost matrix (network simplex)."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    n, m = C.shape
    if abs(a.sum() - b.sum()) > BALANCE_TOL:
        raise UnbalancedWeights(f"total masses differ by {abs(a.sum() - b.sum()):.3g}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    block = max(10, int(np.sqrt(n * m)))
    if max_iter is None:
        max_iter = 100 * (n + m) ** 2 + 1000
    plan, pi, status, iters = _simplex.network_simplex(a, b, C, max_iter, block)
    if status == _simplex.INFEASIBLE:
        raise RuntimeError("network simplex ended with flow on artificial arcs")
    converged = status == _simplex.OPTIMAL
    if not converged:
        warnings.warn(f"network simplex hit max_iter={max_iter}", MaxIterExceeded, stacklevel=2)
    u = -pi[:n]
    v = pi[n:]
    shift = u[0]
    u = u - shift
    v = v + shift
    primal = float(np.sum(plan * C))
    return TransportPlan(plan, primal, u, v, "exact", converged, int(iters))


def exact_ot(source: ParticleMeasure, target: ParticleMeasure, cost: DistanceLikeCost, *,
             cap: int = DEFAULT_CAP) -> TransportPlan:
    """Optimal coupling, transport cost and dual potentials."""
    _check_pair(source, target)
    n, m = len(source), len(target)
    if n * m > cap:
        raise InstanceTooLarge(f"{n} x {m} exceeds the cap of {cap} entries")
    if _identical(source, target):
        # the diagonal plan is optimal with zero cost and zero duals
        return TransportPlan(np.diag(source.weights.copy()), 0.0, np.zeros(n), np.zeros(m), "exact", True, 0)
    C = cost.matrix(source.points, target.points)
    return solve_cost_matrix(source.weights, target.weights, C)


def _identical(source: ParticleMeasure, target: ParticleMeasure) -> bool:
    return (source.points.shape == target.points.shape
            and np.array_equal(source.points, target.points)
            and np.array_equal(source.weights, target.weights))


def quantile_cost_1d(xs, ws, xt, wt, p: float = 1.0) -> float:
    """int_0^1 |F^-1(q) - G^-1(q)|^p dq for discrete 1D measures."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    xt = np.asarray(xt, dtype=float).reshape(-1)
    ws = np.asarray(ws, dtype=float).reshape(-1)
    wt = np.asarray(wt, dtype=float).reshape(-1)
    i = np.argsort(xs, kind="stable")
    j = np.argsort(xt, kind="stable")
    xs, ws, xt, wt = xs[i], ws[i], xt[j], wt[j]
    cs = np.cumsum(ws)
    ct = np.cumsum(wt)
    total = min(cs[-1], ct[-1])
    qs = np.unique(np.concatenate([[0.0], cs, ct]))
    qs = qs[qs <= total]
    if qs[-1] < total:
        qs = np.append(qs, total)
    lengths = np.diff(qs)
    mids = qs[:-1] + 0.5 * lengths
    ia = np.minimum(np.searchsorted(cs, mids, side="right"), len(xs) - 1)
    ib = np.minimum(np.searchsorted(ct, mids, side="right"), len(xt) - 1)
    return float(np.sum(lengths * np.abs(xs[ia] - xt[ib]) ** p))


def w1_1d_oracle(source: ParticleMeasure, target: ParticleMeasure, p: float = 1.0) -> float:
    """W_p between 1D particle measures through the monotone (quantile) coupling."""
    if source.dim != 1 or target.dim != 1:
        raise DimensionMismatch("the quantile oracle needs 1D measures")
    if p < 1:
        raise ValueError("p must be >= 1")
    _check_pair(source, target)
    return quantile_cost_1d(source.points[:, 0], source.weights, target.points[:, 0], target.weights, p) ** (1.0 / p)


def sinkhorn(source: ParticleMeasure, target: ParticleMeasure, cost: DistanceLikeCost,
             epsilon: float, max_iter: int = 10_000, tol: float = 1e-9) -> TransportPlan:
    """Entropic transport plan, iterated in the log domain.

    ``primal_cost`` is the transport cost of the regularized plan. The
    returned dual potentials are c-transformed so they are feasible.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _check_pair(source, target)
    C = cost.matrix(source.points, target.points)
    a, b = source.weights, target.weights
    sa, sb = a > 0, b > 0
    Cr = C[np.ix_(sa, sb)]
    la, lb = np.log(a[sa]), np.log(b[sb])
    f = np.zeros(sa.sum())
    g = np.zeros(sb.sum())
    err = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        f = epsilon * (la - logsumexp((g[None, :] - Cr) / epsilon, axis=1))
        g = epsilon * (lb - logsumexp((f[:, None] - Cr) / epsilon, axis=0))
        if it % 10 == 0 or it == max_iter:
            P = np.exp((f[:, None] + g[None, :] - Cr) / epsilon)
            err = float(np.abs(P.sum(axis=1) - a[sa]).sum())
            if err <= tol:
                break
    P = np.exp((f[:, None] + g[None, :] - Cr) / epsilon)
    converged = err <= tol
    if not converged:
        warnings.warn(f"sinkhorn stopped after {max_iter} iterations (marginal error {err:.2e})",
                      MaxIterExceeded, stacklevel=2)
    plan = np.zeros_like(C)
    plan[np.ix_(sa, sb)] = P
    u = np.zeros(len(a))
    u[sa] = f
    v = np.min(C[sa] - f[:, None], axis=0)
    if np.any(~sa):
        u[~sa] = np.min(C[~sa] - v[None, :], axis=1)
    return TransportPlan(plan, float(np.sum(plan * C)), u, v, f"sinkhorn(eps={epsilon:g})", converged, it)


class IPMValue(NamedTuple):
    value: float
    mode: str  # "exact" or "upper_bound"


def _quantile_applicable(source, target, cost) -> bool:
    return source.dim == 1 and cost.euclidean_power is not None


def transport_cost(source: ParticleMeasure, target: ParticleMeasure, cost: DistanceLikeCost,
                   solver: str = "auto", **solver_opts) -> float:
    """Optimal transport cost W(source, target; cost).

    ``solver="auto"`` uses the quantile coupling for 1D measures under
    |u - v|^p costs (optimal there for every p >= 1) and the network
    simplex otherwise.
    """
    if solver == "auto":
        solver = "quantile" if _quantile_applicable(source, target, cost) else "exact"
    if solver == "quantile":
        _check_pair(source, target)
        return quantile_cost_1d(source.points[:, 0], source.weights, target.points[:, 0], target.weights,
                                cost.euclidean_power)
    if solver == "exact":
        return exact_ot(source, target, cost, **solver_opts).primal_cost
    if solver == "sinkhorn":
        return sinkhorn(source, target, cost, **solver_opts).primal_cost
    raise ValueError(f"unknown solver {solver!r}")


def ipm_value(source: ParticleMeasure, target: ParticleMeasure, cost: DistanceLikeCost,
              solver: str = "exact", **solver_opts) -> IPMValue:
    """The Lipschitz-ball IPM for ``cost``, or the transport upper bound on it.

    For metric costs the IPM equals the transport cost (Kantorovich duality);
    otherwise the transport cost is only an upper bound.
    """
    value = transport_cost(source, target, cost, solver, **solver_opts)
    return IPMValue(value, "exact" if cost.is_metric else "upper_bound")


def coupling_cost(pairs, cost: DistanceLikeCost, weights=None):
    """Integral of the cost against an explicit coupling given by paired samples.

    ``pairs`` is a tuple ``(U, V)`` of equally long (n, d) arrays. Returns the
    estimate and its standard error.
    """
    U, V = pairs
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if U.shape != V.shape:
        raise DimensionMismatch(f"paired samples have shapes {U.shape} and {V.shape}")
    vals = np.asarray(cost.evaluator(U, V), dtype=float)
    n = len(vals)
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    mean = float(np.dot(w, vals))
    se = float(np.sqrt(np.sum(w**2 * (vals - mean) ** 2)))
    return mean, se
