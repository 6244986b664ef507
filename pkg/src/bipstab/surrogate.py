"""Feed-forward ReLU surrogates of likelihood potentials."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, FitDiverged
from .measure import SeedSpec
from .potential import Potential


@dataclass(frozen=True, eq=False)
class ReluSurrogate:
    """W_L relu(... relu(W_1 u + b_1) ...) + b_L, scalar output.

    ``weights[j]`` has shape (d_{j+1}, d_j) and ``biases[j]`` shape (d_{j+1},).
    """

    weights: tuple
    biases: tuple
    sup_error: Optional[float] = None

    def __post_init__(self):
        W = tuple(np.atleast_2d(np.asarray(w, dtype=float)) for w in self.weights)
        b = tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in self.biases)
        if not W or len(W) != len(b):
            raise ValueError("need one bias per weight matrix and at least one layer")
        for j, (w, v) in enumerate(zip(W, b)):
            if v.shape != (w.shape[0],):
                raise DimensionMismatch(f"layer {j}: bias shape {v.shape} for weight {w.shape}")
            if j and w.shape[1] != W[j - 1].shape[0]:
                raise DimensionMismatch(f"layer {j} expects {w.shape[1]} inputs, gets {W[j - 1].shape[0]}")
        if W[-1].shape[0] != 1:
            raise DimensionMismatch("the output layer must have a single unit")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def depth(self) -> int:
        """Number of hidden layers."""
        return len(self.weights) - 1

    @property
    def size(self) -> int:
        return int(sum(np.count_nonzero(w) + np.count_nonzero(b) for w, b in zip(self.weights, self.biases)))

    def to_json(self) -> str:
        return json.dumps({
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "sup_error": self.sup_error,
        })

    @classmethod
    def from_json(cls, text: str) -> "ReluSurrogate":
        obj = json.loads(text)
        return cls(tuple(obj["weights"]), tuple(obj["biases"]), obj.get("sup_error"))

    def clamped_below(self) -> "ReluSurrogate":
        """max(0, net) as one more ReLU layer followed by the identity."""
        return ReluSurrogate(self.weights + (np.ones((1, 1)),), self.biases + (np.zeros(1),), self.sup_error)


def relu_forward(net: ReluSurrogate, u):
    x = np.asarray(u, dtype=float)
    single = x.ndim == 1
    if x.ndim == 0 or x.shape[-1] != net.input_dim:
        raise DimensionMismatch(f"input has trailing dimension {x.shape[-1:]} but the net expects {net.input_dim}")
    h = x[None, :] if single else x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
    out = (h @ net.weights[-1].T + net.biases[-1])[..., 0]
    return float(out[0]) if single else out


def _grid(domain, n_per_axis: int, d: int) -> np.ndarray:
    lo, hi = domain
    axes = [np.linspace(lo[k], hi[k], n_per_axis) for k in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _as_box(domain, d):
    lo, hi = domain if domain is not None else (0.0, 1.0)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,)).copy()
    if np.any(hi <= lo):
        raise ValueError("empty domain box")
    return lo, hi


def _forward_cache(W, b, X):
    acts = [X]
    pre = []
    h = X
    for w, v in zip(W[:-1], b[:-1]):
        z = h @ w.T + v
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    out = h @ W[-1].T + b[-1]
    return out[:, 0], acts, pre


def _refit_output(W, b, X, t):
    """Least-squares solve for the affine output layer given the hidden features."""
    _, acts, _ = _forward_cache(W, b, X)
    H = np.hstack([acts[-1], np.ones((X.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(H, t, rcond=None)
    W[-1] = coef[:-1][None, :]
    b[-1] = coef[-1:]


def _mse(W, b, X, t):
    out, _, _ = _forward_cache(W, b, X)
    return float(np.mean((out - t) ** 2))


def fit_surrogate(phi, y, grid_n: int, arch: Sequence[int], seed: SeedSpec, *,
                  domain=None, d: Optional[int] = None, iters: int = 6000, lr: float = 1e-3,
                  clamp: Optional[bool] = None, test_factor: int = 8):
    """Fit a ReLU net to u -> Phi(u; y) on a box (default [0, 1]^d).

    Training is least squares on a uniform grid with ``grid_n`` points per
    axis: the output layer is solved exactly, the whole net is then trained
    with full-batch Adam for ``iters`` steps, and the output layer is solved
    once more. The first ``d`` hidden units start as the coordinate ramps
    relu(u_k - lo_k), so affine potentials are fit exactly.

    Returns the net (clamped below at zero when Phi >= 0 on the grid, unless
    ``clamp`` says otherwise) and an estimate of sup |Phi - net| over the box:
    the maximum over a grid ``test_factor`` times finer plus half a grid step
    times the largest observed slopes.
    """
    fn = getattr(phi, "phi", phi)
    if d is None:
        d = np.atleast_1d(np.asarray(domain[0])).size if domain is not None else 1
    lo, hi = _as_box(domain, d)
    X = _grid((lo, hi), grid_n, d)
    t = np.asarray(fn(X, y), dtype=float)
    rng = seed.generator()

    widths = [d] + [int(w) for w in arch] + [1]
    W, b = [], []
    for j in range(len(widths) - 1):
        fan_in, fan_out = widths[j], widths[j + 1]
        w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
        if j == 0:
            # kinks placed uniformly inside the box
            centers = lo + (hi - lo) * rng.random((fan_out, d))
            v = -np.sum(w * centers, axis=1)
        else:
            v = np.full(fan_out, 0.01)
        W.append(w)
        b.append(v)
    if len(widths) > 2:
        k = min(d, widths[1])
        scale = 1.0 / (hi - lo)
        W[0][:k] = 0.0
        W[0][np.arange(k), np.arange(k)] = scale[:k]
        b[0][:k] = -lo[:k] * scale[:k]
        # deeper layers pass the ramps through unchanged
        for j in range(1, len(widths) - 2):
            kk = min(k, widths[j + 1])
            W[j][:kk] = 0.0
            W[j][np.arange(kk), np.arange(kk)] = 1.0
            b[j][:kk] = 0.0

    loss0 = _mse(W, b, X, t)
    _refit_output(W, b, X, t)
    best = _mse(W, b, X, t)
    best_params = ([w.copy() for w in W], [v.copy() for v in b])

    m_w = [np.zeros_like(w) for w in W]
    v_w = [np.zeros_like(w) for w in W]
    m_b = [np.zeros_like(v) for v in b]
    v_b = [np.zeros_like(v) for v in b]
    beta1, beta2, eps = 0.9, 0.999, 1e-12
    n = X.shape[0]
    for it in range(1, iters + 1):
        out, acts, pre = _forward_cache(W, b, X)
        resid = out - t
        loss = float(np.mean(resid**2))
        if not np.isfinite(loss):
            raise FitDiverged(f"non-finite training loss at iteration {it}")
        if loss < best:
            best = loss
            best_params = ([w.copy() for w in W], [v.copy() for v in b])
        delta = (2.0 / n) * resid[:, None]
        step = lr * 0.5 * (1.0 + np.cos(np.pi * it / iters)) + 1e-2 * lr
        for j in range(len(W) - 1, -1, -1):
            gw = delta.T @ acts[j]
            gb = delta.sum(axis=0)
            if j:
                delta = (delta @ W[j]) * (pre[j - 1] > 0)
            m_w[j] = beta1 * m_w[j] + (1 - beta1) * gw
            v_w[j] = beta2 * v_w[j] + (1 - beta2) * gw**2
            m_b[j] = beta1 * m_b[j] + (1 - beta1) * gb
            v_b[j] = beta2 * v_b[j] + (1 - beta2) * gb**2
            c1, c2 = 1 - beta1**it, 1 - beta2**it
            W[j] -= step * (m_w[j] / c1) / (np.sqrt(v_w[j] / c2) + eps)
            b[j] -= step * (m_b[j] / c1) / (np.sqrt(v_b[j] / c2) + eps)

    W, b = best_params
    _refit_output(W, b, X, t)
    final = _mse(W, b, X, t)
    if not np.isfinite(final) or final > max(best, loss0) * (1 + 1e-9) + 1e-300:
        raise FitDiverged(f"training loss went from {loss0:.3e} to {final:.3e}")

    net = ReluSurrogate(tuple(W), tuple(b))
    if clamp is None:
        clamp = bool(np.all(t >= 0))
    if clamp:
        net = net.clamped_below()
    err = sup_error_estimate(fn, y, net, (lo, hi), (grid_n - 1) * test_factor + 1)
    return replace(net, sup_error=err), err


def sup_error_estimate(fn, y, net: ReluSurrogate, box, n_per_axis: int) -> float:
    lo, hi = box
    d = lo.size
    Xt = _grid((lo, hi), n_per_axis, d)
    e = np.asarray(fn(Xt, y), dtype=float) - relu_forward(net, Xt)
    err = float(np.max(np.abs(e)))
    h = (hi - lo) / (n_per_axis - 1)
    grid_shape = (n_per_axis,) * d
    eg = e.reshape(grid_shape)
    slope = 0.0
    for k in range(d):
        slope = max(slope, float(np.max(np.abs(np.diff(eg, axis=k)))) / h[k] if n_per_axis > 1 else 0.0)
    return err + 0.5 * float(np.linalg.norm(h)) * slope


def surrogate_potential(net: ReluSurrogate, base: Potential, sup_error: Optional[float] = None) -> Potential:
    """Wrap a fitted net as a potential with envelopes derived from ``base``.

    With e = sup |Phi - net|: f' = f e^e, g' = g, h' = h e^{-e}.
    """
    err = net.sup_error if sup_error is None else sup_error
    if err is None:
        raise ValueError("a sup-error estimate is required")
    err = float(err)
    grow = float(np.exp(err))

    def phi(u, y):
        return relu_forward(net, np.asarray(u, dtype=float))

    return Potential(
        phi,
        envelope_f=lambda u: base.envelope_f(u) * grow,
        envelope_g=base.envelope_g,
        envelope_h=lambda u, y: base.envelope_h(u, y) / grow,
        log_envelope_h=lambda u, y: base.log_h(u, y) - err,
        name=f"surrogate({base.name},err={err:.3g})",
    )
