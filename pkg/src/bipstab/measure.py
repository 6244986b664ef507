"""Weighted particle measures, seeded sampling and Bayes reweighting."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .errors import AllWeightsUnderflow, DimensionMismatch

WEIGHT_RTOL = 1e-12


@dataclass(frozen=True)
class SeedSpec:
    """A reproducible random stream.

    Streams are derived from ``(root_seed, stream_id)`` through a
    counter-based Philox generator, so distinct stream ids never share
    state and can be consumed in any order or in parallel.
    """

    root_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.root_seed < 2**64:
            raise ValueError(f"root_seed must be a 64-bit unsigned integer, got {self.root_seed}")
        if self.stream_id < 0:
            raise ValueError(f"stream_id must be nonnegative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, offset: int) -> "SeedSpec":
        return SeedSpec(self.root_seed, self.stream_id + offset)


@dataclass(frozen=True, eq=False)
class ParticleMeasure:
    """Probability measure sum_i w_i delta_{x_i} on R^d.

    ``points`` has shape (n, d) and ``weights`` shape (n,). Arrays are
    copied and made read-only on construction.
    """

    points: np.ndarray
    weights: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError(f"points must be a non-empty (n, d) array, got shape {pts.shape}")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise DimensionMismatch(f"{w.shape[0]} weights for {pts.shape[0]} points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = w.sum()
        if abs(total - 1.0) > WEIGHT_RTOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dim", pts.shape[1])

    @classmethod
    def uniform(cls, points) -> "ParticleMeasure":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    @classmethod
    def from_unnormalized(cls, points, weights) -> "ParticleMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum())

    @classmethod
    def dirac(cls, point) -> "ParticleMeasure":
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), np.ones(1))

    def __len__(self) -> int:
        return self.points.shape[0]

    def with_weights(self, weights) -> "ParticleMeasure":
        return ParticleMeasure(self.points, weights)

    def permuted(self, perm) -> "ParticleMeasure":
        perm = np.asarray(perm)
        return ParticleMeasure(self.points[perm], self.weights[perm])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["w"] + [f"x{k + 1}" for k in range(self.dim)])
        for w, x in zip(self.weights, self.points):
            writer.writerow([_fmt(w)] + [_fmt(v) for v in x])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ParticleMeasure":
        rows = list(csv.reader(io.StringIO(text)))
        header = [h.strip() for h in rows[0]]
        if not header or header[0] != "w" or header[1:] != [f"x{k + 1}" for k in range(len(header) - 1)]:
            raise ValueError(f"bad particle CSV header {header}")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        return cls(data[:, 1:], data[:, 0])


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def sample_standard_gaussian(dim: int, n: int, seed: SeedSpec) -> ParticleMeasure:
    if dim < 1 or n < 1:
        raise ValueError("dim and n must be positive")
    pts = seed.generator().standard_normal((n, dim))
    return ParticleMeasure.uniform(pts)


def log_likelihood_weights(prior: ParticleMeasure, phi: Callable, y) -> tuple[np.ndarray, float]:
    """Return normalized posterior weights and log of the evidence estimate."""
    potential = np.asarray(phi(prior.points, y), dtype=float).reshape(-1)
    if potential.shape[0] != len(prior):
        raise DimensionMismatch("potential must return one value per particle")
    with np.errstate(divide="ignore"):
        logw = np.log(prior.weights) - potential
    if not np.any(np.isfinite(logw)):
        raise AllWeightsUnderflow("exp(-phi) vanishes at every particle")
    log_z = logsumexp(logw)
    if not np.isfinite(log_z):
        raise AllWeightsUnderflow(f"log evidence is {log_z}")
    w = np.exp(logw - log_z)
    return w / w.sum(), float(log_z)


def reweight(prior: ParticleMeasure, phi, y) -> tuple[ParticleMeasure, float]:
    """Bayes' rule on particles.

    ``phi`` is either a :class:`~bipstab.potential.Potential` or a plain
    callable ``phi(points, y)``. Returns the posterior on the same points
    and the self-normalized evidence estimate ``sum_i w_i exp(-phi(u_i))``.

    Raises :class:`AllWeightsUnderflow` when the evidence itself is not
    representable, which happens when the likelihood sits far out in the
    prior tails.
    """
    fn = getattr(phi, "phi", phi)
    w, log_z = log_likelihood_weights(prior, fn, y)
    with np.errstate(over="ignore"):
        z_hat = float(np.exp(log_z))
    if z_hat == 0.0:
        raise AllWeightsUnderflow(f"evidence underflows (log Z = {log_z:.1f})")
    return prior.with_weights(w), z_hat


def weighted_moment(m: ParticleMeasure, f: Callable) -> float:
    vals = np.asarray(f(m.points), dtype=float).reshape(-1)
    return float(np.dot(m.weights, vals))


def weighted_moment_se(m: ParticleMeasure, f: Callable) -> tuple[float, float]:
    """Weighted mean of ``f`` with its self-normalized standard error."""
    vals = np.asarray(f(m.points), dtype=float).reshape(-1)
    mean = float(np.dot(m.weights, vals))
    se = float(np.sqrt(np.sum(m.weights**2 * (vals - mean) ** 2)))
    return mean, se


def norms(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(points), axis=-1)
