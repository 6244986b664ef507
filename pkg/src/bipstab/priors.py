"""Prior families: truncated Karhunen-Loeve Gaussians, empirical
subsamples and pushforwards of a reference measure."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainEscape
from .measure import ParticleMeasure, SeedSpec

DOMAIN_TOL = 1e-12


def laplacian_spectrum_1d(J: int):
    """Dirichlet Laplacian on [0, 1]: eigenvalues (pi j)^2 and x_j(t) = sqrt(2) sin(pi j t).

    The evaluator maps an array of t values to a (len(t), J) matrix.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    j = np.arange(1, J + 1)
    eig = (np.pi * j) ** 2

    def evaluate(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.sqrt(2.0) * np.sin(np.pi * t[:, None] * j[None, :])

    return eig, evaluate


@dataclass(frozen=True)
class KLSpec:
    """Matern-type Gaussian N(0, gamma^2 (Laplacian + tau)^(-2 alpha)) on [0, 1], truncated at J modes."""

    gamma: float = 100.0
    tau: float = 1.0
    alpha: int = 2
    truncation_J: int = 32

    def __post_init__(self):
        if self.gamma < 0 or self.tau < 0 or self.alpha < 1 or self.truncation_J < 1:
            raise ValueError(f"invalid KL parameters {self}")

    def eigenvalues(self) -> np.ndarray:
        lap, _ = laplacian_spectrum_1d(self.truncation_J)
        return self.gamma**2 * (lap + self.tau) ** (-2.0 * self.alpha)

    def tail_fraction(self, terms: int = 200_000) -> float:
        """sum_{j > J} lambda_j / sum_j lambda_j, summing the tail to ``terms`` modes."""
        j = np.arange(1, terms + 1, dtype=float)
        lam = (np.pi**2 * j**2 + self.tau) ** (-2.0 * self.alpha)
        return float(lam[self.truncation_J:].sum() / lam.sum())

    def perturbed(self, d_gamma: float, d_tau: float) -> "KLSpec":
        return KLSpec(self.gamma + d_gamma, self.tau + d_tau, self.alpha, self.truncation_J)


def kl_coefficients(spec: KLSpec, xi: np.ndarray) -> np.ndarray:
    """Map standard normal draws (n, J) to KL coefficients sqrt(lambda_j) xi_j."""
    return np.asarray(xi) * np.sqrt(spec.eigenvalues())[None, :]


def kl_gaussian_sampler(spec: KLSpec, n: int, seed: SeedSpec) -> ParticleMeasure:
    """n draws of the coefficient vector (sqrt(lambda_1) xi_1, ..., sqrt(lambda_J) xi_J).

    The Euclidean norm of the coefficients equals the L^2(0, 1) norm of the
    field because the eigenfunctions are orthonormal.
    """
    xi = seed.generator().standard_normal((n, spec.truncation_J))
    return ParticleMeasure.uniform(kl_coefficients(spec, xi))


def kl_field(coefficients: np.ndarray, t) -> np.ndarray:
    """Evaluate fields sum_j c_j x_j(t) for coefficient rows."""
    J = np.shape(coefficients)[-1]
    _, basis = laplacian_spectrum_1d(J)
    return np.asarray(coefficients) @ basis(t).T


def empirical_subsample(base: Callable[[int, SeedSpec], ParticleMeasure], N: int, seed: SeedSpec) -> ParticleMeasure:
    """N i.i.d. draws from a sampler ``base(n, seed)`` with equal weights."""
    if N < 1:
        raise ValueError("N must be >= 1")
    draws = base(N, seed)
    return ParticleMeasure.uniform(draws.points)


def resample(measure: ParticleMeasure, N: int, seed: SeedSpec) -> ParticleMeasure:
    """N i.i.d. draws from a particle measure."""
    idx = seed.generator().choice(len(measure), size=N, replace=True, p=measure.weights)
    return ParticleMeasure.uniform(measure.points[idx])


def uniform_box_sampler(d: int, lo: float = 0.0, hi: float = 1.0):
    def sample(n: int, seed: SeedSpec) -> ParticleMeasure:
        return ParticleMeasure.uniform(lo + (hi - lo) * seed.generator().random((n, d)))

    return sample


def gaussian_sampler(d: int, mean=0.0, scale: float = 1.0):
    def sample(n: int, seed: SeedSpec) -> ParticleMeasure:
        return ParticleMeasure.uniform(mean + scale * seed.generator().standard_normal((n, d)))

    return sample


@dataclass(frozen=True)
class PushforwardSpec:
    transport: Callable[[np.ndarray], np.ndarray]
    reference: Callable[[int, SeedSpec], ParticleMeasure]
    domain: tuple = (0.0, 1.0)


def push_points(transport: Callable, X: np.ndarray, domain=(0.0, 1.0)) -> np.ndarray:
    Y = np.asarray(transport(X), dtype=float).reshape(X.shape)
    lo, hi = domain
    excess = float(max(np.max(lo - Y, initial=0.0), np.max(Y - hi, initial=0.0)))
    if excess > DOMAIN_TOL:
        raise DomainEscape(f"transport image leaves the domain by {excess:.3g}")
    if excess > 0:
        warnings.warn(f"clamping transport image back into the domain (excess {excess:.2g})", stacklevel=2)
        Y = np.clip(Y, lo, hi)
    return Y


def pushforward_sampler(spec: PushforwardSpec, n: int, seed: SeedSpec) -> ParticleMeasure:
    ref = spec.reference(n, seed)
    return ParticleMeasure(push_points(spec.transport, ref.points, spec.domain), ref.weights)


def lp_map_distance(T: Callable, T_star: Callable, reference, p: float, n: int, seed: SeedSpec):
    """Monte-Carlo estimate of ||T - T*||_{L^p(rho)} and its delta-method standard error."""
    if p < 1:
        raise ValueError("p must be >= 1")
    X = reference(n, seed).points
    vals = np.linalg.norm(np.asarray(T(X)) - np.asarray(T_star(X)), axis=-1) ** p
    mean = float(vals.mean())
    se_mean = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    value = mean ** (1.0 / p)
    se = (se_mean / (p * mean ** (1.0 - 1.0 / p))) if mean > 0 else 0.0
    return value, se


# named transport maps for configs; each factory takes keyword parameters
def _identity(**_):
    return lambda X: np.array(X, dtype=float)


def _affine(shift=0.25, scale=0.5, **_):
    return lambda X: shift + scale * np.asarray(X, dtype=float)


def _poly2(**_):
    return lambda X: np.asarray(X, dtype=float) ** 2


def _perturbed_affine(eps=0.0, shift=0.25, scale=0.5, **_):
    """Affine map plus eps sin(pi x); stays inside [0, 1] for |eps| <= 0.25."""
    return lambda X: shift + scale * np.asarray(X, dtype=float) + eps * np.sin(np.pi * np.asarray(X, dtype=float))


def _shifted_affine(eps=0.0, shift=0.25, scale=0.5, **_):
    """Affine map translated by eps; stays inside [0, 1] for |eps| <= 0.25."""
    return lambda X: shift + eps + scale * np.asarray(X, dtype=float)


TRANSPORT_REGISTRY = {
    "shifted_affine": _shifted_affine,
    "identity": _identity,
    "affine": _affine,
    "poly2": _poly2,
    "perturbed_affine": _perturbed_affine,
}


def transport_from_config(name: str, **params) -> Callable:
    if name not in TRANSPORT_REGISTRY:
        raise KeyError(f"unknown transport {name!r}; known: {sorted(TRANSPORT_REGISTRY)}")
    return TRANSPORT_REGISTRY[name](**params)
