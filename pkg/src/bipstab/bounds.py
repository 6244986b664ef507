"""Numerical assembly of the posterior stability bounds.

Every norm is taken under the particle prior, so each right-hand side is the
exact bound for the particle measures themselves; the reported standard
errors describe how well those particle quantities estimate the continuum
ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .cost import AdaptedCostSpec, DistanceLikeCost, adapted_cost
from .errors import AllWeightsUnderflow, BallSupFailure, EvidenceUnderflow, MissingEnvelope
from .measure import ParticleMeasure, SeedSpec, log_likelihood_weights
from .potential import Potential, merged_envelopes
from .transport import coupling_cost, ipm_value, transport_cost

SIGMA_MARGIN = 3.0


@dataclass(frozen=True)
class HolderPair:
    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if p < 1 or q < 1:
            raise ValueError("Holder exponents must lie in [1, inf]")
        if abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
            raise ValueError(f"1/p + 1/q must equal 1, got p={p}, q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_config(cls, obj) -> "HolderPair":
        def parse(v):
            return math.inf if v in ("inf", "Infinity", None) else float(v)
        return cls(parse(obj.get("p")), parse(obj.get("q")))

    def to_config(self) -> dict:
        enc = lambda v: "inf" if math.isinf(v) else v
        return {"p": enc(self.p), "q": enc(self.q)}


@dataclass
class BoundReport:
    lhs_estimate: float
    lhs_mode: str
    rhs_value: float
    rhs_components: dict = field(default_factory=dict)
    mc_standard_errors: dict = field(default_factory=dict)
    satisfied: bool = False
    margin: float = 0.0
    bound: str = ""

    @classmethod
    def build(cls, bound: str, lhs: float, lhs_mode: str, rhs: float, components: dict,
              errors: dict) -> "BoundReport":
        combined = math.sqrt(sum(v * v for v in errors.values() if np.isfinite(v)))
        errors = dict(errors, combined=combined)
        ok = bool(lhs <= rhs + SIGMA_MARGIN * combined)
        return cls(float(lhs), lhs_mode, float(rhs), {k: float(v) for k, v in components.items()},
                   {k: float(v) for k, v in errors.items()}, ok, float(rhs - lhs), bound)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, allow_nan=True)


def lp_norm_under_prior(fn, prior: ParticleMeasure, p: float):
    """(sum_i w_i |fn(u_i)|^p)^(1/p) with a delta-method standard error.

    ``p = inf`` gives the maximum over particles of positive weight (no se).
    """
    vals = np.abs(np.asarray(fn(prior.points), dtype=float).reshape(-1))
    if vals.shape[0] != len(prior):
        vals = np.broadcast_to(vals, (len(prior),))
    w = prior.weights
    if math.isinf(p):
        return float(np.max(vals[w > 0])), 0.0
    if p < 1:
        raise ValueError("p must be >= 1")
    x = vals**p
    mean = float(np.dot(w, x))
    se_mean = float(np.sqrt(np.sum(w**2 * (x - mean) ** 2)))
    if mean <= 0:
        return 0.0, 0.0
    value = mean ** (1.0 / p)
    return value, se_mean * value / (p * mean)


def _log_l1(log_fn_values: np.ndarray, prior: ParticleMeasure):
    """log of sum_i w_i exp(l_i) and the relative standard error of that sum."""
    with np.errstate(divide="ignore"):
        lw = np.log(prior.weights)
    log_mean = float(logsumexp(lw + log_fn_values))
    if not np.isfinite(log_mean):
        raise EvidenceUnderflow("envelope h vanishes on the prior particles")
    scaled = np.exp(log_fn_values - log_mean)
    rel_se = float(np.sqrt(np.sum(prior.weights**2 * (scaled - 1.0) ** 2)))
    return log_mean, rel_se


def _posterior(prior: ParticleMeasure, pot, y) -> tuple[ParticleMeasure, float]:
    fn = getattr(pot, "phi", pot)
    try:
        w, log_z = log_likelihood_weights(prior, fn, y)
    except AllWeightsUnderflow as exc:
        raise EvidenceUnderflow(str(exc)) from exc
    return prior.with_weights(w), log_z


def _rel(se, value):
    return se / value if value > 0 else 0.0


def _lhs(nu, nu_prime, cost, solver):
    val, mode = ipm_value(nu, nu_prime, cost, solver=solver)
    return val, mode


def _perturbation_norm(phi: Potential, phi_prime, prior: ParticleMeasure, y, q: float):
    a = np.asarray(phi.phi(prior.points, y), dtype=float)
    b = np.asarray(phi_prime.phi(prior.points, y), dtype=float)
    diff = np.abs(a - b)
    return lp_norm_under_prior(lambda _: diff, prior, q)


def _likelihood_common(phi: Potential, phi_prime: Potential, prior, cost, holder, y):
    f, g, log_h = merged_envelopes(phi, phi_prime)
    g_y = float(g(y))
    c0 = cost.to_origin(prior.points)
    fu = np.asarray(f(prior.points), dtype=float)
    n_fc0, se_fc0 = lp_norm_under_prior(lambda _: fu * c0, prior, holder.p)
    n_f, se_f = lp_norm_under_prior(lambda _: fu, prior, holder.p)
    dphi, se_dphi = _perturbation_norm(phi, phi_prime, prior, y, holder.q)
    return f, g_y, log_h, (n_fc0, se_fc0), (n_f, se_f), (dphi, se_dphi)


def likelihood_bound_rhs(phi: Potential, phi_prime: Potential, prior: ParticleMeasure,
                         cost: DistanceLikeCost, holder: HolderPair, y, *, y_prime=None,
                         perturbation_bound: Optional[float] = None, solver: str = "auto") -> BoundReport:
    """Likelihood-perturbation bound

        D(nu, nu'; c) <= 2 g^2 ||f c(.,0)||_p ||f||_p / ||h||_1^2 * ||Phi - Phi'||_q

    with envelopes merged as f v f', g v g', h ^ h'. ``y_prime`` evaluates
    Phi' at different data (defaults to ``y``). ``perturbation_bound``
    replaces the particle estimate of ||Phi - Phi'||_q by a supplied upper
    bound (for instance a sup-norm error certified on the whole domain); it
    must not be smaller than the particle estimate.
    """
    yp = y if y_prime is None else y_prime
    phi_p = _at_data(phi_prime, yp)
    f, g_y, log_h, fc0, fn, dphi = _likelihood_common(phi, phi_p, prior, cost, holder, y)
    log_hn, rel_h = _log_l1(log_h(prior.points, y), prior)
    nu, log_z = _posterior(prior, phi, y)
    nu_p, log_zp = _posterior(prior, phi_p, y)
    lhs, mode = _lhs(nu, nu_p, cost, solver)
    if perturbation_bound is not None:
        if perturbation_bound < dphi[0] * (1 - 1e-12):
            raise ValueError(f"supplied perturbation bound {perturbation_bound:.6g} is below the "
                             f"particle estimate {dphi[0]:.6g}")
        dphi = (float(perturbation_bound), 0.0)

    if dphi[0] == 0:
        rhs = 0.0
    else:
        rhs = math.exp(math.log(2.0) + 2 * math.log(g_y) + math.log(fc0[0]) + math.log(fn[0])
                       - 2 * log_hn + math.log(dphi[0]))
    rel = math.sqrt(_rel(fc0[1], fc0[0]) ** 2 + _rel(fn[1], fn[0]) ** 2 + (2 * rel_h) ** 2
                    + _rel(dphi[1], dphi[0]) ** 2)
    comps = {
        "g_y": g_y, "norm_fc0_Lp": fc0[0], "norm_f_Lp": fn[0], "norm_h_L1": math.exp(log_hn),
        "perturbation_Lq": dphi[0], "evidence_z": math.exp(log_z), "evidence_z_prime": math.exp(log_zp),
        "p": holder.p, "q": holder.q,
    }
    return BoundReport.build("likelihood", lhs, mode, rhs, comps, {"rhs": rel * rhs})


class _AtData:
    """A potential whose data argument is pinned to ``y``."""

    def __init__(self, pot, y):
        self._pot, self._y = pot, y

    def __getattr__(self, name):
        return getattr(self._pot, name)

    def phi(self, u, y=None):
        return self._pot.phi(u, self._y)

    def log_h(self, u, y=None):
        return self._pot.log_h(u, self._y)

    def envelope_h(self, u, y=None):
        return self._pot.envelope_h(u, self._y)

    def envelope_g(self, y=None):
        return self._pot.envelope_g(self._y)


def _at_data(pot, y):
    return pot if y is None else _AtData(pot, y)


def likelihood_bound_rhs_explicit(phi: Potential, phi_prime: Potential, prior: ParticleMeasure,
                                  cost: DistanceLikeCost, holder: HolderPair, y, *,
                                  z_hat: Optional[float] = None, z_prime_hat: Optional[float] = None,
                                  y_prime=None, solver: str = "auto") -> BoundReport:
    """Evidence form of the likelihood bound:

        g ||f c(.,0)||_p [Z + g ||f||_p] / (Z Z') * ||Phi - Phi'||_q

    ``z_hat``/``z_prime_hat`` default to the particle evidence estimates.
    """
    yp = y if y_prime is None else y_prime
    phi_p = _at_data(phi_prime, yp)
    f, g_y, log_h, fc0, fn, dphi = _likelihood_common(phi, phi_p, prior, cost, holder, y)
    nu, log_z = _posterior(prior, phi, y)
    nu_p, log_zp = _posterior(prior, phi_p, y)
    z = math.exp(log_z) if z_hat is None else float(z_hat)
    zp = math.exp(log_zp) if z_prime_hat is None else float(z_prime_hat)
    if z <= 0 or zp <= 0:
        raise EvidenceUnderflow("evidence estimates must be positive")
    lhs, mode = _lhs(nu, nu_p, cost, solver)
    rhs = g_y * fc0[0] * (z + g_y * fn[0]) / (z * zp) * dphi[0]
    z_vals = np.exp(-np.asarray(phi.phi(prior.points, y), dtype=float))
    zp_vals = np.exp(-np.asarray(phi_p.phi(prior.points, y), dtype=float))
    rel_z = _rel(float(np.sqrt(np.sum(prior.weights**2 * (z_vals - z) ** 2))), z)
    rel_zp = _rel(float(np.sqrt(np.sum(prior.weights**2 * (zp_vals - zp) ** 2))), zp)
    rel = math.sqrt(_rel(fc0[1], fc0[0]) ** 2 + _rel(fn[1], fn[0]) ** 2 + rel_z**2 + rel_zp**2
                    + _rel(dphi[1], dphi[0]) ** 2)
    comps = {
        "g_y": g_y, "norm_fc0_Lp": fc0[0], "norm_f_Lp": fn[0], "evidence_z": z, "evidence_z_prime": zp,
        "perturbation_Lq": dphi[0], "p": holder.p, "q": holder.q,
    }
    return BoundReport.build("likelihood_explicit", lhs, mode, rhs, comps, {"rhs": rel * rhs})


def ball_grid(y, radius: float, *, n_dirs: int = 64, n_radii: int = 5, seed: int = 0) -> np.ndarray:
    """Deterministic points covering the closed ball B_r(y): the centre, shells
    of radii r k / n_radii along coordinate, data-aligned and quasi-random directions."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = y.size
    dirs = [np.eye(m), -np.eye(m)]
    ny = np.linalg.norm(y)
    if ny > 0:
        dirs.append((y / ny)[None, :])
        dirs.append((-y / ny)[None, :])
    if m > 1:
        z = SeedSpec(seed, 0).generator().standard_normal((n_dirs, m))
        dirs.append(z / np.linalg.norm(z, axis=1, keepdims=True))
    dirs = np.vstack(dirs)
    radii = radius * np.arange(1, n_radii + 1) / n_radii
    pts = [y[None, :]] + [y[None, :] + r * dirs for r in radii]
    return np.vstack(pts)


def data_perturbation_bound(phi: Potential, prior: ParticleMeasure, cost: DistanceLikeCost,
                            holder: HolderPair, y, y_prime, radius: float, *, variant: str = "lipschitz",
                            solver: str = "auto") -> BoundReport:
    """Data-perturbation bound with envelopes taken uniformly over B_r(y).

    ``variant="lipschitz"`` replaces ||Phi(.;y) - Phi(.;y')||_q by
    ||b||_q |y - y'| using the potential's data-Lipschitz field.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    yp = np.atleast_1d(np.asarray(y_prime, dtype=float))
    dist = float(np.linalg.norm(y - yp))
    if dist > radius * (1 + 1e-12):
        raise ValueError(f"|y - y'| = {dist:.3g} exceeds the ball radius {radius:.3g}")
    zs = ball_grid(y, radius)
    try:
        g_sup = max(float(phi.envelope_g(z)) for z in zs)
        log_h_inf = np.min(np.stack([phi.log_h(prior.points, z) for z in zs]), axis=0)
    except Exception as exc:  # noqa: BLE001 - any evaluation failure on the ball is reported uniformly
        raise BallSupFailure(f"envelope evaluation failed on the data ball: {exc}") from exc
    if not np.isfinite(g_sup) or np.any(np.isnan(log_h_inf)):
        raise BallSupFailure("non-finite envelope values on the data ball")

    fu = np.asarray(phi.envelope_f(prior.points), dtype=float)
    c0 = cost.to_origin(prior.points)
    n_fc0, se_fc0 = lp_norm_under_prior(lambda _: fu * c0, prior, holder.p)
    n_f, se_f = lp_norm_under_prior(lambda _: fu, prior, holder.p)
    log_hn, rel_h = _log_l1(log_h_inf, prior)

    if variant == "lipschitz":
        if phi.data_lipschitz_b is None:
            raise MissingEnvelope("the Lipschitz variant needs a data-Lipschitz field b")
        bvals = np.asarray(phi.data_lipschitz_b(prior.points), dtype=float)
        n_b, se_b = lp_norm_under_prior(lambda _: bvals, prior, holder.q)
        pert, se_pert = n_b * dist, se_b * dist
    elif variant == "general":
        diff = np.abs(phi.phi(prior.points, y) - phi.phi(prior.points, yp))
        pert, se_pert = lp_norm_under_prior(lambda _: diff, prior, holder.q)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    nu, log_z = _posterior(prior, phi, y)
    nu_p, log_zp = _posterior(prior, _at_data(phi, yp), y)
    lhs, mode = _lhs(nu, nu_p, cost, solver)
    rhs = 0.0 if pert == 0 else math.exp(math.log(2 * g_sup**2) + math.log(n_fc0) + math.log(n_f)
                                         - 2 * log_hn + math.log(pert))
    rel = math.sqrt(_rel(se_fc0, n_fc0) ** 2 + _rel(se_f, n_f) ** 2 + (2 * rel_h) ** 2 + _rel(se_pert, pert) ** 2)
    comps = {
        "sup_g2_ball": g_sup**2, "norm_fc0_Lp": n_fc0, "norm_f_Lp": n_f, "norm_inf_h_L1": math.exp(log_hn),
        "perturbation_Lq": pert, "data_shift": dist, "radius": radius,
        "evidence_z": math.exp(log_z), "evidence_z_prime": math.exp(log_zp),
    }
    return BoundReport.build(f"data_{variant}", lhs, mode, rhs, comps, {"rhs": rel * rhs})


def prior_bound_reports(phi: Potential, prior: ParticleMeasure, prior_star: ParticleMeasure,
                        cost: DistanceLikeCost, y, *, coupling_pairs=None, lipschitz_L=None,
                        solver: str = "auto", ipm_prior: Optional[float] = None):
    """Prior-perturbation bounds, returned as (envelope form, evidence form).

    Envelope form:
        g^2 [||f||_1 + ||f c(.,0)||_1] / (||h||_{L1(mu)} ||h||_{L1(mu*)}) * D(mu, mu*; c_y)
    Evidence form:
        g [Z + g ||f c(.,0)||_1] / (Z Z*) * D(mu, mu*; c_y)

    D(mu, mu*; c_y) is bounded by the optimal transport cost under the
    adapted cost c_y, or by the cost of the explicit coupling in
    ``coupling_pairs`` when given. ``ipm_prior`` overrides both.
    """
    L = lipschitz_L if lipschitz_L is not None else phi.lipschitz_L
    if L is None:
        raise MissingEnvelope("prior bounds need a local Lipschitz field")
    c_y = adapted_cost(AdaptedCostSpec(cost, phi.envelope_f, L, y))
    se_ipm = 0.0
    if ipm_prior is not None:
        d_prior, prior_mode = float(ipm_prior), "given"
    elif coupling_pairs is not None:
        d_prior, se_ipm = coupling_cost(coupling_pairs, c_y)
        prior_mode = "coupling"
    else:
        d_prior = transport_cost(prior, prior_star, c_y, solver="exact" if solver == "auto" else solver)
        prior_mode = "upper_bound"

    g_y = float(phi.envelope_g(y))
    fu = np.asarray(phi.envelope_f(prior.points), dtype=float)
    c0 = cost.to_origin(prior.points)
    n_f, se_f = lp_norm_under_prior(lambda _: fu, prior, 1.0)
    n_fc0, se_fc0 = lp_norm_under_prior(lambda _: fu * c0, prior, 1.0)
    log_h1, rel_h1 = _log_l1(phi.log_h(prior.points, y), prior)
    log_h2, rel_h2 = _log_l1(phi.log_h(prior_star.points, y), prior_star)

    nu, log_z = _posterior(prior, phi, y)
    nu_s, log_zs = _posterior(prior_star, phi, y)
    lhs, mode = _lhs(nu, nu_s, cost, solver)

    rel_ipm = _rel(se_ipm, d_prior)
    if d_prior == 0:
        rhs_env = rhs_ev = 0.0
    else:
        rhs_env = math.exp(2 * math.log(g_y) + math.log(n_f + n_fc0) - log_h1 - log_h2 + math.log(d_prior))
        z, zs = math.exp(log_z), math.exp(log_zs)
        rhs_ev = g_y * (z + g_y * n_fc0) / (z * zs) * d_prior
    rel_env = math.sqrt(((se_f + se_fc0) / (n_f + n_fc0)) ** 2 + rel_h1**2 + rel_h2**2 + rel_ipm**2)
    comps = {
        "g_y": g_y, "norm_f_L1": n_f, "norm_fc0_L1": n_fc0, "norm_h_L1_prior": math.exp(log_h1),
        "norm_h_L1_prior_star": math.exp(log_h2), "ipm_prior_cy": d_prior,
        "evidence_z": math.exp(log_z), "evidence_z_star": math.exp(log_zs),
    }
    env = BoundReport.build(f"prior[{prior_mode}]", lhs, mode, rhs_env, comps, {"rhs": rel_env * rhs_env})
    ev = BoundReport.build(f"prior_explicit[{prior_mode}]", lhs, mode, rhs_ev, comps,
                           {"rhs": math.sqrt(rel_ipm**2 + _rel(se_fc0, n_fc0) ** 2) * rhs_ev})
    return env, ev


def prior_bound_rhs(phi, prior, prior_star, cost, y, coupling_pairs=None, **kwargs) -> BoundReport:
    return prior_bound_reports(phi, prior, prior_star, cost, y, coupling_pairs=coupling_pairs, **kwargs)[0]


def moment_chain_bound(L_y: float, mean_abs: float, second_moment: float, second_moment_star: float,
                       log_h_l1: float, log_h_l1_star: float, w2: float) -> float:
    """Prior bound for a Lipschitz constant that does not depend on (u, v):

        [1 v L] (1 + mu|.|) (1 + mu|.|^2 + mu*|.|^2)^(1/2) / (||h||_{L1(mu)} ||h||_{L1(mu*)}) * W_2(mu, mu*)

    obtained from c_y <= [1 v L] [1 v |u| v |v|] |u - v| and Cauchy-Schwarz.
    """
    if w2 == 0:
        return 0.0
    log_val = (math.log(max(1.0, L_y)) + math.log1p(mean_abs)
               + 0.5 * math.log1p(second_moment + second_moment_star)
               - log_h_l1 - log_h_l1_star + math.log(w2))
    return math.exp(log_val)


def product_coupling_bound(lambdas, lambdas_star, basis_gram_diffs, w2_eta: float, s: float,
                           moment_2s: float, moment_2s_star: float) -> float:
    """Coupling bound for product measures under c = (|u| + |v|)^s |u - v|:

        2^((1 v (2s-1))/2 + 1) (E|u|^2s + E|u*|^2s)^(1/2)
          * (W_2(eta, eta*)^2 sum lambda_j + sum lambda_j |x_j - x*_j|^2
             + sum (sqrt(lambda_j) - sqrt(lambda*_j))^2)^(1/2)
    """
    lam = np.asarray(lambdas, dtype=float)
    lam_s = np.asarray(lambdas_star, dtype=float)
    diffs = np.asarray(basis_gram_diffs, dtype=float)
    if lam.shape != lam_s.shape or lam.shape != diffs.shape:
        raise ValueError("lambda sequences and basis differences must have equal length")
    prefactor = 2.0 ** (max(1.0, 2.0 * s - 1.0) / 2.0 + 1.0)
    moments = math.sqrt(moment_2s + moment_2s_star)
    spread = (w2_eta**2 * lam.sum() + np.dot(lam, diffs) + np.sum((np.sqrt(lam) - np.sqrt(lam_s)) ** 2))
    return float(prefactor * moments * math.sqrt(spread))


def adapted_prime_coupling_bound(lambdas, lambdas_star, y_norm: float, moment_0: float, moment_0_star: float,
                                 moment_4: float, moment_4_star: float, w2_eta: float = 0.0,
                                 basis_gram_diffs=None) -> float:
    """Bound on D(mu, mu*; c'_y) for c'_y = (1 + |u| + |v| + |y|)^2 |u - v|.

    Uses (a + b)^2 <= 2a^2 + 2b^2 to split c'_y into 2(1+|y|)^2 times the
    s = 0 cost plus 2 times the s = 2 cost, and bounds each by the product
    coupling bound.
    """
    diffs = np.zeros(len(lambdas)) if basis_gram_diffs is None else basis_gram_diffs
    b0 = product_coupling_bound(lambdas, lambdas_star, diffs, w2_eta, 0.0, moment_0, moment_0_star)
    b2 = product_coupling_bound(lambdas, lambdas_star, diffs, w2_eta, 2.0, moment_4, moment_4_star)
    return 2.0 * (1.0 + y_norm) ** 2 * b0 + 2.0 * b2


def fournier_rate_envelope(d: int, N: int, moment3: Optional[float] = None) -> float:
    """Rate bracket for E W_2^2(mu, mu_N) when mu has a finite third moment."""
    if moment3 is not None and not np.isfinite(moment3):
        raise ValueError("the third moment must be finite")
    if d < 1 or N < 1:
        raise ValueError("d and N must be positive")
    if d < 4:
        return N**-0.5 + N ** (-1.0 / 3.0)
    if d == 4:
        return N**-0.5 * math.log1p(N) + N ** (-1.0 / 3.0)
    return N ** (-2.0 / d) + N ** (-1.0 / 3.0)


def matern_mean_value_chain(lap_eigs, gamma: float, tau: float, gamma_s: float, tau_s: float, alpha: int) -> dict:
    """Per-mode check of the hyper-parameter algebra for Matern spectra.

    Returns the exact |sqrt(lambda_j) - sqrt(lambda*_j)|, the mean-value
    bound a_j |dgamma| + b_j |dtau| and the constant C = sum_j max(a_j, b_j)^2
    for which sum_j |sqrt(lambda_j) - sqrt(lambda*_j)|^2 <= C (|dgamma| + |dtau|)^2.
    """
    lt = np.asarray(lap_eigs, dtype=float)
    exact = np.abs(gamma * (lt + tau) ** -alpha - gamma_s * (lt + tau_s) ** -alpha)
    a = (lt + tau) ** -alpha
    b = alpha * gamma_s * np.maximum((lt + tau) ** (-alpha - 1.0), (lt + tau_s) ** (-alpha - 1.0))
    dg, dt = abs(gamma - gamma_s), abs(tau - tau_s)
    mv = a * dg + b * dt
    C = float(np.sum(np.maximum(a, b) ** 2))
    return {
        "sqrt_lambda_diff": exact,
        "mean_value_bound": mv,
        "sum_sq_diff": float(np.sum(exact**2)),
        "sum_sq_mean_value": float(np.sum(mv**2)),
        "constant_C": C,
        "rhs": C * (dg + dt) ** 2,
    }
