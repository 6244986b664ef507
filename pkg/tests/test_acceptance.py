"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from bipstab.bounds import prior_bound_reports, product_coupling_bound
from bipstab.cli import main
from bipstab.cost import norm_cost
from bipstab.experiments import ExperimentConfig, fit_rate, run_experiment
from bipstab.measure import ParticleMeasure, SeedSpec, reweight, sample_standard_gaussian, weighted_moment_se
from bipstab.potential import gaussian_residual_potential, linear_forward, tanh_forward
from bipstab.transport import coupling_cost, exact_ot, w1_1d_oracle


def record(number, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _measure(rng, n, d=1):
    return ParticleMeasure.from_unnormalized(rng.normal(size=(n, d)), rng.uniform(0.1, 1.0, size=n))


@pytest.fixture(scope="module")
def ot_instances():
    rng = np.random.default_rng(2024)
    out = []
    start = time.perf_counter()
    for k in range(50):
        n, m = (int(v) for v in rng.integers(2, 513, size=2))
        a, b = _measure(rng, n), _measure(rng, m)
        p = 1 + k % 2
        plan = exact_ot(a, b, norm_cost(p))
        out.append((p, a, b, plan))
    return out, time.perf_counter() - start


def test_criterion_01_exact_ot_matches_quantile_oracle(ot_instances):
    instances, elapsed = ot_instances
    err = max(abs(plan.primal_cost - w1_1d_oracle(a, b, p) ** p) for p, a, b, plan in instances)
    record(1, "exact OT equals the 1D quantile oracle", err <= 1e-9 and elapsed < 10,
           f"max abs error {err:.2e}, {elapsed:.2f} s")


def test_criterion_02_duality_certificate(ot_instances):
    instances, _ = ot_instances
    rng = np.random.default_rng(7)
    plans = [plan for _, _, _, plan in instances]
    for _ in range(20):
        a, b = _measure(rng, int(rng.integers(2, 200)), 3), _measure(rng, int(rng.integers(2, 200)), 3)
        plans.append(exact_ot(a, b, norm_cost(1)))
    worst = max((pl.primal_cost - pl.dual_value) / (1 + pl.primal_cost) for pl in plans)
    record(2, "primal-dual gap within 1e-9 (1 + primal)", worst <= 1e-9, f"worst scaled gap {worst:.2e}")


def test_criterion_03_coupling_cost_dominates_transport():
    rng = np.random.default_rng(11)
    slack = []
    for _ in range(20):
        n, d = int(rng.integers(5, 300)), int(rng.integers(1, 4))
        U, V = rng.normal(size=(n, d)), 0.5 * rng.normal(size=(n, d)) + rng.normal(size=d)
        explicit, _ = coupling_cost((U, V), norm_cost(1))
        ot = exact_ot(ParticleMeasure.uniform(U), ParticleMeasure.uniform(V), norm_cost(1)).primal_cost
        slack.append(explicit - ot)
    record(3, "explicit coupling cost >= exact transport cost", min(slack) >= -1e-12,
           f"min slack {min(slack):.2e}")


def test_criterion_04_conjugate_posterior_mean():
    # prior N(0, 1), y = 2 u + N(0, 0.25): posterior mean 8 y / 17
    pot = gaussian_residual_potential(linear_forward(np.array([[2.0]])), 0.5)
    y = np.array([1.0])
    exact = 8.0 / 17.0
    z = []
    for s in range(10):
        post, _ = reweight(sample_standard_gaussian(1, 10**4, SeedSpec(s, 1)), pot, y)
        mean, se = weighted_moment_se(post, lambda u: u[:, 0])
        z.append(abs(mean - exact) / se)
    record(4, "weighted posterior mean within 3 se of the closed form", max(z) <= 3,
           f"max |z| {max(z):.2f} over 10 seeds")


def test_criterion_05_likelihood_perturbation_harness():
    res = run_experiment(ExperimentConfig.defaults("likelihood_perturbation", R=10, perturbations=10))
    frac = res.diagnostics["satisfaction_fraction"]
    ok = frac >= 0.95 and res.checks["zero_perturbation_exact"]
    record(5, "likelihood bound satisfied and zero perturbation gives 0/0", ok,
           f"satisfaction {frac:.3f}")


def test_criterion_06_mean_shift_prior_harness():
    pot = gaussian_residual_potential(tanh_forward(1), 1.0)
    y = np.array([0.5])
    eps_grid = [0.02, 0.04, 0.08, 0.16]
    lhs = {e: [] for e in eps_grid}
    flags = []
    for s in range(10):
        mu = sample_standard_gaussian(1, 4096, SeedSpec(s, 1))
        for e in eps_grid:
            mu_s = ParticleMeasure(mu.points + e, mu.weights)
            _, ev = prior_bound_reports(pot, mu, mu_s, norm_cost(1), y, coupling_pairs=(mu.points, mu_s.points))
            lhs[e].append(ev.lhs_estimate)
            flags.append(ev.satisfied)
    fit = fit_rate(eps_grid, [np.mean(lhs[e]) for e in eps_grid])
    frac = float(np.mean(flags))
    ok = abs(fit.slope - 1) <= 0.2 and fit.r_squared >= 0.9 and frac >= 0.95
    record(6, "mean-shift prior slope 1 and evidence-form bound satisfied", ok,
           f"slope {fit.slope:.3f}, r2 {fit.r_squared:.4f}, satisfaction {frac:.3f}")


def test_criterion_07_product_coupling_bound():
    # J = 1, s = 0, unit moments: 2^(3/2) * sqrt(1 + 1) * |sqrt(4) - sqrt(1)| = 4
    closed = product_coupling_bound([1.0], [4.0], [0.0], 0.0, 0.0, 1.0, 1.0)
    res = run_experiment(ExperimentConfig.defaults("matern_hyper", J=32, n=2048))
    ok = abs(closed - 4.0) <= 1e-12 and res.checks["product_coupling_dominates"]
    record(7, "product coupling bound: closed form and dominance over the Matern sweep", ok,
           f"J=1 value {closed!r}")


def test_criterion_08_empirical_prior_rate():
    start = time.perf_counter()
    res = run_experiment(ExperimentConfig.defaults("empirical_prior"))
    elapsed = time.perf_counter() - start
    fit = res.fits["W1_vs_N"]
    rc = res.rate_checks
    ok = (rc["W1_mean_strictly_decreasing"] and fit.slope <= -0.2 and rc["envelope_after_calibration"]
          and elapsed < 300)
    record(8, "empirical prior rate, monotonicity and calibrated envelope", ok,
           f"slope {fit.slope:.3f}, {elapsed:.1f} s")


def test_criterion_09_matern_rate():
    res = run_experiment(ExperimentConfig.defaults("matern_hyper"))
    fit = res.fits["W1_vs_hyper"]
    ok = abs(fit.slope - 1) <= 0.2 and res.checks["zero_perturbation_exact"]
    record(9, "Matern hyper-parameter slope 1 and exact zero", ok, f"slope {fit.slope:.3f}")


def test_criterion_10_pushforward_rate():
    res = run_experiment(ExperimentConfig.defaults("pushforward"))
    fit = res.fits["W1_vs_map_L2"]
    err = res.diagnostics["translation_max_abs_error"]
    ok = abs(fit.slope - 1) <= 0.2 and res.checks["translation_exact"]
    record(10, "pushforward slope 1 and exact translation", ok, f"slope {fit.slope:.3f}, translation error {err:.1e}")


def test_criterion_11_surrogate_bound():
    res = run_experiment(ExperimentConfig.defaults("surrogate", R=5))
    ok = res.checks["bound_satisfaction_all"] and res.checks["rhs_linear_in_sup_error"]
    n = len(res.reports)
    record(11, "surrogate bound holds at every width and is linear in the sup error", ok, f"{n} reports")


def test_criterion_12_reproducibility(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "matern_hyper", "n": 512, "seed": 99}))
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["run", "matern_hyper", "--config", str(cfg), "--out", str(out)])
        blobs.append((out / "rates.csv").read_bytes())
    record(12, "identical config and seed give byte-identical rates.csv", blobs[0] == blobs[1] and len(blobs[0]) > 0,
           f"{len(blobs[0])} bytes")
