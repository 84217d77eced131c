"""Acceptance criteria 1-10; each test prints one PASS/FAIL line.

The Monte-Carlo fixtures are module scoped so each expensive experiment runs
once. Expect about 30 minutes on a single core.
"""
import time

import numpy as np
import pytest

from kpgraph.admm_gamma import objective_gamma, solve_gamma
from kpgraph.admm_omega import objective_omega, solve_omega
from kpgraph.admm import AdmmConfig
from kpgraph.cli import main
from kpgraph.evaluation import monte_carlo, rate_check, roc_experiment, population_check
from kpgraph.flipflop import FlipFlopConfig, fit
from kpgraph.model_select import grid_search
from kpgraph.spectral import MatrixSeries, dft, plan_windows, theta_check, theta_tilde
from kpgraph.synth import generate_series, make_rng, make_truth
from oracles import prox_gradient_gamma, prox_gradient_omega, rand_herm_pd, rand_sym_pd

RUNS = 20
TIGHT = AdmmConfig(tau_abs=1e-10, tau_rel=1e-10, i_max=5000)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")

    return emit


@pytest.fixture(scope="module")
def gauss256():
    return monte_carlo(n=256, M=4, runs=RUNS, selection=("bic", "oracle_f1"), seed=0)


@pytest.fixture(scope="module")
def gauss64():
    return monte_carlo(n=64, M=2, runs=RUNS, selection="bic", seed=0)


def test_c01_f1_band(report, gauss256, gauss64):
    s256, s64 = gauss256.summary("bic"), gauss64.summary("bic")
    in256 = 0.56 <= s256.f1_mean <= 0.86
    in64 = 0.36 <= s64.f1_mean <= 0.67
    fast = s256.fit_seconds_mean <= 5.0
    ok = in256 and in64 and fast and s256.failures == 0 and s64.failures == 0
    report(1, ok,
           f"n=256 M=4 F1 {s256.f1_mean:.4f} +/- {s256.f1_std:.4f} (band [0.56, 0.86]); "
           f"n=64 M=2 F1 {s64.f1_mean:.4f} +/- {s64.f1_std:.4f} (band [0.36, 0.67]); "
           f"selected fit {s256.fit_seconds_mean:.3f} s/run (<= 5), "
           f"full grid pipeline {s256.total_seconds_mean:.1f} s/run")
    assert ok


def test_c02_baseline_separation(report, gauss256):
    base = monte_carlo(n=256, M=4, runs=RUNS, estimator="baseline", selection="oracle_f1", seed=0)
    a = gauss256.summary("oracle_f1").f1_mean
    b = base.summary("oracle_f1").f1_mean
    ok = a - b >= 0.2
    report(2, ok, f"oracle F1 proposed {a:.4f} vs baseline {b:.4f}, gap {a - b:.4f} (>= 0.2)")
    assert ok


def test_c03_population_oracle(report):
    truth = make_truth(make_rng(0), p=4, q=4, block=2)
    t0 = time.perf_counter()
    rep = population_check(truth, M=2)
    elapsed = time.perf_counter() - t0
    ok = rep.max_residual <= 1e-6 and elapsed < 1.0
    report(3, ok, f"max relative residual {rep.max_residual:.2e} (<= 1e-6), {elapsed:.3f} s (< 1)")
    assert ok


def test_c04_solver_equivalence(report):
    gaps = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        q, M = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        th = np.stack([rand_herm_pd(rng, q, 0.1) for _ in range(M)])
        _, ref = prox_gradient_gamma(th, 0.05, 0.05)
        est, _ = solve_gamma(th, 0.05, 0.05, TIGHT)
        gaps.append(abs(objective_gamma(est.phi, th, 0.05, 0.05) - ref) / abs(ref))
    g_gap = max(gaps)
    gaps = []
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        p = int(rng.integers(2, 4))
        th = rand_sym_pd(rng, p, 0.1)
        _, ref = prox_gradient_omega(th, 0.1)
        est, _ = solve_omega(th, 0.1, TIGHT)
        gaps.append(abs(objective_omega(est.omega, th, 0.1) - ref) / abs(ref))
    o_gap = max(gaps)
    ok = g_gap <= 1e-5 and o_gap <= 1e-5
    report(4, ok, f"max relative objective gap Gamma {g_gap:.2e}, Omega {o_gap:.2e} (<= 1e-5)")
    assert ok


def test_c05_root_identities(report):
    truth = make_truth(make_rng(0, 0))
    series = generate_series(truth, 256, make_rng(0, 1))
    dfts, plan = dft(series), plan_windows(256, 4)
    gs = grid_search(dfts, plan, grid=None)
    worst = max(c.result.max_root_residual for c in gs.cells if c.result is not None)
    single = fit(dfts, plan, FlipFlopConfig(lambda_p=0.0, lambda_q=0.0)).max_root_residual
    worst = max(worst, single)
    ok = worst <= 1e-10
    report(5, ok, f"max quadratic residual over every ADMM iteration of {len(gs.cells) + 1} fits "
                  f"{worst:.2e} (<= 1e-10)")
    assert ok


def test_c06_spectral_identities(report):
    pars, pairs = [], []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        p, q, M, n = int(rng.integers(1, 5)), int(rng.integers(1, 5)), int(rng.integers(1, 4)), 64
        Z = rng.standard_normal((n, p, q))
        D = dft(MatrixSeries(Z))
        pars.append(abs(np.sum(np.abs(D.values) ** 2) - np.sum(Z ** 2)) / np.sum(Z ** 2))
        plan = plan_windows(n, M)
        om = rand_sym_pd(rng, p)
        phi = np.stack([rand_herm_pd(rng, q) for _ in range(M)])
        lhs = np.trace(theta_check(D, plan, phi) @ om) / p
        rhs = np.sum(np.einsum("kij,kji->k", theta_tilde(D, plan, om), phi).real) / (M * q)
        pairs.append(abs(lhs - rhs) / max(1.0, abs(lhs)))
    ok = max(pars) <= 1e-8 and max(pairs) <= 1e-10
    report(6, ok, f"Parseval {max(pars):.2e} (<= 1e-8), pairing {max(pairs):.2e} (<= 1e-10), 20 instances")
    assert ok


def test_c07_rate_trend(report):
    res = rate_check()
    frac, slope = res.decreasing_fraction(), res.slope()
    means = res.errors().mean(axis=0)
    ok = frac >= 0.8 and slope < 0
    report(7, ok, f"strictly decreasing in {frac:.0%} of seeds (>= 80%), log-log slope {slope:.3f} (< 0), "
                  f"mean errors {np.array2string(means, precision=4)} at n={res.n_list}")
    assert ok


def test_c08_roc_dominance(report):
    curves = roc_experiment(runs=5, scopes=("gamma",))
    area = {c.estimator: c.area for c in curves}
    ok = area["proposed"] > area["baseline"]
    report(8, ok, f"Gamma-side AUC {area['proposed']:.4f} vs baseline Upsilon-side AUC "
                  f"{area['baseline']:.4f}")
    assert ok


def test_c09_determinism(report, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("p: 5\nq: 5\nn: 128\nM: 2\ngrid_points: 3\nruns: 2\n")
    outputs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        assert main(["simulate", "--config", str(cfg), "--seed", "7", "--out", str(d)]) == 0
        assert main(["select", str(d / "series.csv"), "--config", str(cfg), "--out", str(d / "fit")]) == 0
        assert main(["benchmark", "--config", str(cfg), "--seed", "7", "--out", str(d / "bench.csv")]) == 0
        outputs.append(d)
    names = ["series.csv", "truth.npz", "truth_edges.json", "manifest.json", "fit/estimate.json",
             "fit/omega.dot", "fit/gamma.dot", "fit/combined.dot", "bench.csv", "bench.json"]
    same = [(outputs[0] / f).read_bytes() == (outputs[1] / f).read_bytes() for f in names]
    ok = all(same)
    report(9, ok, f"{sum(same)}/{len(names)} artifacts byte-identical across two invocations")
    assert ok


def test_c10_noise_robustness(report, gauss256):
    g = gauss256.summary("bic").f1_mean
    rows = {}
    for noise in ("exponential", "uniform"):
        rows[noise] = monte_carlo(n=256, M=4, runs=RUNS, selection="bic", seed=0, noise=noise).summary("bic")
    ok = all(abs(s.f1_mean - g) <= 0.15 and s.failures == 0 for s in rows.values())
    report(10, ok, f"F1 gaussian {g:.4f}, exponential {rows['exponential'].f1_mean:.4f}, "
                   f"uniform {rows['uniform'].f1_mean:.4f} (each within 0.15)")
    assert ok
