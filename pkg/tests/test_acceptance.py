"""Acceptance criteria, one test (and one printed PASS/FAIL line) per clause.

Run with ``pytest tests/test_acceptance.py -v``; the summary of every line is
repeated in the pytest terminal summary.
"""

import time

import numpy as np
import pytest

from asii_enhance.bands import band_energies, build_filterbank, mi_weights_from_gamma
from asii_enhance.beamformer import loaded_covariance, mvdr_weights
from asii_enhance.estimator import METHODS, JointEnhancer
from asii_enhance.gainopt import (
    AllocationProblem,
    kkt_residuals,
    optimal_band_gains,
    oracle_band_gains,
    weighted_audibility,
)
from asii_enhance.pipeline import rows_to_csv, sweep
from asii_enhance.scene import ScenarioConfig, simulate_scenario
from asii_enhance.selftest import random_problem
from asii_enhance.spectral import BinStatistics, FrameParams, analyze, long_term_psd, synthesize

from .conftest import ACCEPTANCE_LINES

NEAR_VALUES = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0]
FAR_VALUES = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {criterion:<44} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, detail


def _instances(n=100, seed=2024):
    rng = np.random.default_rng(seed)
    return [random_problem(rng, n_bands=int(rng.integers(2, 9)), decades=6) for _ in range(n)]


@pytest.fixture(scope="module")
def default_sweep():
    """Near- and far-end SNR axes of the default scenario, every method."""
    cfg = ScenarioConfig()
    methods = sorted(METHODS)
    t0 = time.perf_counter()
    near_rows, _ = sweep(cfg, "near_snr", NEAR_VALUES, methods)
    far_rows, _ = sweep(cfg, "far_snr", FAR_VALUES, methods)
    elapsed = time.perf_counter() - t0
    return {"near": near_rows, "far": far_rows, "elapsed": elapsed, "config": cfg}


def _table(rows):
    out = {}
    for r in rows:
        out.setdefault(r["axis_value"], {})[r["method"]] = r
    return out


# 1 -------------------------------------------------------------------------
def test_c1_oracle_equivalence_projected_gradient():
    problems = _instances()
    t0 = time.perf_counter()
    da = dobj = 0.0
    for p in problems:
        sol = optimal_band_gains(p)
        ref = oracle_band_gains(p, mode="projected_gradient")
        da = max(da, float(np.max(np.abs(ref - sol.alpha_band))))
        dobj = max(dobj, abs(weighted_audibility(ref, p) - sol.objective_value))
    elapsed = time.perf_counter() - t0
    ok = da <= 1e-6 and dobj <= 1e-9 and elapsed <= 10.0
    record("1 oracle equivalence (projected gradient)", ok,
           f"{len(problems)} instances, max|da| {da:.2e}, max|dobj| {dobj:.2e}, {elapsed:.2f} s")


def test_c1_oracle_equivalence_grid_one_step():
    problems = _instances()
    t0 = time.perf_counter()
    worst_steps, misses = 0.0, 0
    for p in problems:
        sol = optimal_band_gains(p)
        h = p.budget / 10
        ref = oracle_band_gains(p, resolution=h)
        steps = float(np.max(np.abs(ref - sol.alpha_band) * p.s2) / h)
        worst_steps = max(worst_steps, steps)
        misses += steps > 1 + 1e-9
    elapsed = time.perf_counter() - t0
    ok = misses == 0 and elapsed <= 10.0
    record("1 oracle equivalence (grid, one step)", ok,
           f"{misses}/{len(problems)} instances beyond one step, worst {worst_steps:.2f} steps, {elapsed:.2f} s")


# 2 -------------------------------------------------------------------------
def test_c2_kkt_residuals():
    worst = {"stationarity": 0.0, "primal": 0.0, "dual_min": 0.0, "complementarity": 0.0}
    for p in _instances(n=200, seed=7):
        res = kkt_residuals(optimal_band_gains(p), p)
        for key in ("stationarity", "primal", "complementarity"):
            worst[key] = max(worst[key], res[key])
        worst["dual_min"] = min(worst["dual_min"], res["dual_min"])
    ok = (worst["stationarity"] <= 1e-8 and worst["primal"] <= 1e-9
          and worst["dual_min"] >= -1e-12 and worst["complementarity"] == 0)
    record("2 KKT residual suite", ok, ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


# 3 -------------------------------------------------------------------------
def test_c3_pinned_instances():
    pinned = AllocationProblem([1.0, 1.0], [0.0, 0.0], [1.0, 4.0], [0.5, 0.5])
    dropping = AllocationProblem([1.0, 1.0], [0.0, 0.0], [1.0, 100.0], [0.5, 0.5])
    target_a, target_b = np.array([4 / 3, 2 / 3]), np.array([2.0, 0.0])
    grid_a = oracle_band_gains(pinned, resolution=2 / 60)
    grid_b = oracle_band_gains(dropping, resolution=2 / 60)
    err_a = np.max(np.abs(optimal_band_gains(pinned).alpha_band - target_a))
    err_b = np.max(np.abs(optimal_band_gains(dropping).alpha_band - target_b))
    grid_ok = np.allclose(grid_a, target_a, atol=1e-12) and np.allclose(grid_b, target_b, atol=1e-12)
    ok = grid_ok and err_a <= 1e-12 and err_b <= 1e-12
    record("3 pinned analytic instances", ok,
           f"grid confirms {grid_ok}, |a-(4/3,2/3)| {err_a:.1e}, |a-(2,0)| {err_b:.1e}")


# 4 -------------------------------------------------------------------------
def test_c4_mi_asii_equivalence():
    cfg = ScenarioConfig(repeats=1)
    gamma = build_filterbank(cfg.frame).gamma
    _, weights = mi_weights_from_gamma(gamma)
    rel = float(np.max(np.abs(weights - gamma) / gamma))
    scene = simulate_scenario(cfg)
    stats = BinStatistics.from_tensors(analyze(scene.speech), analyze(scene.farend_total),
                                       analyze(scene.near_noise), scene.atf)
    a = JointEnhancer.from_method("proposed_asii").fit(stats).solution_.alpha_band
    b = JointEnhancer.from_method("mi_baseline_sii").fit(stats).solution_.alpha_band
    gap = float(np.max(np.abs(a - b)))
    ok = rel <= 1e-15 and gap <= 1e-9
    record("4 MI/ASII equivalence", ok, f"max rel |I-gamma| {rel:.1e}, max |da| {gap:.1e}")


# 5 -------------------------------------------------------------------------
def test_c5_mvdr_suite():
    cfg = ScenarioConfig(repeats=1)
    scene = simulate_scenario(cfg)
    stats = BinStatistics.from_tensors(analyze(scene.speech), analyze(scene.farend_total),
                                       analyze(scene.near_noise), scene.atf)
    bf = mvdr_weights(stats, cfg.loading_rel)
    dist = float(np.max(np.abs(np.einsum("km,km->k", np.conj(bf.w), stats.steering) - 1)))

    rng = np.random.default_rng(5)
    cov, _ = loaded_covariance(stats.cov_u, cfg.loading_rel)
    violations = 0
    bins = rng.choice(stats.n_bins, 24, replace=False)
    for k in bins:
        d, w, s = stats.steering[k], bf.w[k], cov[k]
        best = np.real(np.conj(w) @ s @ w)
        proj = np.eye(len(d)) - np.outer(d, np.conj(d)) / np.vdot(d, d)
        z = (rng.standard_normal((1000, len(d))) + 1j * rng.standard_normal((1000, len(d))))
        z *= np.linalg.norm(w) * 10 ** rng.uniform(-4, 1, (1000, 1))
        v = d / np.vdot(d, d) + z @ proj.T
        power = np.real(np.einsum("im,mn,in->i", np.conj(v), s, v))
        violations += int(np.sum(best > power + 1e-12))

    scale = 0.0
    for c in (1e-4, 3.0, 1e6):
        scaled = BinStatistics(stats.sigma_s2, c * stats.cov_u, stats.sigma_n2, stats.steering)
        scale = max(scale, float(np.max(np.abs(mvdr_weights(scaled, cfg.loading_rel).w - bf.w)
                                        / np.abs(bf.w).max())))
    ok = dist <= 1e-10 and violations == 0 and scale <= 1e-12
    record("5 MVDR suite", ok,
           f"max|w^H d-1| {dist:.1e}, {violations} violations in {len(bins)}x1000, scale {scale:.1e}")


# 6 -------------------------------------------------------------------------
def test_c6_equal_power_audit(default_sweep):
    rows = default_sweep["near"] + default_sweep["far"]
    worst = max(abs(r["realized_power_ratio"] - 1) for r in rows)
    record("6 equal-power audit", worst <= 1e-6, f"{len(rows)} (point, method) rows, max|ratio-1| {worst:.1e}")


# 7 -------------------------------------------------------------------------
def _points(default_sweep):
    return list(_table(default_sweep["near"]).values()) + list(_table(default_sweep["far"]).values())


def test_c7a_proposed_vs_passthrough(default_sweep):
    gaps = [p["proposed_asii"]["asii"] - p["passthrough"]["asii"] for p in _points(default_sweep)]
    record("7a proposed >= passthrough", min(gaps) >= 0, f"min gain {min(gaps):+.4f} over {len(gaps)} points")


def test_c7b_proposed_vs_disjoint(default_sweep):
    gaps = [p["proposed_asii"]["asii"] - p["disjoint"]["asii"] for p in _points(default_sweep)]
    record("7b proposed >= disjoint - 1e-9", min(gaps) >= -1e-9, f"min gain {min(gaps):+.2e}")


def test_c7b_strict_improvement_at_reference_point(default_sweep):
    cfg = default_sweep["config"]
    point = _table(default_sweep["near"])[cfg.near_snr_db]  # far +10 dB, near -10 dB
    gap = point["proposed_asii"]["asii"] - point["disjoint"]["asii"]
    record("7b strict gain > 0.005 at (-10, +10) dB", gap > 0.005, f"gain {gap:.2e}")


def test_c7c_proposed_vs_rho075(default_sweep):
    gaps = [abs(p["proposed_asii"]["asii"] - p["mi_baseline_rho075"]["asii"]) for p in _points(default_sweep)]
    record("7c |proposed - rho0 0.75| <= 0.02", max(gaps) <= 0.02, f"max difference {max(gaps):.4f}")


def test_c7_sweep_runtime(default_sweep):
    t = default_sweep["elapsed"]
    record("7 sweep of 7x2 grid within 60 s", t <= 60, f"{t:.1f} s ({len(METHODS)} methods, "
           f"{default_sweep['config'].repeats} repeats)")


# 8 -------------------------------------------------------------------------
def test_c8_spectral_suite():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((2, 32000))
    params = FrameParams()
    rt = float(np.max(np.abs(synthesize(analyze(x, params)) - x)) / np.max(np.abs(x)))

    quarter = FrameParams(16000, 512, 128)
    t = analyze(x[0], quarter)
    psd = long_term_psd(t, steady_state=False)
    c = np.full(quarter.n_bins, 2.0)
    c[[0, -1]] = 1.0
    lhs = t.n_frames * np.sum(c * psd) / quarter.frame_len
    rhs = np.sum(quarter.window_array**2) / quarter.hop * np.sum(x[0] ** 2)
    parseval = abs(lhs - rhs) / rhs

    bands = build_filterbank(params)
    energy = 0.0
    for _ in range(100):
        p = rng.exponential(size=params.n_bins) * 10 ** rng.uniform(-6, 6, params.n_bins)
        total = p[bands.covered].sum()
        energy = max(energy, abs(band_energies(p, bands).sum() - total) / total)
    ok = rt <= 1e-10 and parseval <= 1e-8 and energy <= 1e-12
    record("8 spectral suite", ok, f"round trip {rt:.1e}, Parseval {parseval:.1e}, energy {energy:.1e}")


# 9 -------------------------------------------------------------------------
def test_c9_determinism(default_sweep, tmp_path):
    cfg = default_sweep["config"]
    methods = sorted(METHODS)
    sweep(cfg, "near_snr", NEAR_VALUES, methods, tmp_path / "a")
    sweep(cfg, "near_snr", NEAR_VALUES, methods, tmp_path / "b")
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    b = (tmp_path / "b" / "sweep.csv").read_bytes()
    same_as_fixture = a == rows_to_csv(default_sweep["near"]).encode()
    record("9 determinism (byte-identical CSV)", a == b and same_as_fixture, f"{len(a)} bytes")
