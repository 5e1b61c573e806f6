"""Oracle-equivalence and invariant checks runnable without pytest."""

import time

import numpy as np

from .bands import build_filterbank, band_energies, mi_weights_from_gamma
from .beamformer import mvdr_weights
from .gainopt import (
    AllocationProblem,
    kkt_residuals,
    optimal_band_gains,
    oracle_band_gains,
    weighted_audibility,
)
from .spectral import BinStatistics, FrameParams, analyze, synthesize


def random_problem(rng, n_bands=None, decades=6, weights=None):
    """Allocation problem with log-uniform energies spanning ``decades``."""
    if n_bands is None:
        n_bands = int(rng.integers(2, 9))

    def energy():
        return 10 ** rng.uniform(-decades / 2, decades / 2, n_bands)

    if weights is None:
        weights = rng.uniform(0.01, 0.06, n_bands)
    return AllocationProblem(energy(), energy(), energy(), weights)


def random_hermitian_psd(rng, m, rank=None):
    rank = m if rank is None else rank
    a = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
    return a @ a.conj().T


def check_oracle_equivalence(n=100, seed=0):
    rng = np.random.default_rng(seed)
    worst_alpha = worst_obj = 0.0
    for _ in range(n):
        p = random_problem(rng)
        sol = optimal_band_gains(p)
        ref = oracle_band_gains(p, mode="projected_gradient")
        worst_alpha = max(worst_alpha, np.max(np.abs(ref - sol.alpha_band)))
        worst_obj = max(worst_obj, abs(weighted_audibility(ref, p) - sol.objective_value))
    return worst_alpha <= 1e-6 and worst_obj <= 1e-9, f"max |da| {worst_alpha:.2e}, max |dobj| {worst_obj:.2e}"


def check_kkt(n=100, seed=1):
    rng = np.random.default_rng(seed)
    worst = {"stationarity": 0.0, "primal": 0.0, "dual_min": 0.0}
    for _ in range(n):
        p = random_problem(rng)
        res = kkt_residuals(optimal_band_gains(p), p)
        worst["stationarity"] = max(worst["stationarity"], res["stationarity"])
        worst["primal"] = max(worst["primal"], res["primal"])
        worst["dual_min"] = min(worst["dual_min"], res["dual_min"])
    ok = worst["stationarity"] <= 1e-8 and worst["primal"] <= 1e-9 and worst["dual_min"] >= -1e-12
    return ok, ", ".join(f"{k} {v:.2e}" for k, v in worst.items())


def check_mi_equivalence():
    gamma = build_filterbank(FrameParams()).gamma
    _, weights = mi_weights_from_gamma(gamma)
    err = np.max(np.abs(weights - gamma) / gamma)
    return err <= 1e-15, f"max rel |I - gamma| {err:.2e}"


def check_mvdr(seed=2):
    rng = np.random.default_rng(seed)
    k, m = 16, 3
    cov = np.array([random_hermitian_psd(rng, m) for _ in range(k)])
    d = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
    stats = BinStatistics(np.ones(k), cov, np.ones(k), d)
    w = mvdr_weights(stats).w
    dist = np.max(np.abs(np.einsum("km,km->k", w.conj(), d) - 1))
    scaled = BinStatistics(np.ones(k), 7.5 * cov, np.ones(k), d)
    scale_err = np.max(np.abs(mvdr_weights(scaled).w - w)) / np.max(np.abs(w))
    return dist <= 1e-10 and scale_err <= 1e-12, f"distortionless {dist:.2e}, scale {scale_err:.2e}"


def check_round_trip(seed=3):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, 16000))
    y = synthesize(analyze(x, FrameParams()))
    err = np.max(np.abs(y - x)) / np.max(np.abs(x))
    return err <= 1e-10, f"max rel error {err:.2e}"


def check_energy_preservation(seed=4):
    rng = np.random.default_rng(seed)
    bands = build_filterbank(FrameParams())
    psd = rng.exponential(size=bands.n_bins)
    cov = bands.covered
    err = abs(band_energies(psd, bands).sum() - psd[cov].sum()) / psd[cov].sum()
    return err <= 1e-12, f"relative error {err:.2e}"


CHECKS = {
    "oracle_equivalence": check_oracle_equivalence,
    "kkt_residuals": check_kkt,
    "mi_asii_equivalence": check_mi_equivalence,
    "mvdr": check_mvdr,
    "stft_round_trip": check_round_trip,
    "band_energy_preservation": check_energy_preservation,
}


def run_selftest(out=print):
    """Run every check, print one line each, return True if all pass."""
    all_ok = True
    for name, check in CHECKS.items():
        t0 = time.perf_counter()
        ok, detail = check()
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name:<26} {detail}  ({time.perf_counter() - t0:.2f} s)")
    return all_ok
