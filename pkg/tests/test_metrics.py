import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asii_enhance.bands import build_filterbank
from asii_enhance.gainopt import optimal_band_gains
from asii_enhance.metrics import (
    asii_score,
    audibility,
    band_snr,
    intelligibility_report,
    snr_db,
)
from asii_enhance.selftest import random_problem
from asii_enhance.spectral import FrameParams


def test_band_snr_examples(rng):
    assert band_snr([2.0], [2.0]).tolist() == [1.0]
    assert band_snr([0.0], [3.0]).tolist() == [0.0]
    assert band_snr([0.0], [0.0]).tolist() == [0.0]
    assert band_snr([1.0], [0.0]).tolist() == [np.inf]
    s, n = rng.exponential(size=30), rng.exponential(size=30)
    np.testing.assert_array_equal(band_snr(s, n), np.array([a / b for a, b in zip(s, n)]))
    with pytest.raises(ValueError):
        band_snr([1.0], [-1.0])
    with pytest.raises(ValueError):
        band_snr([1.0, 2.0], [1.0])


def test_zero_zero_band_reports_minus_inf_and_zero_audibility():
    xi = band_snr([0.0], [0.0])
    assert snr_db(xi)[0] == -np.inf
    assert audibility(xi)[0] == 0.0


def test_snr_db_ceiling():
    np.testing.assert_allclose(snr_db([1.0, 10.0, 1e9, np.inf]), [0.0, 10.0, 40.0, 40.0])
    assert snr_db([1e9], ceiling_db=60)[0] == 60


def test_asii_examples():
    gamma = np.full(4, 0.25)
    assert asii_score(np.full(4, np.inf), gamma) == 1.0
    assert asii_score(np.full(4, 1e12), gamma) == pytest.approx(1.0)
    assert asii_score(np.zeros(4), gamma) == 0.0
    assert asii_score(np.ones(4), gamma) == 0.5
    with pytest.raises(ValueError):
        asii_score(-np.ones(4), gamma)
    with pytest.raises(ValueError):
        asii_score(np.ones(3), gamma)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_asii_strictly_monotone(seed):
    rng = np.random.default_rng(seed)
    gamma = rng.uniform(0.01, 0.06, 8)
    xi = 10 ** rng.uniform(-3, 3, 8)
    j = rng.integers(8)
    up = xi.copy()
    up[j] *= 1.5
    assert asii_score(up, gamma) > asii_score(xi, gamma)
    assert asii_score(xi, gamma) <= gamma.sum()


def test_metric_equals_optimizer_objective(rng):
    for _ in range(50):
        p = random_problem(rng)
        sol = optimal_band_gains(p)
        a = sol.alpha_band
        xi = band_snr(a * p.s2, a * p.b2 + p.n2)
        assert abs(asii_score(xi, p.weights) - sol.objective_value) <= 1e-12


def test_report_invariants(rng):
    bands = build_filterbank(FrameParams())
    speech = rng.exponential(size=257)
    noise = rng.exponential(size=257)
    r = intelligibility_report(speech, noise, bands, "x", input_speech_power=speech.sum())
    assert abs(r.asii - np.sum(bands.gamma * r.band_audibility)) <= 1e-12
    assert np.all((r.band_audibility >= 0) & (r.band_audibility < 1))
    assert r.realized_power_ratio == pytest.approx(1.0)
    d = r.to_dict()
    assert d["method_label"] == "x" and d["estoi"] is None and len(d["band_snr_db"]) == 21
