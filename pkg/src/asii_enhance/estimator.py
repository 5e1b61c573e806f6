"""scikit-learn style estimators.

:class:`JointEnhancer` is fit on long-term :class:`BinStatistics` and then
transforms multichannel STFTs into the single-channel playback STFT.
:class:`StftTransformer` wraps analysis/synthesis so time-domain pipelines
can be assembled with ``sklearn.pipeline``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bands import BandEnergies, band_energies, build_filterbank, load_band_table, mi_weights_from_gamma
from .beamformer import apply_weights, mvdr_weights, residual_noise_power
from .gainopt import (
    AllocationProblem,
    GainSolution,
    bin_gains_from_band_gains,
    compose_processor,
    optimal_band_gains,
    weighted_audibility,
)
from .metrics import asii_score, band_snr
from .spectral import BinStatistics, FrameParams, StftTensor, analyze, synthesize

# method name -> JointEnhancer parameters
METHODS = {
    "proposed_asii": {},
    "mi_baseline_rho075": {"weighting": "mi", "rho0": 0.75},
    "mi_baseline_sii": {"weighting": "mi", "rho0": None},
    "disjoint": {"include_far_noise": False},
    "passthrough": {"optimize_gains": False},
}


class JointEnhancer(TransformerMixin, BaseEstimator):
    """MVDR beamformer followed by intelligibility-optimal band gains.

    Parameters
    ----------
    weighting : {"asii", "mi"}
        Objective weights: band importance values, or the MI Taylor weights
        derived from ``rho0`` (or from the band importances when ``rho0`` is
        None).
    rho0 : float or None
        Uniform production/interpretation correlation for ``weighting="mi"``.
    include_far_noise : bool
        If False the residual far-end noise is ignored while optimizing the
        gains (disjoint processing); it still counts when scoring.
    optimize_gains : bool
        If False all band gains are 1 (beamformer only).
    loading_rel : float
        Diagonal loading relative to trace / M.
    band_shape : {"rectangular", "triangular"}
    band_table : path or None
        Band table file; None uses the bundled SII critical-band table.
    sample_rate, frame_len : int
        Framing the statistics were computed with.
    """

    def __init__(self, weighting="asii", rho0=None, include_far_noise=True, optimize_gains=True,
                 loading_rel=1e-6, band_shape="rectangular", band_table=None,
                 sample_rate=16000, frame_len=512):
        self.weighting = weighting
        self.rho0 = rho0
        self.include_far_noise = include_far_noise
        self.optimize_gains = optimize_gains
        self.loading_rel = loading_rel
        self.band_shape = band_shape
        self.band_table = band_table
        self.sample_rate = sample_rate
        self.frame_len = frame_len

    @classmethod
    def from_method(cls, method, **params):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {sorted(METHODS)}")
        return cls(**{**METHODS[method], **params})

    def _objective_weights(self, gamma):
        if self.weighting == "asii":
            return gamma
        if self.weighting == "mi":
            return mi_weights_from_gamma(gamma, rho0=self.rho0)[1]
        raise ValueError(f"unknown weighting {self.weighting!r}")

    def fit(self, X, y=None):
        """Fit on a :class:`BinStatistics` instance."""
        if not isinstance(X, BinStatistics):
            raise TypeError(f"expected BinStatistics, got {type(X).__name__}")
        params = FrameParams(self.sample_rate, self.frame_len)
        if X.n_bins != params.n_bins:
            raise ValueError(f"statistics have {X.n_bins} bins, frame_len {self.frame_len} gives {params.n_bins}")
        table = load_band_table(self.band_table)
        self.bands_ = build_filterbank(params, table, self.band_shape)
        self.beamformer_ = mvdr_weights(X, self.loading_rel)
        self.residual_noise_ = residual_noise_power(self.beamformer_, X)
        self.band_energies_ = BandEnergies(
            band_energies(X.sigma_s2, self.bands_),
            band_energies(self.residual_noise_, self.bands_),
            band_energies(X.sigma_n2, self.bands_),
        )
        weights = self._objective_weights(self.bands_.gamma)
        b2 = self.band_energies_.b2 if self.include_far_noise else np.zeros(self.bands_.n_bands)
        self.problem_ = AllocationProblem(self.band_energies_.s2, b2, self.band_energies_.n2, weights)
        if self.optimize_gains:
            solution = optimal_band_gains(self.problem_)
        else:
            ones = np.ones(self.bands_.n_bands)
            solution = GainSolution(
                alpha_band=ones,
                nu=float("nan"),
                active_set=np.arange(self.bands_.n_bands),
                objective_value=weighted_audibility(ones, self.problem_),
                status="fixed",
            )
        solution.alpha_bin = bin_gains_from_band_gains(solution.alpha_band, self.bands_)
        self.solution_ = solution
        self.processor_ = compose_processor(self.beamformer_, solution.alpha_bin)
        self.n_features_in_ = X.n_mics
        return self

    def transform(self, X):
        """Apply the fitted processor to a multichannel :class:`StftTensor`."""
        check_is_fitted(self, "processor_")
        if not isinstance(X, StftTensor):
            raise TypeError(f"expected StftTensor, got {type(X).__name__}")
        return apply_weights(X, self.processor_)

    def band_snr(self, X):
        """Predicted near-end band SNRs for statistics ``X``."""
        check_is_fitted(self, "processor_")
        v = self.processor_
        speech = np.abs(np.einsum("km,km->k", np.conj(v), X.steering)) ** 2 * X.sigma_s2
        noise = np.real(np.einsum("km,kmn,kn->k", np.conj(v), X.cov_u, v)) + X.sigma_n2
        return band_snr(band_energies(speech, self.bands_), band_energies(np.maximum(noise, 0), self.bands_))

    def score(self, X, y=None):
        """Predicted ASII at the near-end listener under statistics ``X``."""
        return asii_score(self.band_snr(X), self.bands_.gamma)


class StftTransformer(TransformerMixin, BaseEstimator):
    """Time signal <-> :class:`StftTensor` as a stateless transformer."""

    def __init__(self, sample_rate=16000, frame_len=512, hop=None, window="hann"):
        self.sample_rate = sample_rate
        self.frame_len = frame_len
        self.hop = hop
        self.window = window

    def fit(self, X=None, y=None):
        self.params_ = FrameParams(self.sample_rate, self.frame_len, self.hop, self.window)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return analyze(X, self.params_)

    def inverse_transform(self, X):
        return synthesize(X)
