"""Joint far-end/near-end speech intelligibility enhancement.

An MVDR beamformer followed by critical-band gains that maximize the
approximated speech intelligibility index under an equal-power constraint.
"""

from .bands import BandSystem, band_energies, build_filterbank, load_band_table, mi_weights_from_gamma
from .beamformer import BeamformerWeights, apply_weights, mvdr_weights, residual_noise_power
from .estimator import METHODS, JointEnhancer, StftTransformer
from .gainopt import (
    AllocationProblem,
    GainSolution,
    alpha_from_nu,
    bin_gains_from_band_gains,
    compose_processor,
    nu_for_active_set,
    optimal_band_gains,
    oracle_band_gains,
    weighted_audibility,
)
from .metrics import IntelligibilityReport, asii_score, band_snr
from .scene import ScenarioConfig, SceneSignals, freefield_atf, generate_noise, mix_at_snr, simulate_scenario
from .spectral import BinStatistics, FrameParams, StftTensor, analyze, estimate_noise_covariance, long_term_psd, synthesize

__version__ = "0.1.0"
