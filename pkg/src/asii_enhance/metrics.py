"""Band SNRs and the approximated speech intelligibility index."""

from dataclasses import asdict, dataclass

import numpy as np

from .bands import band_energies


def band_snr(speech_e, noise_e):
    """Element-wise speech/noise ratio; x/0 is inf for x > 0 and 0 for 0/0."""
    speech_e = np.asarray(speech_e, dtype=float)
    noise_e = np.asarray(noise_e, dtype=float)
    if speech_e.shape != noise_e.shape:
        raise ValueError("speech and noise energies differ in shape")
    if np.any(speech_e < 0) or np.any(noise_e < 0):
        raise ValueError("band energies must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = speech_e / noise_e
    return np.where((speech_e == 0), 0.0, xi)


def audibility(xi):
    """f(xi) = xi / (xi + 1), with f(inf) = 1."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(np.isnan(xi)):
        raise ValueError("band SNR must be non-negative")
    finite = np.where(np.isinf(xi), 0.0, xi)
    return np.where(np.isinf(xi), 1.0, finite / (finite + 1.0))


def asii_score(xi, gamma):
    """sum_j gamma_j xi_j / (xi_j + 1)."""
    gamma = np.asarray(gamma, dtype=float)
    a = audibility(xi)
    if a.shape != gamma.shape:
        raise ValueError("band SNR and importance weights differ in length")
    return float(np.sum(gamma * a))


def snr_db(xi, ceiling_db=40.0):
    """Band SNR in dB for reporting, clipped to ``ceiling_db``; 0 maps to -inf."""
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(np.asarray(xi, dtype=float))
    return np.minimum(db, ceiling_db)


@dataclass
class IntelligibilityReport:
    method_label: str
    asii: float
    band_snr_db: np.ndarray
    band_audibility: np.ndarray
    realized_power_ratio: float
    estoi: float | None = None  # merged from an external scorer

    def to_dict(self):
        out = asdict(self)
        out["band_snr_db"] = [None if not np.isfinite(v) else float(v) for v in self.band_snr_db]
        out["band_audibility"] = [float(v) for v in self.band_audibility]
        return out


def intelligibility_report(speech_psd, noise_psd, bands, method_label, input_speech_power,
                           ceiling_db=40.0):
    """ASII report from long-term per-bin powers at the near-end listener.

    ``speech_psd`` is the processed speech power per bin, ``noise_psd`` the
    sum of processed far-end noise and near-end noise.
    """
    s = band_energies(speech_psd, bands)
    u = band_energies(noise_psd, bands)
    xi = band_snr(s, u)
    a = audibility(xi)
    return IntelligibilityReport(
        method_label=method_label,
        asii=asii_score(xi, bands.gamma),
        band_snr_db=snr_db(xi, ceiling_db),
        band_audibility=a,
        realized_power_ratio=float(np.sum(speech_psd) / input_speech_power),
    )
