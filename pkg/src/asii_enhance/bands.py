"""Critical-band filterbank over STFT bins, band energies and MI weights.

A :class:`BandSystem` holds the squared band responses |H_j(k)|^2 as a
J x K matrix whose columns sum to one on every covered bin, so band energies
add up to the total bin energy.  Bins outside every band carry zero weight;
downstream code freezes their gain at 1.
"""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ._validation import check_nonnegative

GAMMA_RANGE = (0.01, 0.06)
DEFAULT_TABLE = "sii_critical_bands.txt"


@dataclass(frozen=True)
class BandTable:
    low_hz: np.ndarray
    high_hz: np.ndarray
    gamma: np.ndarray
    source: str = "<memory>"

    def __len__(self):
        return len(self.gamma)


def parse_band_table(text, source="<memory>", check_gamma_range=True):
    """Parse ``low_edge_hz high_edge_hz gamma`` rows; ``#`` starts a comment."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ValueError(f"{source}:{lineno}: expected 3 columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{source}: empty band table")
    arr = np.array(rows)
    low, high, gamma = arr.T
    if np.any(high <= low):
        raise ValueError(f"{source}: band upper edge must exceed lower edge")
    if np.any(low[1:] < high[:-1] - 1e-9):
        raise ValueError(f"{source}: overlapping band edges")
    if np.any(gamma <= 0):
        raise ValueError(f"{source}: band importance values must be positive")
    if check_gamma_range and (gamma.min() < GAMMA_RANGE[0] or gamma.max() > GAMMA_RANGE[1]):
        raise ValueError(
            f"{source}: band importance outside [{GAMMA_RANGE[0]}, {GAMMA_RANGE[1]}]"
        )
    if check_gamma_range and abs(gamma.sum() - 1.0) > 1e-3:
        raise ValueError(f"{source}: band importance sums to {gamma.sum():.4f}, expected 1")
    return BandTable(low, high, gamma, source)


def load_band_table(path=None, check_gamma_range=True):
    """Load a band table; the bundled 21-band SII table when ``path`` is None."""
    if path is None:
        text = resources.files("asii_enhance").joinpath("data").joinpath(DEFAULT_TABLE).read_text()
        return parse_band_table(text, DEFAULT_TABLE, check_gamma_range)
    path = Path(path)
    return parse_band_table(path.read_text(), str(path), check_gamma_range)


@dataclass(frozen=True)
class BandSystem:
    weights: np.ndarray  # (J, K) squared band responses
    gamma: np.ndarray  # (J,)
    edges: np.ndarray  # (J + 1,) Hz

    @property
    def n_bands(self):
        return self.weights.shape[0]

    @property
    def n_bins(self):
        return self.weights.shape[1]

    @property
    def covered(self):
        """Bins that belong to at least one band."""
        return self.weights.sum(axis=0) > 0


def build_filterbank(params, table=None, shape="rectangular"):
    """Map a band table onto the STFT bins of ``params``.

    ``shape="rectangular"`` assigns each bin wholly to the band whose
    ``[low, high)`` interval contains its center frequency.  ``"triangular"``
    uses overlapping triangles peaking at band centers and reaching zero at
    the neighbouring centers, renormalized so each covered column sums to 1.
    Band edges above Nyquist are clipped to Nyquist.
    """
    if table is None:
        table = load_band_table()
    nyquist = params.sample_rate / 2
    if len(table) == 0:
        raise ValueError("empty band table")
    if table.low_hz[0] < 0 or table.low_hz[-1] >= nyquist:
        raise ValueError("band table must lie within [0, sample_rate / 2]")
    edges = np.append(table.low_hz, min(table.high_hz[-1], nyquist))
    edges[1:-1] = np.minimum(edges[1:-1], nyquist)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("band edges must be strictly increasing after clipping")
    freqs = params.freqs
    n_bands = len(table)

    if shape == "rectangular":
        # last band is closed at its upper edge so Nyquist is covered after clipping
        idx = np.searchsorted(edges, freqs, side="right") - 1
        idx[freqs == edges[-1]] = n_bands - 1
        inside = (freqs >= edges[0]) & (freqs <= edges[-1])
        weights = np.zeros((n_bands, len(freqs)))
        weights[idx[inside], np.flatnonzero(inside)] = 1.0
    elif shape == "triangular":
        centers = np.sqrt(edges[:-1] * np.maximum(edges[1:], 1e-12))
        centers = np.where(edges[:-1] > 0, centers, 0.5 * (edges[:-1] + edges[1:]))
        lo = np.append(edges[0], centers[:-1])
        hi = np.append(centers[1:], edges[-1])
        f = freqs[None, :]
        rise = (f - lo[:, None]) / np.maximum(centers - lo, 1e-12)[:, None]
        fall = (hi[:, None] - f) / np.maximum(hi - centers, 1e-12)[:, None]
        tri = np.clip(np.minimum(rise, fall), 0.0, None)
        # flat shoulders below the first and above the last center
        tri[0, (freqs >= edges[0]) & (freqs <= centers[0])] = 1.0
        tri[-1, (freqs >= centers[-1]) & (freqs <= edges[-1])] = 1.0
        inside = (freqs >= edges[0]) & (freqs <= edges[-1])
        tri[:, ~inside] = 0.0
        colsum = tri.sum(axis=0)
        weights = np.divide(tri, colsum, out=np.zeros_like(tri), where=colsum > 0)
    else:
        raise ValueError(f"unknown band shape {shape!r}")

    return BandSystem(weights=weights, gamma=np.array(table.gamma, dtype=float), edges=edges)


def band_energies(psd, bands):
    """sum_k |H_j(k)|^2 psd_k for every band j."""
    psd = check_nonnegative(psd, "psd", ndim=1)
    if len(psd) != bands.n_bins:
        raise ValueError(f"psd has {len(psd)} bins, band system expects {bands.n_bins}")
    return bands.weights @ psd


@dataclass
class BandEnergies:
    """Per-band speech, residual far-end noise and near-end noise energies."""

    s2: np.ndarray
    b2: np.ndarray
    n2: np.ndarray

    def __post_init__(self):
        self.s2 = check_nonnegative(self.s2, "s2", ndim=1)
        self.b2 = check_nonnegative(self.b2, "b2", ndim=1)
        self.n2 = check_nonnegative(self.n2, "n2", ndim=1)
        if not len(self.s2) == len(self.b2) == len(self.n2):
            raise ValueError("band energy sequences differ in length")


def mi_weights_from_gamma(gamma=None, rho0=None, n_bands=None):
    """Squared production/interpretation correlation and MI band weights.

    With ``gamma`` given, rho0^2 = 1 - 2^(-2 gamma); with ``rho0`` given it
    overrides the mapping (uniform over ``n_bands`` if scalar).  The weights
    are the first-order Taylor coefficients -1/2 log2(1 - rho0^2), which
    reduce to gamma exactly under the SII-derived mapping.
    """
    if rho0 is not None:
        rho0 = np.asarray(rho0, dtype=float)
        if rho0.ndim == 0:
            size = n_bands if n_bands is not None else (len(gamma) if gamma is not None else 1)
            rho0 = np.full(size, float(rho0))
        if np.any(np.abs(rho0) >= 1):
            raise ValueError("|rho0| must be below 1")
        rho0_sq = rho0**2
    else:
        if gamma is None:
            raise ValueError("need gamma or rho0")
        gamma = np.asarray(gamma, dtype=float)
        if np.any(gamma <= 0) or not np.all(np.isfinite(gamma)):
            raise ValueError("gamma must be positive and finite")
        rho0_sq = -np.expm1(-2.0 * gamma * np.log(2.0))
        if np.any(rho0_sq >= 1):
            raise ValueError("gamma too large: rho0^2 rounds to 1")
    mi_weights = -0.5 * np.log1p(-rho0_sq) / np.log(2.0)
    return rho0_sq, mi_weights
