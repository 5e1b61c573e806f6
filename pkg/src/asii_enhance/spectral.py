"""Short-time spectral analysis/synthesis and long-term second-order statistics.

Tensors are one-sided (bins ``0 .. frame_len // 2``) and indexed
``[channel, frame, bin]``.  Analysis pads ``frame_len - hop`` zeros in front
and enough zeros at the tail that every input sample is covered by the full
set of overlapping frames, so weighted overlap-add reconstructs the whole
input, not only its interior.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import check_COLA, get_window

from ._validation import check_hermitian, check_nonnegative, check_signal


class RankDeficientCovarianceWarning(UserWarning):
    """Fewer frames than channels: covariance estimates are singular."""


@dataclass(frozen=True)
class FrameParams:
    sample_rate: int = 16000
    frame_len: int = 512
    hop: int | None = None
    window: str = "hann"

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if int(self.frame_len) != self.frame_len or self.frame_len <= 0 or self.frame_len % 2:
            raise ValueError(f"frame_len must be a positive even integer, got {self.frame_len}")
        if self.hop is None:
            object.__setattr__(self, "hop", self.frame_len // 2)
        if int(self.hop) != self.hop or self.hop <= 0:
            raise ValueError(f"hop must be a positive integer, got {self.hop}")
        if self.frame_len % self.hop:
            raise ValueError(f"hop {self.hop} does not divide frame_len {self.frame_len}")
        if self.frame_len < 2 * self.hop:
            raise ValueError("frame_len must be at least twice the hop")
        win = get_window(self.window, self.frame_len, fftbins=True)
        if not check_COLA(win, self.frame_len, self.frame_len - self.hop):
            raise ValueError(
                f"window {self.window!r} is not constant-overlap-add at hop {self.hop}"
            )

    @property
    def n_bins(self):
        return self.frame_len // 2 + 1

    @property
    def window_array(self):
        return get_window(self.window, self.frame_len, fftbins=True)

    @property
    def freqs(self):
        """Bin center frequencies in Hz."""
        return np.arange(self.n_bins) * self.sample_rate / self.frame_len


@dataclass
class StftTensor:
    """Complex STFT coefficients, shape (n_channels, n_frames, n_bins).

    ``n_samples`` and ``pad_front`` record the framing of the original signal
    so that :func:`synthesize` returns a signal of the original length.
    """

    data: np.ndarray
    params: FrameParams
    n_samples: int
    pad_front: int = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3:
            raise ValueError(f"STFT data must be 3-D [channel, frame, bin], got {self.data.shape}")
        if self.data.shape[2] != self.params.n_bins:
            raise ValueError(
                f"bin count {self.data.shape[2]} does not match frame_len {self.params.frame_len}"
            )
        if self.pad_front is None:
            self.pad_front = self.params.frame_len - self.params.hop

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_frames(self):
        return self.data.shape[1]

    @property
    def n_bins(self):
        return self.data.shape[2]

    def steady_mask(self):
        """Boolean mask of frames lying entirely inside the unpadded signal."""
        hop, n = self.params.hop, self.params.frame_len
        starts = np.arange(self.n_frames) * hop
        return (starts >= self.pad_front) & (starts + n <= self.pad_front + self.n_samples)

    def frame_mask(self, steady_state=True):
        if not steady_state:
            return np.ones(self.n_frames, dtype=bool)
        mask = self.steady_mask()
        if not mask.any():
            # signal shorter than one frame: fall back to every frame
            return np.ones(self.n_frames, dtype=bool)
        return mask

    def with_data(self, data):
        return StftTensor(data, self.params, self.n_samples, self.pad_front)


def _padded_length(n_samples, params):
    n, hop = params.frame_len, params.hop
    needed = (n - hop) + n_samples + (n - hop)
    n_frames = max(int(np.ceil((needed - n) / hop)) + 1, 1)
    return (n_frames - 1) * hop + n, n_frames


def analyze(signal, params=None):
    """One-sided STFT of a (multichannel) real signal."""
    params = params or FrameParams()
    x = check_signal(signal)
    n_ch, n_samples = x.shape
    pad_front = params.frame_len - params.hop
    total, _ = _padded_length(n_samples, params)
    xp = np.zeros((n_ch, total))
    xp[:, pad_front:pad_front + n_samples] = x
    frames = sliding_window_view(xp, params.frame_len, axis=-1)[:, :: params.hop, :]
    spec = np.fft.rfft(frames * params.window_array, axis=-1)
    return StftTensor(spec, params, n_samples, pad_front)


def _overlap_add(frames, hop):
    # frames: (..., I, N) with hop | N
    *lead, n_frames, n = frames.shape
    r = n // hop
    chunks = frames.reshape(*lead, n_frames, r, hop)
    out = np.zeros((*lead, n_frames + r - 1, hop), dtype=frames.dtype)
    for j in range(r):
        out[..., j:j + n_frames, :] += chunks[..., :, j, :]
    return out.reshape(*lead, (n_frames + r - 1) * hop)


def synthesize(tensor):
    """Weighted overlap-add inverse of :func:`analyze`.

    Returns an array of shape (n_channels, n_samples).
    """
    params = tensor.params
    win = params.window_array
    total, n_frames = _padded_length(tensor.n_samples, params)
    if n_frames != tensor.n_frames:
        raise ValueError(
            f"tensor has {tensor.n_frames} frames, framing of {tensor.n_samples} samples needs {n_frames}"
        )
    frames = np.fft.irfft(tensor.data, n=params.frame_len, axis=-1) * win
    out = _overlap_add(frames, params.hop)
    norm = _overlap_add(np.broadcast_to(win**2, (n_frames, params.frame_len)), params.hop)
    start = tensor.pad_front
    stop = start + tensor.n_samples
    return out[:, start:stop] / norm[start:stop]


def long_term_psd(tensor, channel=0, steady_state=True):
    """Per-bin long-term power, the plain mean of |X|^2 over frames."""
    if not -tensor.n_channels <= channel < tensor.n_channels:
        raise IndexError(f"channel {channel} out of range for {tensor.n_channels} channels")
    coeffs = tensor.data[channel][tensor.frame_mask(steady_state)]
    return np.mean(np.abs(coeffs) ** 2, axis=0)


def estimate_noise_covariance(tensor, steady_state=True):
    """Per-bin spatial covariance (1/I) sum_i u u^H, shape (n_bins, M, M)."""
    u = tensor.data[:, tensor.frame_mask(steady_state), :]
    n_ch, n_frames, _ = u.shape
    if n_frames < n_ch:
        warnings.warn(
            f"{n_frames} frames for {n_ch} channels: covariance is rank deficient, "
            "apply diagonal loading",
            RankDeficientCovarianceWarning,
            stacklevel=2,
        )
    cov = np.einsum("mik,nik->kmn", u, np.conj(u)) / n_frames
    return 0.5 * (cov + np.conj(np.swapaxes(cov, -1, -2)))


@dataclass
class BinStatistics:
    """Long-term per-bin statistics: speech power, far-end noise covariance,
    near-end noise power and steering vectors (shapes K, KxMxM, K, KxM)."""

    sigma_s2: np.ndarray
    cov_u: np.ndarray
    sigma_n2: np.ndarray
    steering: np.ndarray

    def __post_init__(self):
        self.sigma_s2 = check_nonnegative(self.sigma_s2, "sigma_s2", ndim=1)
        self.sigma_n2 = check_nonnegative(self.sigma_n2, "sigma_n2", ndim=1)
        self.cov_u = check_hermitian(self.cov_u, "cov_u")
        self.steering = np.asarray(self.steering, dtype=np.complex128)
        k = len(self.sigma_s2)
        if self.steering.ndim != 2 or self.steering.shape[0] != k:
            raise ValueError(f"steering must have shape ({k}, M), got {self.steering.shape}")
        m = self.steering.shape[1]
        if self.cov_u.shape != (k, m, m):
            raise ValueError(f"cov_u must have shape ({k}, {m}, {m}), got {self.cov_u.shape}")
        if len(self.sigma_n2) != k:
            raise ValueError("sigma_n2 length does not match sigma_s2")
        if np.any(np.all(self.steering == 0, axis=1)):
            raise ValueError("steering vector is zero in at least one bin")
        eig_min = np.linalg.eigvalsh(self.cov_u)[:, 0]
        trace = np.real(np.trace(self.cov_u, axis1=1, axis2=2))
        if np.any(eig_min < -1e-10 * np.maximum(trace, 1e-300)):
            raise ValueError("cov_u is not positive semidefinite")

    @property
    def n_bins(self):
        return len(self.sigma_s2)

    @property
    def n_mics(self):
        return self.steering.shape[1]

    @classmethod
    def from_tensors(cls, speech, farend_noise, near_noise, steering, steady_state=True):
        """Statistics from the STFTs of known component signals.

        ``speech`` is the single-channel source signal, ``farend_noise`` the
        multichannel noise at the microphones, ``near_noise`` single-channel.
        """
        return cls(
            sigma_s2=long_term_psd(speech, 0, steady_state),
            cov_u=estimate_noise_covariance(farend_noise, steady_state),
            sigma_n2=long_term_psd(near_noise, 0, steady_state),
            steering=steering,
        )
