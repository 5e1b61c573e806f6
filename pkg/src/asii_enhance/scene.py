"""Free-field acoustic scene: transfer functions, noise sources, SNR mixing."""

from dataclasses import dataclass, field
from importlib import resources
from math import gcd

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft
from scipy.io import wavfile
from scipy.signal import butter, resample_poly, sosfiltfilt

from .spectral import FrameParams

SPEED_OF_SOUND = 343.0
NOISE_KINDS = ("white", "pink", "speech_shaped")
SYNTHETIC_SPEECH = "synthetic_speech_shaped"


@dataclass(frozen=True)
class ScenarioConfig:
    room_dims: tuple = (3.0, 4.0, 3.0)
    source_pos: tuple = (1.50, 3.00, 1.0)
    mic_pos: tuple = ((1.50, 2.00, 1.0), (1.50, 2.02, 1.0))
    noise_pos: tuple = ((0.50, 1.00, 1.0), (0.75, 3.00, 1.0), (3.00, 1.60, 1.0))
    frame: FrameParams = field(default_factory=FrameParams)
    far_snr_db: float = 10.0
    near_snr_db: float = -10.0
    mic_snr_db: float = 60.0
    near_noise_kind: str = "pink"
    far_noise_kind: str = "speech_shaped"
    speech_source: str = SYNTHETIC_SPEECH
    seed: int = 0
    duration_s: float = 4.0
    repeats: int = 10
    band_shape: str = "rectangular"
    band_table: str | None = None
    loading_rel: float = 1e-6

    def __post_init__(self):
        room = np.asarray(self.room_dims, dtype=float)
        if room.shape != (3,) or np.any(room <= 0):
            raise ValueError(f"room_dims must be three positive lengths, got {self.room_dims}")
        if len(self.mic_pos) < 1:
            raise ValueError("need at least one microphone")
        for name, pts in (("source_pos", [self.source_pos]), ("mic_pos", self.mic_pos),
                          ("noise_pos", self.noise_pos)):
            for p in pts:
                p = np.asarray(p, dtype=float)
                # free field: a source on a wall is fine, outside the room is not
                if p.shape != (3,) or np.any(p < 0) or np.any(p > room):
                    raise ValueError(f"{name} {tuple(p)} lies outside the room")
        for name in ("far_snr_db", "near_snr_db", "mic_snr_db"):
            v = getattr(self, name)
            if np.isnan(v) or (v == -np.inf):
                raise ValueError(f"{name} must be finite (or +inf to disable the noise)")
        if np.isinf(self.near_snr_db):
            raise ValueError("near_snr_db must be finite")
        for name in ("near_noise_kind", "far_noise_kind"):
            if getattr(self, name) not in NOISE_KINDS:
                raise ValueError(f"{name} must be one of {NOISE_KINDS}")
        if self.duration_s < 1.0:
            raise ValueError("duration_s must be at least 1 s")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")

    @property
    def sample_rate(self):
        return self.frame.sample_rate

    @property
    def n_mics(self):
        return len(self.mic_pos)


@dataclass
class SceneSignals:
    speech: np.ndarray  # (L,) source signal S
    clean_at_mics: np.ndarray  # (M, L)
    farend_noise_at_mics: np.ndarray  # (M, L)
    mic_noise: np.ndarray  # (M, L)
    near_noise: np.ndarray  # (L,)
    mixed_mics: np.ndarray  # (M, L)
    atf: np.ndarray  # (K, M) steering vectors on the STFT grid
    noise_atf: np.ndarray = None  # (Q, K, M)

    @property
    def farend_total(self):
        """Everything at the microphones that is not target speech."""
        return self.farend_noise_at_mics + self.mic_noise


def freefield_atf(src, mic, params, c=SPEED_OF_SOUND):
    """Direct-path transfer function exp(-2j pi f r / c) / (4 pi r).

    ``params`` is a :class:`FrameParams` (STFT bin grid) or an array of
    frequencies in Hz.
    """
    dist = float(np.linalg.norm(np.asarray(src, float) - np.asarray(mic, float)))
    if dist == 0:
        raise ValueError("source and microphone coincide")
    freqs = params.freqs if isinstance(params, FrameParams) else np.asarray(params, float)
    return np.exp(-2j * np.pi * freqs * dist / c) / (4 * np.pi * dist)


def _rng_streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _ltass_density(freqs):
    text = resources.files("asii_enhance").joinpath("data").joinpath("ltass.txt").read_text()
    rows = np.array([[float(v) for v in ln.split()] for ln in text.splitlines()
                     if ln.strip() and not ln.lstrip().startswith("#")])
    fc, level = rows.T
    # one-third-octave band power -> spectral density: bandwidth grows with fc
    density_db = level - 10 * np.log10(fc)
    f = np.clip(freqs, fc[0], fc[-1])
    return np.interp(np.log(f), np.log(fc), density_db)


def _shape_spectrum(white, sample_rate, kind):
    n = len(white)
    spec = rfft(white)
    freqs = np.arange(len(spec)) * sample_rate / n
    if kind == "white":
        gain = np.ones_like(freqs)
    elif kind == "pink":
        gain = np.zeros_like(freqs)
        gain[1:] = 1 / np.sqrt(freqs[1:])
    elif kind == "speech_shaped":
        gain = 10 ** (_ltass_density(freqs) / 20)
        gain[0] = 0.0
    else:
        raise ValueError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")
    return irfft(spec * gain, n)


def _unit_power(x):
    p = np.mean(x**2)
    if p == 0:
        raise ValueError("cannot normalize a silent signal")
    return x / np.sqrt(p)


def generate_noise(kind, duration, sample_rate, seed):
    """Unit-variance noise of the given spectral ``kind``, deterministic in ``seed``."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    if kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    return _unit_power(_shape_spectrum(rng.standard_normal(n), sample_rate, kind))


def synthetic_speech(duration, sample_rate, seed, mod_rate_hz=4.0):
    """Speech-shaped noise with a syllable-rate log-normal envelope."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    carrier = _shape_spectrum(rng.standard_normal(n), sample_rate, "speech_shaped")
    sos = butter(2, [mod_rate_hz / 2, mod_rate_hz * 2], btype="bandpass", fs=sample_rate, output="sos")
    z = sosfiltfilt(sos, rng.standard_normal(n))
    envelope = np.exp(1.2 * z / np.std(z))
    return _unit_power(carrier * envelope)


def load_speech_wav(path, sample_rate, duration=None):
    """Read a mono WAV (16-bit PCM or 32-bit float), resampling polyphase if needed."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected a mono WAV, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        x = data / 2147483648.0
    elif np.issubdtype(data.dtype, np.floating):
        x = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}")
    if rate != sample_rate:
        g = gcd(rate, sample_rate)
        x = resample_poly(x, sample_rate // g, rate // g)
    if duration is not None:
        x = x[: int(round(duration * sample_rate))]
    if len(x) < sample_rate:
        raise ValueError(f"{path}: speech shorter than 1 s")
    return _unit_power(x)


def mix_at_snr(reference, noise, snr_db):
    """Scale ``noise`` so that 10 log10(P_ref / P_noise) equals ``snr_db``."""
    p_ref = np.mean(np.asarray(reference, float) ** 2)
    noise = np.asarray(noise, float)
    p_noise = np.mean(noise**2)
    if p_ref == 0 or p_noise == 0:
        raise ValueError("reference and noise must be non-silent")
    return noise * np.sqrt(p_ref / (p_noise * 10 ** (snr_db / 10)))


def _propagate(x, src, mic, sample_rate, c=SPEED_OF_SOUND):
    # frequency-domain fractional delay and 1/r attenuation
    dist = np.linalg.norm(np.asarray(src, float) - np.asarray(mic, float))
    pad = int(np.ceil(dist / c * sample_rate)) + 512
    nfft = next_fast_len(len(x) + pad, real=True)
    freqs = np.arange(nfft // 2 + 1) * sample_rate / nfft
    y = irfft(rfft(x, nfft) * freefield_atf(src, mic, freqs, c), nfft)
    return y[: len(x)]


def simulate_scenario(config):
    """Assemble every signal of the far-end/near-end scene for ``config``.

    Far-end SNR is measured at the first microphone against the clean speech
    there, after normalizing every noise source to unit power.  Microphone
    self-noise is set per microphone against that microphone's clean speech.
    Near-end SNR is relative to the source speech power, which is also the
    playback power under the equal-power constraint.
    """
    fs = config.sample_rate
    n_noise = len(config.noise_pos)
    streams = _rng_streams(config.seed, 2 + n_noise + config.n_mics)
    speech_rng, near_rng = streams[:2]
    noise_rngs = streams[2:2 + n_noise]
    mic_rngs = streams[2 + n_noise:]

    if config.speech_source == SYNTHETIC_SPEECH:
        speech = synthetic_speech(config.duration_s, fs, speech_rng)
    else:
        speech = load_speech_wav(config.speech_source, fs, config.duration_s)
    n = len(speech)
    duration = n / fs

    clean = np.stack([_propagate(speech, config.source_pos, m, fs) for m in config.mic_pos])

    far = np.zeros_like(clean)
    if np.isfinite(config.far_snr_db) and n_noise:
        for rng, pos in zip(noise_rngs, config.noise_pos):
            src = generate_noise(config.far_noise_kind, duration, fs, rng)
            far += np.stack([_propagate(src, pos, m, fs) for m in config.mic_pos])
        gain = np.sqrt(np.mean(clean[0] ** 2) / (np.mean(far[0] ** 2) * 10 ** (config.far_snr_db / 10)))
        far *= gain

    mic_noise = np.zeros_like(clean)
    if np.isfinite(config.mic_snr_db):
        for m, rng in enumerate(mic_rngs):
            mic_noise[m] = mix_at_snr(clean[m], generate_noise("white", duration, fs, rng),
                                      config.mic_snr_db)

    near = mix_at_snr(speech, generate_noise(config.near_noise_kind, duration, fs, near_rng),
                      config.near_snr_db)

    atf = np.stack([freefield_atf(config.source_pos, m, config.frame) for m in config.mic_pos], axis=1)
    noise_atf = np.array([
        np.stack([freefield_atf(p, m, config.frame) for m in config.mic_pos], axis=1)
        for p in config.noise_pos
    ])
    return SceneSignals(
        speech=speech,
        clean_at_mics=clean,
        farend_noise_at_mics=far,
        mic_noise=mic_noise,
        near_noise=near,
        mixed_mics=clean + far + mic_noise,
        atf=atf,
        noise_atf=noise_atf,
    )
