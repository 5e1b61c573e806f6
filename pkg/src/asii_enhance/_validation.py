"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np


def check_signal(signal):
    """Return ``signal`` as a float64 array of shape (n_channels, n_samples).

    One-dimensional input is treated as a single channel.
    """
    if isinstance(signal, (list, tuple)) and len(signal) and np.ndim(signal[0]) == 1:
        lengths = {len(ch) for ch in signal}
        if len(lengths) > 1:
            raise ValueError(f"channel length mismatch: {sorted(lengths)}")
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected 1-D or 2-D signal, got shape {x.shape}")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("signal is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    return x


def check_nonnegative(x, name, ndim=None):
    x = np.asarray(x, dtype=np.float64)
    if ndim is not None and x.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {x.shape}")
    if np.any(np.isnan(x)):
        raise ValueError(f"{name} contains NaN")
    if np.any(x < 0):
        raise ValueError(f"{name} must be non-negative")
    return x


def check_same_length(**arrays):
    lengths = {name: len(a) for name, a in arrays.items()}
    if len(set(lengths.values())) > 1:
        raise ValueError(f"length mismatch: {lengths}")


def check_positive_scalar(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if (strict and value <= 0) or value < 0:
        raise ValueError(f"{name} must be {'positive' if strict else 'non-negative'}, got {value}")
    return float(value)


def check_hermitian(cov, name="covariance"):
    """Validate a stack of square matrices of shape (..., M, M)."""
    cov = np.asarray(cov, dtype=np.complex128)
    if cov.ndim < 2 or cov.shape[-1] != cov.shape[-2]:
        raise ValueError(f"{name} must have trailing shape (M, M), got {cov.shape}")
    herm_err = np.max(np.abs(cov - np.conj(np.swapaxes(cov, -1, -2))), initial=0.0)
    scale = np.max(np.abs(cov), initial=0.0)
    if herm_err > 1e-10 * max(scale, 1e-300):
        raise ValueError(f"{name} is not Hermitian (max asymmetry {herm_err:.3g})")
    return cov
