"""MVDR weights, residual noise power and beamformer application."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .spectral import StftTensor


class SingularCovarianceError(LinAlgError):
    pass


@dataclass
class BeamformerWeights:
    w: np.ndarray  # (K, M) complex
    loading: np.ndarray  # (K,) absolute diagonal load added per bin

    @property
    def n_bins(self):
        return self.w.shape[0]

    @property
    def n_mics(self):
        return self.w.shape[1]


def loaded_covariance(cov, loading_rel):
    """Add ``loading_rel * trace / M`` to the diagonal of every bin.

    Bins with an all-zero covariance (no far-end noise at all) get a unit
    load instead, which makes the MVDR solution the matched filter, its
    limit as the noise becomes spatially white and vanishing.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    m = cov.shape[-1]
    trace = np.real(np.trace(cov, axis1=-2, axis2=-1))
    load = np.where(trace > 0, loading_rel * trace / m, 1.0)
    return cov + load[:, None, None] * np.eye(m), load


def mvdr_weights(stats, loading_rel=1e-6):
    """w_k = S^-1 d_k / (d_k^H S^-1 d_k) with S the diagonally loaded covariance.

    Solves through a Cholesky factorization per bin.
    """
    if loading_rel < 0:
        raise ValueError("loading_rel must be non-negative")
    cov, load = loaded_covariance(stats.cov_u, loading_rel)
    d = stats.steering
    if np.any(np.all(d == 0, axis=1)):
        raise ValueError("zero steering vector")
    w = np.empty_like(d)
    for k in range(len(d)):
        try:
            factor = cho_factor(cov[k], lower=True)
        except LinAlgError:
            raise SingularCovarianceError(
                f"noise covariance at bin {k} is singular (loading {load[k]:.3g})"
            ) from None
        x = cho_solve(factor, d[k])
        w[k] = x / np.vdot(d[k], x)
    return BeamformerWeights(w=w, loading=load)


def residual_noise_power(weights, stats):
    """Output far-end noise power w_k^H S_k w_k with the unloaded covariance."""
    if weights.w.shape != stats.steering.shape:
        raise ValueError(
            f"weights shape {weights.w.shape} does not match statistics {stats.steering.shape}"
        )
    w = weights.w
    power = np.real(np.einsum("km,kmn,kn->k", np.conj(w), stats.cov_u, w))
    return np.maximum(power, 0.0)


def apply_weights(tensor, weights):
    """Single-channel output y_{k,i} = w_k^H x_{k,i}."""
    w = weights.w if isinstance(weights, BeamformerWeights) else np.asarray(weights)
    if tensor.n_channels != w.shape[1] or tensor.n_bins != w.shape[0]:
        raise ValueError(
            f"tensor ({tensor.n_channels} ch, {tensor.n_bins} bins) does not match "
            f"weights {w.shape}"
        )
    y = np.einsum("km,mik->ik", np.conj(w), tensor.data)
    return StftTensor(y[None], tensor.params, tensor.n_samples, tensor.pad_front)
