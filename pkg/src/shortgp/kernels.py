"""Stationary covariance functions, their gradients and spectral densities.

Two families are provided: the squared exponential

    k(r) = sf2 * exp(-r^2 / (2 l^2))

and the Matern class

    k(r) = sf2 * 2^(1-nu)/Gamma(nu) * (sqrt(2 nu) r / l)^nu * K_nu(sqrt(2 nu) r / l)

with signal variance ``sf2``, length-scale ``l`` and smoothness ``nu``.
Half-integer nu in {1/2, 3/2, 5/2} use the elementary closed forms and are
the orders supported for likelihood fitting; arbitrary nu > 0 is available
for covariance evaluation and for the spectral bound machinery, at the cost
of a quadrature-backed Bessel evaluation per distance.

Spectral densities are returned for unit signal variance (sf2 scales the
covariance and the density by the same factor, so it cancels in every
band-energy fraction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cholesky
from scipy.linalg import LinAlgError

from .series import NoiseModel
from .special import log_bessel_k, log_gamma

__all__ = [
    "SQUARED_EXPONENTIAL",
    "MATERN",
    "FITTING_NUS",
    "KernelSpec",
    "KernelGradient",
    "FactorizationError",
    "covariance",
    "covariance_matrix",
    "covariance_gradient",
    "spectral_density",
    "factor_covariance",
]

SQUARED_EXPONENTIAL = "se"
MATERN = "matern"
FITTING_NUS = (0.5, 1.5, 2.5)

_JITTER_INITIAL = 1e-10
_JITTER_MAX = 1e-4


class FactorizationError(RuntimeError):
    """Covariance matrix stayed non-positive-definite after jitter escalation."""


@dataclass(frozen=True)
class KernelSpec:
    """Covariance family plus hyperparameters (immutable value object)."""

    family: str
    signal_variance: float
    length_scale: float
    nu: float | None = None

    def __post_init__(self) -> None:
        if self.family not in (SQUARED_EXPONENTIAL, MATERN):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.signal_variance > 0.0:
            raise ValueError("signal_variance must be > 0")
        if not self.length_scale > 0.0:
            raise ValueError("length_scale must be > 0")
        if self.family == MATERN:
            if self.nu is None or not self.nu > 0.0:
                raise ValueError("Matern kernels need nu > 0")
        elif self.nu is not None:
            raise ValueError("nu applies only to the Matern family")

    @classmethod
    def se(cls, signal_variance: float, length_scale: float) -> "KernelSpec":
        return cls(SQUARED_EXPONENTIAL, signal_variance, length_scale)

    @classmethod
    def matern(
        cls, nu: float, signal_variance: float, length_scale: float
    ) -> "KernelSpec":
        return cls(MATERN, signal_variance, length_scale, nu=float(nu))

    def with_params(self, **kwargs) -> "KernelSpec":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class KernelGradient:
    """Partial derivatives of k(r) with respect to sf2 and l."""

    d_signal_variance: float
    d_length_scale: float


def _cov_array(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    sf2 = spec.signal_variance
    l = spec.length_scale
    if spec.family == SQUARED_EXPONENTIAL:
        return sf2 * np.exp(-0.5 * (r / l) ** 2)
    nu = spec.nu
    if nu == 0.5:
        return sf2 * np.exp(-r / l)
    if nu == 1.5:
        u = (math.sqrt(3.0) / l) * r
        return sf2 * (1.0 + u) * np.exp(-u)
    if nu == 2.5:
        u = (math.sqrt(5.0) / l) * r
        return sf2 * (1.0 + u + u * u / 3.0) * np.exp(-u)
    # General order: log-space combination so that extreme intermediate
    # magnitudes (large nu, small r) stay representable.
    out = np.empty_like(r)
    log_norm = math.log(sf2) + (1.0 - nu) * math.log(2.0) - log_gamma(nu)
    scale = math.sqrt(2.0 * nu) / l
    flat_r = r.ravel()
    flat_o = out.ravel()
    for i, ri in enumerate(flat_r):
        if ri == 0.0:
            flat_o[i] = sf2
            continue
        u = scale * ri
        flat_o[i] = math.exp(log_norm + nu * math.log(u) + log_bessel_k(nu, u))
    return out


def _dcov_dl_array(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    sf2 = spec.signal_variance
    l = spec.length_scale
    if spec.family == SQUARED_EXPONENTIAL:
        return sf2 * np.exp(-0.5 * (r / l) ** 2) * r * r / l**3
    nu = spec.nu
    if nu == 0.5:
        return sf2 * np.exp(-r / l) * r / l**2
    if nu == 1.5:
        u = (math.sqrt(3.0) / l) * r
        return sf2 * 3.0 * r * r / l**3 * np.exp(-u)
    if nu == 2.5:
        u = (math.sqrt(5.0) / l) * r
        return sf2 * (5.0 * r * r / (3.0 * l**3)) * (1.0 + u) * np.exp(-u)
    # d k / d l = sf2 * 2^(1-nu)/Gamma(nu) * u^(nu+1) * K_(nu-1)(u) / l,
    # using K_nu'(u) = -(K_(nu-1) + K_(nu+1))/2 and the standard recurrence.
    out = np.empty_like(r)
    log_norm = math.log(sf2) + (1.0 - nu) * math.log(2.0) - log_gamma(nu)
    scale = math.sqrt(2.0 * nu) / l
    flat_r = r.ravel()
    flat_o = out.ravel()
    for i, ri in enumerate(flat_r):
        if ri == 0.0:
            flat_o[i] = 0.0
            continue
        u = scale * ri
        flat_o[i] = math.exp(
            log_norm + (nu + 1.0) * math.log(u) + log_bessel_k(nu - 1.0, u)
        ) / l
    return out


def covariance(spec: KernelSpec, r):
    """Covariance k(r) at separation ``r`` (scalar or array, r >= 0).

    Equals sf2 at r = 0 and decreases monotonically with distance.
    """
    arr = np.abs(np.asarray(r, dtype=float))
    out = _cov_array(spec, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def covariance_gradient(spec: KernelSpec, r) -> KernelGradient:
    """Derivatives of k(r) with respect to the hyperparameters.

    For the Matern family nu is held fixed (no smoothness gradient).
    """
    rr = abs(float(np.asarray(r, dtype=float)))
    k = covariance(spec, rr)
    d_sf2 = k / spec.signal_variance
    d_l = float(_dcov_dl_array(spec, np.atleast_1d(np.float64(rr)))[0])
    return KernelGradient(d_signal_variance=d_sf2, d_length_scale=d_l)


def covariance_matrix(
    spec: KernelSpec, times, noise: NoiseModel | None = None
) -> np.ndarray:
    """Gram matrix of the kernel over ``times`` plus the noise diagonal.

    ``times`` may contain coincident entries (the result is then merely
    positive semi-definite; see :func:`factor_covariance` for the jitter
    policy applied at factorization time).
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if not np.all(np.isfinite(t)):
        raise ValueError("times must be finite")
    r = np.abs(t[:, None] - t[None, :])
    k = _cov_array(spec, r)
    if noise is not None:
        k[np.diag_indices_from(k)] += noise.diagonal(t.shape[0])
    return k


def factor_covariance(
    matrix: np.ndarray, signal_variance: float
) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``matrix`` under the jitter policy.

    Jitter starts at 1e-10 * sf2 on the diagonal and escalates tenfold up to
    1e-4 * sf2; returns (L, jitter_used) or raises FactorizationError once
    the ladder is exhausted.  Scaling the jitter by the signal variance
    keeps the kernel block of the matrix proportional to sf2, which the
    likelihood gradients rely on.
    """
    try:
        return cholesky(matrix, lower=True), 0.0
    except LinAlgError:
        pass
    jitter = _JITTER_INITIAL
    eye = np.eye(matrix.shape[0])
    while jitter <= _JITTER_MAX * 1.0000001:
        try:
            return (
                cholesky(matrix + jitter * signal_variance * eye, lower=True),
                jitter * signal_variance,
            )
        except LinAlgError:
            jitter *= 10.0
    raise FactorizationError(
        "covariance matrix not positive definite even with jitter "
        f"{_JITTER_MAX:g} * signal_variance"
    )


def spectral_density(spec: KernelSpec, s):
    """Spectral density of the kernel at frequency ``s`` (one input dimension).

    Returned for unit signal variance; multiply by sf2 for the full density.
    The density is even in s and integrates to one over the real line, so
    band integrals are directly interpretable as energy fractions.

    Squared exponential:  S(s) = sqrt(2 pi) l exp(-2 pi^2 l^2 s^2).
    Matern:  S(s) = 2 sqrt(pi) Gamma(nu + 1/2) (2 nu)^nu / (Gamma(nu) l^(2 nu))
                    * (2 nu / l^2 + 4 pi^2 s^2)^-(nu + 1/2).
    """
    arr = np.asarray(s, dtype=float)
    ss = np.atleast_1d(arr)
    l = spec.length_scale
    if spec.family == SQUARED_EXPONENTIAL:
        out = math.sqrt(2.0 * math.pi) * l * np.exp(-2.0 * (math.pi * l * ss) ** 2)
    else:
        nu = spec.nu
        log_norm = (
            math.log(2.0)
            + 0.5 * math.log(math.pi)
            + log_gamma(nu + 0.5)
            - log_gamma(nu)
            + nu * math.log(2.0 * nu)
            - 2.0 * nu * math.log(l)
        )
        base = 2.0 * nu / l**2 + 4.0 * (math.pi * ss) ** 2
        out = np.exp(log_norm - (nu + 0.5) * np.log(base))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)
