"""Exact Gaussian-process regression: marginal likelihood, gradients,
posterior prediction and the held-out evaluation metrics.

The latent function has zero prior mean; observations add i.i.d. Gaussian
noise described by a :class:`~shortgp.series.NoiseModel`.  All solves go
through a Cholesky factorization with the kernels module jitter policy, and
the log-determinant comes from the factor diagonal.  Series of a handful of
points are the design target, so everything is dense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .kernels import KernelSpec, _cov_array, _dcov_dl_array, factor_covariance
from .series import NoiseModel, TimeSeries

__all__ = [
    "Posterior",
    "log_marginal_likelihood",
    "log_marginal_likelihood_gradient",
    "log_marginal_likelihood_and_gradient",
    "posterior_at",
    "predictive_log_likelihood",
    "mse",
]

_LOG_2PI = math.log(2.0 * math.pi)

# Floor applied to predictive variances before taking logs; exact
# interpolation of noise-free data yields variances of zero.
PREDICTIVE_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class Posterior:
    """Posterior moments evaluated at query times.

    ``variance_latent`` is the variance of the noise-free latent function;
    ``variance_observed`` adds the estimated observation-noise variance
    (fixed per-point noise belongs to the training observations, not to new
    query points, so in fixed mode the two coincide).
    """

    times: np.ndarray
    mean: np.ndarray
    variance_latent: np.ndarray
    variance_observed: np.ndarray


def _factorize(series: TimeSeries, kernel: KernelSpec, noise: NoiseModel):
    t = series.times
    r = np.abs(t[:, None] - t[None, :])
    gram = _cov_array(kernel, r)
    k = gram + np.diag(noise.diagonal(len(series)))
    chol, jitter = factor_covariance(k, kernel.signal_variance)
    return r, gram, chol, jitter


def log_marginal_likelihood(
    series: TimeSeries, kernel: KernelSpec, noise: NoiseModel
) -> float:
    """log p(y) = -1/2 y^T K^-1 y - 1/2 log|K| - n/2 log(2 pi)."""
    _, _, chol, _ = _factorize(series, kernel, noise)
    y = series.values
    alpha = cho_solve((chol, True), y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return float(-0.5 * y @ alpha - 0.5 * logdet - 0.5 * len(series) * _LOG_2PI)


def log_marginal_likelihood_and_gradient(
    series: TimeSeries, kernel: KernelSpec, noise: NoiseModel
) -> tuple[float, np.ndarray]:
    """Marginal likelihood and its gradient in log-parameter coordinates.

    Gradient components are ordered (d/dlog sf2, d/dlog l) plus
    d/dlog sn2 when the noise variance is estimated.  Any jitter added
    during factorization scales with sf2, so the sf2 component stays exact.
    """
    r, gram, chol, jitter = _factorize(series, kernel, noise)
    y = series.values
    n = len(series)
    alpha = cho_solve((chol, True), y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    value = float(-0.5 * y @ alpha - 0.5 * logdet - 0.5 * n * _LOG_2PI)

    k_inv = cho_solve((chol, True), np.eye(n))
    # d log p / d theta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
    inner = np.outer(alpha, alpha) - k_inv

    d_sf2 = gram + jitter * np.eye(n)  # dK/dlog sf2: the whole sf2-scaled block
    d_l = kernel.length_scale * _dcov_dl_array(kernel, r)
    grad = [0.5 * float(np.sum(inner * d_sf2)), 0.5 * float(np.sum(inner * d_l))]
    if noise.is_estimated:
        grad.append(0.5 * noise.variance * float(np.trace(inner)))
    return value, np.array(grad)


def log_marginal_likelihood_gradient(
    series: TimeSeries, kernel: KernelSpec, noise: NoiseModel
) -> np.ndarray:
    """Gradient of :func:`log_marginal_likelihood`; see the combined form."""
    return log_marginal_likelihood_and_gradient(series, kernel, noise)[1]


def posterior_at(
    series: TimeSeries,
    kernel: KernelSpec,
    noise: NoiseModel,
    query_times,
) -> Posterior:
    """Posterior mean and variances of the latent function at ``query_times``."""
    q = np.atleast_1d(np.asarray(query_times, dtype=float))
    _, _, chol, _ = _factorize(series, kernel, noise)
    alpha = cho_solve((chol, True), series.values)
    r_cross = np.abs(q[:, None] - series.times[None, :])
    k_cross = _cov_array(kernel, r_cross)
    mean = k_cross @ alpha
    v = solve_triangular(chol, k_cross.T, lower=True)
    var_latent = np.maximum(kernel.signal_variance - np.sum(v * v, axis=0), 0.0)
    var_observed = var_latent + (noise.variance if noise.is_estimated else 0.0)
    return Posterior(
        times=q, mean=mean, variance_latent=var_latent, variance_observed=var_observed
    )


def predictive_log_likelihood(
    series: TimeSeries,
    kernel: KernelSpec,
    noise: NoiseModel,
    test_times,
    test_values,
) -> float:
    """Sum of Gaussian log-densities of ``test_values`` under the latent posterior.

    Scores the noise-free posterior (the targets are true function values,
    not noisy observations).  Variances are floored at
    ``PREDICTIVE_VARIANCE_FLOOR`` before the log.
    """
    post = posterior_at(series, kernel, noise, test_times)
    y = np.atleast_1d(np.asarray(test_values, dtype=float))
    if y.shape != post.mean.shape:
        raise ValueError("test_times and test_values must have equal length")
    var = np.maximum(post.variance_latent, PREDICTIVE_VARIANCE_FLOOR)
    return float(
        np.sum(-0.5 * np.log(2.0 * math.pi * var) - (y - post.mean) ** 2 / (2.0 * var))
    )


def mse(
    series: TimeSeries,
    kernel: KernelSpec,
    noise: NoiseModel,
    test_times,
    true_values,
) -> float:
    """Mean squared difference between posterior mean and true values."""
    post = posterior_at(series, kernel, noise, test_times)
    y = np.atleast_1d(np.asarray(true_values, dtype=float))
    if y.shape != post.mean.shape:
        raise ValueError("test_times and true_values must have equal length")
    return float(np.mean((post.mean - y) ** 2))
