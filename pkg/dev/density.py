import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from dev.core import InvalidParameterError

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-300
REGULARIZATION_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class CumulativeKernel:
    """
    Row-wise prefix sums of the Gaussian kernel matrix of a series.

    cumsum[t, j] is the sum of K(x_t, x_i) for i <= j. Querying j = -1 yields 0.
    """

    cumsum: np.ndarray
    n: int
    log_norm: float
    bandwidth: float

    def row_total(self, t):
        return self.cumsum[t, self.n - 1]


@dataclass(frozen=True, eq=False)
class GaussianCumulants:
    """Prefix sums of x_t (sum1) and of x_t x_t^T (sum2), each with a leading zero row."""

    sum1: np.ndarray
    sum2: np.ndarray

    @property
    def n(self):
        return self.sum1.shape[0] - 1

    @property
    def dims(self):
        return self.sum1.shape[1]


@dataclass(frozen=True, eq=False)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise InvalidParameterError(f"Covariance shape {cov.shape} does not match mean of length {mean.shape[0]}")
        if self.count < 1:
            raise InvalidParameterError(f"Gaussian stats need count >= 1, got {self.count}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dims(self):
        return self.mean.shape[0]


def kernel_log_norm(dims, bandwidth):
    return -0.5 * dims * np.log(2 * np.pi * bandwidth**2)


def gaussian_kernel_matrix(a, b, bandwidth):
    """Normalized Gaussian kernel values between the rows of a and b."""
    sq_dist = cdist(a, b, "sqeuclidean")
    return np.exp(kernel_log_norm(a.shape[1], bandwidth) - sq_dist / (2 * bandwidth**2))


def build_cumulative_kernel(series, bandwidth):
    if not bandwidth > 0:
        raise InvalidParameterError(f"KDE bandwidth must be positive, got {bandwidth}")
    values = series.values
    kernel = gaussian_kernel_matrix(values, values, bandwidth)
    cumsum = np.cumsum(kernel, axis=1)
    cumsum.setflags(write=False)
    logger.debug("Built %dx%d cumulative kernel (h=%g)", series.n, series.n, bandwidth)
    return CumulativeKernel(cumsum, series.n, float(kernel_log_norm(series.dims, bandwidth)), float(bandwidth))


def _check_interval(interval, n):
    interval.check_within(n)
    if interval.length >= n:
        raise InvalidParameterError(f"Interval {interval} covers the whole series of length {n}; the complement is empty")


def kde_densities(ck, interval, t):
    """Raw density estimates p_I(x_t), p_Omega(x_t) for an array (or scalar) of query indices t."""
    _check_interval(interval, ck.n)
    t = np.asarray(t)
    inside = ck.cumsum[t, interval.end - 1]
    if interval.start > 0:
        inside = inside - ck.cumsum[t, interval.start - 1]
    outside = ck.cumsum[t, ck.n - 1] - inside
    return inside / interval.length, outside / (ck.n - interval.length)


def kde_log_densities(ck, interval, t):
    """log p_I(x_t) and log p_Omega(x_t) from the cumulative kernel, densities floored at 1e-300."""
    if not 0 <= t < ck.n:
        raise InvalidParameterError(f"Query index {t} outside series of length {ck.n}")
    p_inside, p_outside = kde_densities(ck, interval, t)
    return float(np.log(max(p_inside, DENSITY_FLOOR))), float(np.log(max(p_outside, DENSITY_FLOOR)))


def build_gaussian_cumulants(series):
    values = series.values
    n, dims = values.shape
    sum1 = np.zeros((n + 1, dims))
    np.cumsum(values, axis=0, out=sum1[1:])
    sum2 = np.zeros((n + 1, dims, dims))
    np.cumsum(np.einsum("ti,tj->tij", values, values), axis=0, out=sum2[1:])
    sum1.setflags(write=False)
    sum2.setflags(write=False)
    return GaussianCumulants(sum1, sum2)


def regularize(raw_cov, regularization):
    """
    Symmetrize and add (regularization * mean raw variance + 1e-8) to the diagonal.
    Works on a single matrix or a stack of matrices.
    """
    cov = 0.5 * (raw_cov + np.swapaxes(raw_cov, -1, -2))
    dims = cov.shape[-1]
    diag = np.diagonal(cov, axis1=-2, axis2=-1)
    lam = regularization * np.clip(diag.mean(axis=-1), 0.0, None) + REGULARIZATION_FLOOR
    return cov + lam[..., None, None] * np.eye(dims)


def interval_moments(gc, starts, ends, regularization):
    """
    Batched means and regularized covariances of I = [start, end) and its complement
    for aligned arrays of starts and ends.
    """
    starts = np.asarray(starts)
    ends = np.asarray(ends)
    n = gc.n
    count_i = (ends - starts).astype(float)
    count_o = n - count_i

    s1_i = gc.sum1[ends] - gc.sum1[starts]
    s2_i = gc.sum2[ends] - gc.sum2[starts]
    s1_o = gc.sum1[n] - s1_i
    s2_o = gc.sum2[n] - s2_i

    mean_i = s1_i / count_i[:, None]
    mean_o = s1_o / count_o[:, None]
    cov_i = s2_i / count_i[:, None, None] - np.einsum("mi,mj->mij", mean_i, mean_i)
    cov_o = s2_o / count_o[:, None, None] - np.einsum("mi,mj->mij", mean_o, mean_o)
    return mean_i, regularize(cov_i, regularization), mean_o, regularize(cov_o, regularization)


def interval_stats(gc, interval, regularization=1e-3):
    """Gaussian stats of the interval and of its complement, from the cumulants in O(D^2)."""
    if regularization < 0:
        raise InvalidParameterError(f"Regularization must be non-negative, got {regularization}")
    _check_interval(interval, gc.n)
    mean_i, cov_i, mean_o, cov_o = interval_moments(gc, [interval.start], [interval.end], regularization)
    return (
        GaussianStats(mean_i[0], cov_i[0], interval.length),
        GaussianStats(mean_o[0], cov_o[0], gc.n - interval.length),
    )


def global_stats(gc, regularization=1e-3):
    n = gc.n
    mean = gc.sum1[n] / n
    raw = gc.sum2[n] / n - np.outer(mean, mean)
    return GaussianStats(mean, regularize(raw, regularization), n)
