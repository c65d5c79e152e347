import logging
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from dev.core import InvalidParameterError, NumericalError
from dev.density import DENSITY_FLOOR, kde_densities

logger = logging.getLogger(__name__)


class CovarianceMode(Enum):
    FULL = "full"
    SHARED = "shared"
    IDENTITY = "identity"


def empirical_kl(ck, interval):
    """
    Mean log-likelihood ratio of p_I over p_Omega on the points of the interval.
    This is an empirical estimate and can be negative.
    """
    t = np.arange(interval.start, interval.end)
    p_inside, p_outside = kde_densities(ck, interval, t)
    return float(np.mean(np.log(np.maximum(p_inside, DENSITY_FLOOR)) - np.log(np.maximum(p_outside, DENSITY_FLOOR))))


def empirical_kl_batch(ck, starts, length):
    """empirical_kl for every interval [s, s + length) with s in starts, in one pass over the cumulative kernel."""
    starts = np.asarray(starts)
    points = starts[:, None] + np.arange(length)
    # flat offsets of the kernel rows of every interval point
    rows = points * ck.n
    flat = ck.cumsum.ravel()
    inside = flat.take(rows + (starts + length - 1)[:, None])
    before = flat.take(rows + (starts - 1)[:, None])
    before[starts == 0] = 0.0
    inside -= before
    outside = ck.cumsum[:, ck.n - 1].take(points)
    outside -= inside
    inside /= length
    outside /= ck.n - length
    log_ratio = np.log(np.maximum(inside, DENSITY_FLOOR, out=inside), out=inside)
    log_ratio -= np.log(np.maximum(outside, DENSITY_FLOOR, out=outside), out=outside)
    return log_ratio.mean(axis=1)


def _cholesky(cov, what):
    try:
        return cho_factor(cov, lower=True)
    except LinAlgError as e:
        raise NumericalError(f"Covariance of {what} is not positive definite: {e}") from e


def _log_det(factor):
    return 2.0 * float(np.sum(np.log(np.diag(factor[0]))))


def gaussian_kl(stats_i, stats_omega, mode=CovarianceMode.FULL, shared_cov=None):
    """
    KL(p_I || p_Omega) between two Gaussians.

    FULL is the closed form. SHARED is the Mahalanobis distance between the means
    under shared_cov, the covariance of the whole series, without the 1/2 factor.
    IDENTITY is the squared Euclidean distance between the means.
    """
    mode = CovarianceMode(mode)
    diff = stats_i.mean - stats_omega.mean
    if mode is CovarianceMode.IDENTITY:
        return float(diff @ diff)
    if mode is CovarianceMode.SHARED:
        if shared_cov is None:
            raise InvalidParameterError("SHARED mode needs shared_cov, the covariance of the whole series")
        factor = _cholesky(np.asarray(shared_cov), "the shared covariance")
        return float(diff @ cho_solve(factor, diff))

    factor_o = _cholesky(stats_omega.cov, "the complement")
    factor_i = _cholesky(stats_i.cov, "the interval")
    trace = float(np.trace(cho_solve(factor_o, stats_i.cov)))
    mahalanobis = float(diff @ cho_solve(factor_o, diff))
    return 0.5 * (trace + mahalanobis - stats_i.dims + _log_det(factor_o) - _log_det(factor_i))


def gaussian_kl_reverse(stats_i, stats_omega):
    """KL(p_Omega || p_I); the reverse direction favours low-variance intervals."""
    return gaussian_kl(stats_omega, stats_i, CovarianceMode.FULL)


def gaussian_kl_batch(mean_i, cov_i, mean_o, cov_o, mode=CovarianceMode.FULL, shared_chol=None):
    """
    Vectorised gaussian_kl over a stack of m interval/complement pairs.

    shared_chol is the lower Cholesky factor of the global covariance (SHARED only).
    Raises numpy's LinAlgError when any covariance in the stack is not positive definite.
    """
    mode = CovarianceMode(mode)
    diff = mean_i - mean_o
    if mode is CovarianceMode.IDENTITY:
        return np.einsum("mi,mi->m", diff, diff)
    if mode is CovarianceMode.SHARED:
        whitened = solve_triangular(shared_chol, diff.T, lower=True)
        return np.einsum("im,im->m", whitened, whitened)

    dims = diff.shape[1]
    chol_o = np.linalg.cholesky(cov_o)
    chol_i = np.linalg.cholesky(cov_i)
    # L_o^-1 [L_i | diff]: squared norms give the trace and Mahalanobis terms
    rhs = np.concatenate([chol_i, diff[:, :, None]], axis=2)
    solved = np.linalg.solve(chol_o, rhs)
    trace = np.einsum("mij,mij->m", solved[:, :, :dims], solved[:, :, :dims])
    mahalanobis = np.einsum("mi,mi->m", solved[:, :, dims], solved[:, :, dims])
    log_det_o = 2.0 * np.log(np.diagonal(chol_o, axis1=1, axis2=2)).sum(axis=1)
    log_det_i = 2.0 * np.log(np.diagonal(chol_i, axis1=1, axis2=2)).sum(axis=1)
    return 0.5 * (trace + mahalanobis - dims + log_det_o - log_det_i)
