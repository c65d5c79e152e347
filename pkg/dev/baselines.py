import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from dev.core import Detection, Interval, InvalidParameterError, NumericalError, embed
from dev.density import DENSITY_FLOOR, build_gaussian_cumulants, global_stats, kernel_log_norm
from dev.scanner import nms

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointScores:
    """One novelty score per original time step; steps dropped by the embedding score 0."""

    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float).ravel()
        if not np.all(np.isfinite(scores)):
            raise InvalidParameterError("Point scores must be finite")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __len__(self):
        return self.scores.shape[0]


def _to_original_axis(embedded_scores, n, k):
    scores = np.zeros(n)
    scores[k - 1 :] = embedded_scores
    return PointScores(scores)


def hotelling_t2(series, k=3, regularization=1e-3):
    """Squared Mahalanobis distance of every embedded point to the global mean and covariance."""
    embedded = embed(series, k)
    if embedded.n <= embedded.dims:
        logger.warning("Hotelling T2 on %d points in %d dimensions relies on regularization", embedded.n, embedded.dims)
    stats = global_stats(build_gaussian_cumulants(embedded), regularization)
    try:
        chol = cholesky(stats.cov, lower=True)
    except LinAlgError as e:
        raise NumericalError(f"Global covariance is not positive definite: {e}") from e
    whitened = solve_triangular(chol, (embedded.values - stats.mean).T, lower=True)
    return _to_original_axis(np.einsum("it,it->t", whitened, whitened), series.n, k)


def pointwise_kde(series, bandwidth=1.0, k=3):
    """Negative log Gaussian KDE density of every embedded point, fitted on all points including itself."""
    if not bandwidth > 0:
        raise InvalidParameterError(f"KDE bandwidth must be positive, got {bandwidth}")
    embedded = embed(series, k)
    values = embedded.values
    log_kernel = kernel_log_norm(embedded.dims, bandwidth) - cdist(values, values, "sqeuclidean") / (2 * bandwidth**2)
    log_density = logsumexp(log_kernel, axis=1) - np.log(embedded.n)
    log_density = np.maximum(log_density, np.log(DENSITY_FLOOR))
    return _to_original_axis(-log_density, series.n, k)


def group_runs(scores, threshold):
    """Maximal runs [start, end) of consecutive indices with score >= threshold."""
    above = np.concatenate([[False], np.asarray(scores) >= threshold, [False]])
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2], strict=True)]


def default_thresholds(scores, num_thresholds):
    """Quantiles of the positive scores from the maximum down to the median."""
    positive = scores[scores > 0]
    if positive.size == 0:
        return np.array([])
    return np.quantile(positive, np.linspace(1.0, 0.5, num_thresholds))


def scores_to_intervals(scores, num_thresholds=25, top_m=5, thresholds=None):
    """
    Group point scores into intervals over several thresholds. Every run gets the minimum
    score inside it; the pooled runs go through NMS.
    """
    if num_thresholds < 1:
        raise InvalidParameterError(f"num_thresholds must be >= 1, got {num_thresholds}")
    values = scores.scores if isinstance(scores, PointScores) else np.asarray(scores, dtype=float)
    if thresholds is None:
        thresholds = default_thresholds(values, num_thresholds)
    candidates = {}
    for threshold in thresholds:
        for start, end in group_runs(values, threshold):
            interval = Interval(start, end)
            if interval not in candidates:
                candidates[interval] = Detection(interval, float(values[start:end].min()))
    logger.debug("Grouped %d distinct runs over %d thresholds", len(candidates), len(thresholds))
    return nms(list(candidates.values()), top_m)
