import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from dev.core import Detection, Interval, InvalidParameterError, NumericalError, embed, map_interval_to_original
from dev.density import build_cumulative_kernel, build_gaussian_cumulants, global_stats, interval_moments, interval_stats
from dev.divergence import CovarianceMode, empirical_kl_batch, gaussian_kl, gaussian_kl_batch

logger = logging.getLogger(__name__)


class Method(Enum):
    MDI_KDE = "mdi-kde"
    MDI_GAUSSIAN = "mdi-gaussian"


@dataclass(frozen=True)
class ScanConfig:
    min_length: int = 10
    max_length: int = 50
    top_m: int = 5
    method: Method = Method.MDI_GAUSSIAN
    cov_mode: CovarianceMode = CovarianceMode.FULL
    embedding_k: int = 3
    kde_bandwidth: float = 1.0
    regularization: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "cov_mode", CovarianceMode(self.cov_mode))
        if self.min_length < 1:
            raise InvalidParameterError(f"min_length must be >= 1, got {self.min_length}")
        if self.max_length < self.min_length:
            raise InvalidParameterError(f"max_length ({self.max_length}) must be >= min_length ({self.min_length})")
        if self.top_m < 1:
            raise InvalidParameterError(f"top_m must be >= 1, got {self.top_m}")
        if self.embedding_k < 1:
            raise InvalidParameterError(f"embedding_k must be >= 1, got {self.embedding_k}")
        if not self.kde_bandwidth > 0:
            raise InvalidParameterError(f"kde_bandwidth must be > 0, got {self.kde_bandwidth}")
        if self.regularization < 0:
            raise InvalidParameterError(f"regularization must be >= 0, got {self.regularization}")

    def length_range(self, n_embedded):
        """Interval lengths to scan; max_length is clipped so the complement is never empty."""
        if n_embedded < self.min_length + 1:
            raise InvalidParameterError(
                f"Series too short: need at least {self.min_length + self.embedding_k} time steps "
                f"for min_length={self.min_length} and embedding k={self.embedding_k}"
            )
        return range(self.min_length, min(self.max_length, n_embedded - 1) + 1)


def _gaussian_scores(embedded, config):
    gc = build_gaussian_cumulants(embedded)
    n = gc.n
    shared_cov = shared_chol = None
    if config.cov_mode is CovarianceMode.SHARED:
        shared_cov = global_stats(gc, config.regularization).cov
        try:
            shared_chol = cholesky(shared_cov, lower=True)
        except LinAlgError as e:
            raise NumericalError(f"Global covariance is not positive definite: {e}") from e

    for length in config.length_range(n):
        starts = np.arange(n - length + 1)
        ends = starts + length
        moments = interval_moments(gc, starts, ends, config.regularization)
        try:
            scores = gaussian_kl_batch(*moments, mode=config.cov_mode, shared_chol=shared_chol)
        except LinAlgError as batch_error:
            # locate the first offending interval; gaussian_kl raises NumericalError naming it
            for start, end in zip(starts, ends, strict=True):
                interval = Interval(start, end)
                try:
                    gaussian_kl(*interval_stats(gc, interval, config.regularization), mode=config.cov_mode, shared_cov=shared_cov)
                except NumericalError as e:
                    raise NumericalError(f"Interval {interval} (embedded axis): {e}") from e
            raise NumericalError(f"Covariance factorization failed for intervals of length {length}") from batch_error
        yield length, starts, scores


def _kde_scores(embedded, config):
    ck = build_cumulative_kernel(embedded, config.kde_bandwidth)
    for length in config.length_range(ck.n):
        starts = np.arange(ck.n - length + 1)
        yield length, starts, empirical_kl_batch(ck, starts, length)


def scan_scores(series, config):
    """
    Score every candidate interval of the embedded series.

    Returns aligned arrays (starts, lengths, scores) on the embedded axis, ordered by
    length and then start, plus the embedded length.
    """
    embedded = embed(series, config.embedding_k)
    scorer = _kde_scores if config.method is Method.MDI_KDE else _gaussian_scores
    all_starts, all_lengths, all_scores = [], [], []
    for length, starts, scores in scorer(embedded, config):
        all_starts.append(starts)
        all_lengths.append(np.full(starts.shape, length))
        all_scores.append(scores)
    starts = np.concatenate(all_starts)
    logger.debug("Scored %d candidate intervals with %s", starts.shape[0], config.method.value)
    return starts, np.concatenate(all_lengths), np.concatenate(all_scores), embedded.n


def scan(series, config):
    """All candidate intervals scored by the configured divergence, reported on original indices."""
    starts, lengths, scores, _ = scan_scores(series, config)
    k = config.embedding_k
    return [
        Detection(map_interval_to_original(Interval(s, s + length), k, series.n), score)
        for s, length, score in zip(starts.tolist(), lengths.tolist(), scores.tolist(), strict=True)
    ]


def argmax_interval(series, config):
    return min(scan(series, config), key=Detection.sort_key)


def nms(detections, top_m):
    """
    Greedy non-maximum suppression with strict disjointness: best score first
    (ties: earlier start, then shorter), skip anything sharing an index with a kept interval.
    """
    kept = []
    for det in sorted(detections, key=Detection.sort_key):
        if len(kept) >= top_m:
            break
        if any(det.interval.overlaps(other.interval) for other in kept):
            continue
        kept.append(det)
    return kept


def detect_intervals(series, config):
    """Top-m non-overlapping maximally divergent intervals."""
    return nms(scan(series, config), config.top_m)
