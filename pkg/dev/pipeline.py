import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from functools import partial

from dev.baselines import hotelling_t2, pointwise_kde, scores_to_intervals
from dev.core import Detection, InvalidParameterError, standardize
from dev.divergence import CovarianceMode
from dev.evaluation import intervals_to_point_scores
from dev.scanner import Method, ScanConfig, detect_intervals

logger = logging.getLogger(__name__)

METHODS = ("mdi-gaussian", "mdi-kde", "hotelling", "pointwise-kde")
BASELINES = ("hotelling", "pointwise-kde")


@dataclass(frozen=True)
class RunConfig:
    method: str = "mdi-gaussian"
    cov: str = "full"
    embed: int = 3
    min_len: int = 10
    max_len: int = 50
    top: int = 5
    bandwidth: float = 1.0
    reg: float = 1e-3
    iou: float = 0.5
    seed: int = 42
    standardize: bool = True
    thresholds: int = 25
    workers: int = 1

    def __post_init__(self):
        checks = [
            (self.method in METHODS, f"method must be one of {', '.join(METHODS)}, got {self.method!r}"),
            (self.cov in {m.value for m in CovarianceMode}, f"cov must be full, shared or identity, got {self.cov!r}"),
            (self.embed >= 1, f"embed must be >= 1, got {self.embed}"),
            (self.min_len >= 1, f"min_len must be >= 1, got {self.min_len}"),
            (self.max_len >= self.min_len, f"max_len ({self.max_len}) must be >= min_len ({self.min_len})"),
            (self.top >= 1, f"top must be >= 1, got {self.top}"),
            (self.bandwidth > 0, f"bandwidth must be > 0, got {self.bandwidth}"),
            (self.reg >= 0, f"reg must be >= 0, got {self.reg}"),
            (0 < self.iou <= 1, f"iou must be in (0, 1], got {self.iou}"),
            (self.thresholds >= 1, f"thresholds must be >= 1, got {self.thresholds}"),
            (self.workers >= 1, f"workers must be >= 1, got {self.workers}"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidParameterError(message)

    @classmethod
    def from_options(cls, options):
        """Build from a settings dict; unrelated keys are ignored and None means default."""
        names = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in options.items() if k in names and v is not None}
        if kwargs.get("workers") == 0:
            kwargs["workers"] = max(os.cpu_count() - 2, 1)
        return cls(**kwargs)

    @property
    def is_baseline(self):
        return self.method in BASELINES

    def scan_config(self):
        return ScanConfig(
            min_length=self.min_len,
            max_length=self.max_len,
            top_m=self.top,
            method=Method.MDI_KDE if self.method == "mdi-kde" else Method.MDI_GAUSSIAN,
            cov_mode=CovarianceMode(self.cov),
            embedding_k=self.embed,
            kde_bandwidth=self.bandwidth,
            regularization=self.reg,
        )


def detect_series(series, config, instance=None):
    """Run the configured detector on one series; returns (detections, point scores)."""
    if config.standardize:
        series = standardize(series)
    if config.is_baseline:
        if config.method == "hotelling":
            scores = hotelling_t2(series, config.embed, config.reg)
        else:
            scores = pointwise_kde(series, config.bandwidth, config.embed)
        found = scores_to_intervals(scores, config.thresholds, config.top)
    else:
        found = detect_intervals(series, config.scan_config())
        scores = None
    detections = [Detection(d.interval, d.score, instance) for d in found]
    if scores is None:
        scores = intervals_to_point_scores(detections, series.n)
    return detections, scores


def _detect_instance(instance, config):
    result = detect_series(instance.series, config, instance.id)
    logger.info("%s: %d detections", instance.id, len(result[0]))
    return result


def detect_dataset(instances, config):
    """detect_series over dataset instances, in instance order whatever the worker count."""
    run = partial(_detect_instance, config=config)
    if config.workers == 1 or len(instances) <= 1:
        return [run(inst) for inst in instances]
    with ProcessPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(run, instances))
