import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from dev.core import Interval, InvalidParameterError, NumericalError, TimeSeries

logger = logging.getLogger(__name__)

JITTER = 1e-8
MAX_JITTER = 1e-4
AC_AMPLITUDE = 1.0
MULTIVARIATE_DIMS = 5
# benchmark GP lengthscale, in time steps
DATASET_LENGTHSCALE = 5.0


class AnomalyType(Enum):
    MS = "MS"
    MSH = "MSH"
    AC = "AC"
    FC = "FC"


SHIFT_RANGES = {
    AnomalyType.MS: (3.0, 4.0),
    AnomalyType.MSH: (0.5, 1.0),
}

# (group name, anomaly type, multivariate)
GROUPS = [
    ("MS", AnomalyType.MS, False),
    ("MSH", AnomalyType.MSH, False),
    ("AC", AnomalyType.AC, False),
    ("FC", AnomalyType.FC, False),
    ("MS5", AnomalyType.MS, True),
    ("FC5", AnomalyType.FC, True),
    ("AC5", AnomalyType.AC, True),
]
GROUP_NAMES = [name for name, _, _ in GROUPS]


def group_name(anomaly_type, multivariate):
    anomaly_type = AnomalyType(anomaly_type)
    if multivariate and anomaly_type is AnomalyType.MSH:
        raise InvalidParameterError("Multivariate instances are only defined for MS, AC and FC")
    return anomaly_type.value + ("5" if multivariate else "")


@dataclass(frozen=True, eq=False)
class DatasetInstance:
    id: str
    anomaly_type: AnomalyType
    multivariate: bool
    series: TimeSeries
    ground_truth: tuple
    affected_dimension: int

    def __post_init__(self):
        object.__setattr__(self, "anomaly_type", AnomalyType(self.anomaly_type))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        group_name(self.anomaly_type, self.multivariate)
        for interval in self.ground_truth:
            interval.check_within(self.series.n)
        if not 0 <= self.affected_dimension < self.series.dims:
            raise InvalidParameterError(f"Instance {self.id}: affected dimension {self.affected_dimension} outside {self.series.dims} columns")

    @property
    def group(self):
        return group_name(self.anomaly_type, self.multivariate)


def stable_cholesky(cov):
    """Lower Cholesky factor with diagonal jitter, raised tenfold up to 1e-4 on failure."""
    jitter = JITTER
    eye = np.eye(cov.shape[0])
    while True:
        try:
            return cholesky(cov + jitter * eye, lower=True)
        except LinAlgError as e:
            if jitter * 10 > MAX_JITTER * (1 + 1e-9):
                raise NumericalError(f"GP covariance factorization failed with jitter up to {jitter:g}") from e
            jitter *= 10
            logger.warning("Cholesky failed, retrying with jitter %g", jitter)


def squared_exponential(t, lengthscale=1.0):
    t = np.asarray(t, dtype=float)
    return np.exp(-((t[:, None] - t[None, :]) ** 2) / (2 * lengthscale**2))


def paciorek_kernel(t, ell):
    """Non-stationary squared-exponential kernel with a lengthscale ell(t) per time step."""
    t = np.asarray(t, dtype=float)
    ell = np.asarray(ell, dtype=float)
    ell_sq_sum = ell[:, None] ** 2 + ell[None, :] ** 2
    prefactor = np.sqrt(2 * ell[:, None] * ell[None, :] / ell_sq_sum)
    return prefactor * np.exp(-((t[:, None] - t[None, :]) ** 2) / ell_sq_sum)


def sample_gp(n, dims=1, lengthscale=1.0, rng_seed=None):
    """Independent zero-mean GP draws (squared-exponential kernel, unit variance) in each column."""
    if n < 1:
        raise InvalidParameterError(f"Series length must be >= 1, got {n}")
    if not lengthscale > 0:
        raise InvalidParameterError(f"GP lengthscale must be positive, got {lengthscale}")
    rng = np.random.default_rng(rng_seed)
    chol = stable_cholesky(squared_exponential(np.arange(n), lengthscale))
    return TimeSeries(chol @ rng.standard_normal((n, dims)))


def inject_anomaly(series, anomaly_type, interval, dim, rng_seed=None, ell_anomaly=0.2, ac_sigma_fraction=0.5, shift=None, lengthscale=1.0):
    """
    Return a copy of the series with one anomaly injected in column dim.

    MS/MSH subtract a uniform shift inside the interval (or the given shift). AC multiplies
    the interval by 1 + g(t) with g a unit-peak Gaussian window centred in it. FC redraws the
    whole column from a GP with the base lengthscale outside the interval and
    lengthscale * ell_anomaly inside it.
    """
    if not isinstance(anomaly_type, AnomalyType):
        try:
            anomaly_type = AnomalyType(anomaly_type)
        except ValueError:
            raise InvalidParameterError(f"Unknown anomaly type {anomaly_type!r}") from None
    interval.check_within(series.n)
    if not 0 <= dim < series.dims:
        raise InvalidParameterError(f"Dimension {dim} outside {series.dims} columns")

    rng = np.random.default_rng(rng_seed)
    values = series.values.copy()
    inside = slice(interval.start, interval.end)
    if anomaly_type in SHIFT_RANGES:
        mu = rng.uniform(*SHIFT_RANGES[anomaly_type]) if shift is None else shift
        values[inside, dim] -= mu
    elif anomaly_type is AnomalyType.AC:
        t = np.arange(interval.start, interval.end)
        center = (interval.start + interval.end - 1) / 2
        sigma = ac_sigma_fraction * interval.length
        values[inside, dim] *= 1 + AC_AMPLITUDE * np.exp(-((t - center) ** 2) / (2 * sigma**2))
    else:
        if not lengthscale > 0 or not ell_anomaly > 0:
            raise InvalidParameterError(f"FC lengthscales must be positive, got {lengthscale} and {ell_anomaly}")
        ell = np.full(series.n, float(lengthscale))
        ell[inside] = lengthscale * ell_anomaly
        chol = stable_cholesky(paciorek_kernel(np.arange(series.n), ell))
        values[:, dim] = chol @ rng.standard_normal(series.n)
    return TimeSeries(values, series.timestamps, series.columns)


def anomaly_length_bounds(n):
    low, high = math.ceil(0.05 * n), math.floor(0.2 * n)
    if low < 1 or high < low:
        raise InvalidParameterError(f"Series length {n} too short for anomalies of 5%-20% of its length")
    return low, high


def generate_instance(index, group, n=250, lengthscale=DATASET_LENGTHSCALE, ell_anomaly=0.2, ac_sigma_fraction=0.5, rng_seed=0, number=0):
    name, anomaly_type, multivariate = next(g for g in GROUPS if g[0] == group)
    # sub-seeds depend only on (seed, index), so generation order and parallelism don't matter
    base_seed, inject_seed, layout_seed = np.random.SeedSequence([rng_seed, index]).spawn(3)
    layout = np.random.default_rng(layout_seed)
    dims = MULTIVARIATE_DIMS if multivariate else 1

    low, high = anomaly_length_bounds(n)
    length = int(layout.integers(low, high + 1))
    start = int(layout.integers(0, n - length + 1))
    dim = int(layout.integers(dims)) if multivariate else 0
    interval = Interval(start, start + length)

    base = sample_gp(n, dims, lengthscale, base_seed)
    series = inject_anomaly(base, anomaly_type, interval, dim, inject_seed, ell_anomaly, ac_sigma_fraction, lengthscale=lengthscale)
    return DatasetInstance(f"{name}-{number:02d}", anomaly_type, multivariate, series, (interval,), dim)


def generate_dataset(rng_seed, n=250, instances_per_group=20, lengthscale=DATASET_LENGTHSCALE, ell_anomaly=0.2, ac_sigma_fraction=0.5):
    """The synthetic benchmark: every group in GROUPS with instances_per_group instances."""
    instances = []
    for g, (name, _, _) in enumerate(GROUPS):
        for j in range(instances_per_group):
            instances.append(
                generate_instance(
                    g * instances_per_group + j,
                    name,
                    n=n,
                    lengthscale=lengthscale,
                    ell_anomaly=ell_anomaly,
                    ac_sigma_fraction=ac_sigma_fraction,
                    rng_seed=rng_seed,
                    number=j,
                )
            )
        logger.info("Generated group %s (%d instances)", name, instances_per_group)
    return instances
