import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class MDIError(Exception):
    pass


class InvalidParameterError(MDIError, ValueError):
    pass


class NumericalError(MDIError, ArithmeticError):
    pass


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open index range [start, end) on a series axis."""

    start: int
    end: int

    def __post_init__(self):
        if int(self.start) != self.start or int(self.end) != self.end:
            raise InvalidParameterError(f"Interval bounds must be integers, got [{self.start}, {self.end})")
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "end", int(self.end))
        if self.start < 0 or self.end <= self.start:
            raise InvalidParameterError(f"Invalid interval [{self.start}, {self.end}): need 0 <= start < end")

    @property
    def length(self):
        return self.end - self.start

    def overlaps(self, other):
        return self.start < other.end and other.start < self.end

    def contains(self, other):
        return self.start <= other.start and other.end <= self.end

    def check_within(self, n):
        if self.end > n:
            raise InvalidParameterError(f"Interval [{self.start}, {self.end}) exceeds series length {n}")

    def __str__(self):
        return f"[{self.start}, {self.end})"


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    n x D matrix of finite reals with optional strictly increasing timestamps.

    Values are copied and frozen on construction so instances can be shared
    read-only between scan workers.
    """

    values: np.ndarray
    timestamps: tuple | None = None
    columns: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidParameterError(f"Time series needs shape (n >= 1, D >= 1), got {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = int(np.argwhere(~np.isfinite(values))[0][0])
            raise InvalidParameterError(f"Time series contains a non-finite value at row {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        if self.timestamps is not None:
            stamps = tuple(self.timestamps)
            if len(stamps) != values.shape[0]:
                raise InvalidParameterError(f"Got {len(stamps)} timestamps for {values.shape[0]} rows")
            _check_increasing(stamps)
            object.__setattr__(self, "timestamps", stamps)

        columns = tuple(self.columns) if self.columns else tuple(f"x{i}" for i in range(values.shape[1]))
        if len(columns) != values.shape[1]:
            raise InvalidParameterError(f"Got {len(columns)} column names for {values.shape[1]} columns")
        object.__setattr__(self, "columns", columns)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def dims(self):
        return self.values.shape[1]


def _check_increasing(stamps):
    if len(stamps) < 2:
        return
    if all(isinstance(s, int | np.integer) for s in stamps):
        keys = pd.Series(stamps, dtype="int64")
    else:
        try:
            keys = pd.Series(pd.to_datetime(list(stamps)))
        except (ValueError, TypeError):
            # opaque labels: only uniqueness can be checked
            if len(set(stamps)) != len(stamps):
                raise InvalidParameterError("Timestamps must be unique") from None
            return
    if not (keys.is_monotonic_increasing and keys.is_unique):
        raise InvalidParameterError("Timestamps must be strictly increasing")


@dataclass(frozen=True)
class Detection:
    interval: Interval
    score: float
    instance: str | None = None

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise InvalidParameterError(f"Detection score must be finite, got {self.score} for {self.interval}")
        object.__setattr__(self, "score", float(self.score))

    def sort_key(self):
        return (-self.score, self.interval.start, self.interval.length)


def standardize(series):
    """Zero mean, unit population std per column; constant columns become zeros."""
    values = series.values
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    constant = np.ptp(values, axis=0) == 0
    if constant.any():
        logger.info("Standardizing %d constant column(s) to zero", int(constant.sum()))
    out = np.zeros_like(values)
    keep = ~constant
    out[:, keep] = (values[:, keep] - mean[keep]) / std[keep]
    return TimeSeries(out, series.timestamps, series.columns)


def embed(series, k):
    """
    Time-delay embedding. Row i of the result is (x_{i+k-1}, x_{i+k-2}, ..., x_i),
    current step first. The first k-1 steps are dropped, never padded.
    """
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"Embedding dimension must be a positive integer, got {k}")
    n = series.n
    if k > n:
        raise InvalidParameterError(f"Embedding dimension {k} exceeds series length {n}")
    if k == 1:
        return TimeSeries(series.values, series.timestamps, series.columns)
    values = np.hstack([series.values[k - 1 - j : n - j] for j in range(k)])
    columns = tuple(f"{c}[t-{j}]" if j else c for j in range(k) for c in series.columns)
    stamps = series.timestamps[k - 1 :] if series.timestamps is not None else None
    return TimeSeries(values, stamps, columns)


def map_interval_to_original(interval, k, n=None):
    """Embedded index i covers original indices i..i+k-1; clipped to n when given."""
    end = interval.end + k - 1
    if n is not None:
        end = min(end, n)
    return Interval(interval.start, end)
