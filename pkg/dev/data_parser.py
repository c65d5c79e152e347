import io
import json
import logging
import math
from pathlib import Path

import pandas as pd

from dev.core import Detection, Interval, MDIError, TimeSeries
from dev.synthesis import AnomalyType, DatasetInstance
from utils import atomic_write

logger = logging.getLogger(__name__)

TIMESTAMP_HEADERS = ("time", "timestamp")


class DataFormatError(MDIError, ValueError):
    pass


def _parse_float(cell):
    try:
        value = float(cell)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


def read_csv(path):
    """
    Read a header + numeric columns CSV into a TimeSeries.

    A leading timestamp column is recognised by a "time"/"timestamp" header or by a first
    data cell that is neither blank nor a number. Rows are numbered from 1 after the header.
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError(f"{path}: file is empty") from None
    except pd.errors.ParserError as e:
        raise DataFormatError(f"{path}: ragged or malformed rows ({e})") from None
    if df.empty:
        raise DataFormatError(f"{path}: no data rows after the header")

    header = [str(c).strip() for c in df.columns]
    first_cell = str(df.iloc[0, 0]).strip()
    # a blank first cell is a missing value, not a timestamp
    has_time = header[0].lower() in TIMESTAMP_HEADERS or (first_cell != "" and _parse_float(first_cell) is None)
    value_columns = header[1:] if has_time else header
    if not value_columns:
        raise DataFormatError(f"{path}: no numeric columns")

    values = []
    for row_number, row in enumerate(df.itertuples(index=False, name=None), start=1):
        cells = row[1:] if has_time else row
        parsed = [_parse_float(c) for c in cells]
        if any(v is None for v in parsed):
            column = value_columns[next(i for i, v in enumerate(parsed) if v is None)]
            raise DataFormatError(f"{path}: row {row_number} (line {row_number + 1}) has a missing or non-numeric value in column {column!r}")
        values.append(parsed)

    timestamps = None
    if has_time:
        timestamps = [str(c).strip() for c in df.iloc[:, 0]]
        if "" in timestamps:
            row_number = timestamps.index("") + 1
            raise DataFormatError(f"{path}: row {row_number} (line {row_number + 1}) has no timestamp")
        if all(s.lstrip("-").isdigit() for s in timestamps):
            timestamps = [int(s) for s in timestamps]
    try:
        series = TimeSeries(values, timestamps, value_columns)
    except MDIError as e:
        raise DataFormatError(f"{path}: {e}") from e
    logger.info("Read %s: %d rows x %d columns", path, series.n, series.dims)
    return series


def write_csv(series, path):
    df = pd.DataFrame(series.values, columns=list(series.columns))
    if series.timestamps is not None:
        df.insert(0, "time", list(series.timestamps))
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
    atomic_write(path, buffer.getvalue())


def _require(mapping, key, kind, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise DataFormatError(f"{where}: missing key {key!r}")
    value = mapping[key]
    # bool is an int subclass; keep the two apart
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise DataFormatError(f"{where}: {key!r} must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise DataFormatError(f"{where}: {key!r} has type {type(value).__name__}")
    return value


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: invalid JSON ({e})") from None


def dataset_to_dict(instances, seed):
    return {
        "seed": seed,
        "instances": [
            {
                "id": inst.id,
                "type": inst.anomaly_type.value,
                "multivariate": inst.multivariate,
                "values": inst.series.values.tolist(),
                "anomalies": [{"start": gt.start, "end": gt.end} for gt in inst.ground_truth],
                "affected_dimension": inst.affected_dimension,
            }
            for inst in instances
        ],
    }


def write_dataset(instances, seed, path):
    # json writes floats with repr, which round-trips every finite double exactly
    atomic_write(path, json.dumps(dataset_to_dict(instances, seed)) + "\n")
    logger.info("Wrote %d instances to %s", len(instances), path)


def dataset_from_dict(data, where="dataset"):
    seed = _require(data, "seed", int, where)
    raw_instances = _require(data, "instances", list, where)
    instances = []
    for i, raw in enumerate(raw_instances):
        at = f"{where}: instance {i}"
        inst_id = _require(raw, "id", str, at)
        kind = _require(raw, "type", str, at)
        if kind not in {t.value for t in AnomalyType}:
            raise DataFormatError(f"{at}: unknown anomaly type {kind!r}")
        multivariate = _require(raw, "multivariate", bool, at)
        rows = _require(raw, "values", list, at)
        anomalies = _require(raw, "anomalies", list, at)
        dim = _require(raw, "affected_dimension", int, at)
        if not rows or not all(isinstance(r, list) and len(r) == len(rows[0]) for r in rows):
            raise DataFormatError(f"{at}: 'values' must be a non-empty rectangular list of rows")
        try:
            ground_truth = [Interval(_require(a, "start", int, at), _require(a, "end", int, at)) for a in anomalies]
            series = TimeSeries(rows)
            instances.append(DatasetInstance(inst_id, AnomalyType(kind), multivariate, series, ground_truth, dim))
        except (MDIError, TypeError, ValueError) as e:
            if isinstance(e, DataFormatError):
                raise
            raise DataFormatError(f"{at} ({inst_id}): {e}") from e
    return seed, instances


def read_dataset(path):
    seed, instances = dataset_from_dict(_load_json(path), str(path))
    logger.info("Read %d instances from %s", len(instances), path)
    return seed, instances


def write_detections(detections, path=None):
    """Detections JSON; returns the text and writes it atomically when a path is given."""
    records = [{"instance": d.instance, "start": d.interval.start, "end": d.interval.end, "score": d.score} for d in detections]
    text = json.dumps(records, indent=2) + "\n"
    if path is not None:
        atomic_write(path, text)
    return text


def read_detections(path):
    data = _load_json(path)
    if not isinstance(data, list):
        raise DataFormatError(f"{path}: detections must be a JSON list")
    detections = []
    for i, raw in enumerate(data):
        at = f"{path}: detection {i}"
        instance = _require(raw, "instance", str, at)
        score = _require(raw, "score", (int, float), at)
        try:
            detections.append(Detection(Interval(_require(raw, "start", int, at), _require(raw, "end", int, at)), score, instance))
        except MDIError as e:
            if isinstance(e, DataFormatError):
                raise
            raise DataFormatError(f"{at}: {e}") from e
    return detections


def write_report(reports, beta, path):
    data = {"iou": beta, "groups": {name: report.to_dict() for name, report in reports.items()}}
    atomic_write(path, json.dumps(data, indent=2) + "\n")


def _blocks(named_rows):
    parts = []
    for name, rows in named_rows:
        lines = [f"# {name}"] + [f"{a!r} {b!r}" for a, b in rows]
        parts.append("\n".join(lines) + "\n")
    return "\n".join(parts)


def write_pr_curve(reports, path):
    """Two-column 'recall precision' text, one '# group' block per group."""
    atomic_write(path, _blocks((name, report.pr_curve) for name, report in reports.items()))


def write_point_scores(traces, path):
    """Two-column 'index score' text, one '# instance' block per trace."""
    atomic_write(path, _blocks((name, enumerate(scores.scores.tolist())) for name, scores in traces.items()))


def instance_name(path):
    return Path(path).stem
