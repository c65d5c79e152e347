import json

import numpy as np
import pytest

from dev.baselines import PointScores
from dev.core import Detection, Interval, TimeSeries
from dev.data_parser import (
    DataFormatError,
    dataset_to_dict,
    instance_name,
    read_csv,
    read_dataset,
    read_detections,
    write_csv,
    write_dataset,
    write_detections,
    write_point_scores,
    write_pr_curve,
    write_report,
)
from dev.evaluation import EvaluationReport
from dev.synthesis import generate_dataset
from paths import BUOY_SAMPLE


@pytest.fixture(scope="module")
def small_dataset():
    return generate_dataset(5, n=60, instances_per_group=2)


def write_text(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_read_buoy_sample():
    series = read_csv(BUOY_SAMPLE)
    assert series.n == 120
    assert series.columns == ("Hs", "W", "SLP")
    assert series.timestamps[0] == "2008-09-01 00:00"
    assert series.values[0].tolist() == [1.2, 6.2, 1015.0]


def test_read_csv_without_timestamps(tmp_path):
    path = write_text(tmp_path, "plain.csv", "a,b\n1,2\n1e-3,4\n-5,6.5\n")
    series = read_csv(path)
    assert series.timestamps is None
    assert series.columns == ("a", "b")
    assert series.values[1, 0] == 0.001


def test_read_csv_integer_timestamps(tmp_path):
    series = read_csv(write_text(tmp_path, "ints.csv", "time,x\n0,1.5\n1,2.5\n5,3.5\n"))
    assert series.timestamps == (0, 1, 5)
    np.testing.assert_array_equal(series.values[:, 0], [1.5, 2.5, 3.5])


def test_read_csv_names_the_bad_row(tmp_path):
    rows = ["a,b"] + [f"{i}.0,{i}.5" for i in range(1, 11)]
    rows[7] = "7.0,abc"
    path = write_text(tmp_path, "bad.csv", "\n".join(rows) + "\n")
    with pytest.raises(DataFormatError, match=r"row 7 \(line 8\).*'b'"):
        read_csv(path)


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("", "empty"),
        ("a,b\n", "no data rows"),
        ("a,b\n1,2\n3\n", "missing or non-numeric"),
        ("a,b\n1,2\n3,nan\n", "missing or non-numeric"),
        ("a,b\n1,2\n3,4,5\n", "ragged"),
        ("time,x\n2,1.0\n1,2.0\n", "increasing"),
        ("a,b\n,2\n3,4\n5,6\n", r"row 1 \(line 2\).*'a'"),
        ("time,x\n1,1.0\n,2.0\n3,3.0\n", r"row 2 \(line 3\) has no timestamp"),
    ],
)
def test_read_csv_format_errors(tmp_path, text, message):
    with pytest.raises(DataFormatError, match=message):
        read_csv(write_text(tmp_path, "broken.csv", text))


def test_csv_round_trip_is_exact(tmp_path):
    values = np.random.default_rng(1).normal(size=(25, 3)) * 1e3
    series = TimeSeries(values, list(range(25)), ("u", "v", "w"))
    path = tmp_path / "series.csv"
    write_csv(series, path)
    back = read_csv(path)
    np.testing.assert_array_equal(back.values, series.values)
    assert back.timestamps == series.timestamps
    assert back.columns == series.columns


def test_dataset_round_trip_is_exact(tmp_path, small_dataset):
    path = tmp_path / "dataset.json"
    write_dataset(small_dataset, 5, path)
    seed, instances = read_dataset(path)
    assert seed == 5
    assert [i.id for i in instances] == [i.id for i in small_dataset]
    for a, b in zip(small_dataset, instances, strict=True):
        np.testing.assert_array_equal(a.series.values, b.series.values)
        assert a.ground_truth == b.ground_truth
        assert (a.anomaly_type, a.multivariate, a.affected_dimension) == (b.anomaly_type, b.multivariate, b.affected_dimension)


def test_dataset_layout(small_dataset):
    data = dataset_to_dict(small_dataset[:1], 5)
    record = data["instances"][0]
    assert set(record) == {"id", "type", "multivariate", "values", "anomalies", "affected_dimension"}
    assert record["type"] == "MS"
    assert set(record["anomalies"][0]) == {"start", "end"}


def broken(data, path, change):
    change(data["instances"][0])
    path.write_text(json.dumps(data))
    return path


@pytest.mark.parametrize(
    ("change", "message"),
    [
        (lambda r: r.pop("values"), "missing key 'values'"),
        (lambda r: r.update(type="XX"), "unknown anomaly type"),
        (lambda r: r.update(affected_dimension=True), "'affected_dimension' must be an integer"),
        (lambda r: r.update(values=[[1.0], [2.0, 3.0]]), "rectangular"),
        (lambda r: r["anomalies"][0].update(start="3"), "'start' must be an integer"),
        (lambda r: r["anomalies"][0].update(end=1000), "exceeds series length"),
        (lambda r: r.pop("anomalies"), "missing key 'anomalies'"),
        (lambda r: r["anomalies"][0].update(end=r["anomalies"][0]["start"]), "Invalid interval"),
    ],
)
def test_dataset_schema_errors(tmp_path, small_dataset, change, message):
    data = dataset_to_dict(small_dataset[:1], 5)
    with pytest.raises(DataFormatError, match=message):
        read_dataset(broken(data, tmp_path / "broken.json", change))


def test_dataset_requires_seed_and_valid_json(tmp_path):
    with pytest.raises(DataFormatError, match="'seed'"):
        read_dataset(write_text(tmp_path, "noseed.json", '{"instances": []}'))
    with pytest.raises(DataFormatError, match="invalid JSON"):
        read_dataset(write_text(tmp_path, "garbage.json", "{not json"))


def test_detections_round_trip(tmp_path):
    detections = [Detection(Interval(3, 17), 0.1 + 0.2, "MS-00"), Detection(Interval(40, 52), -1.5, "FC-03")]
    path = tmp_path / "detections.json"
    text = write_detections(detections, path)
    assert path.read_text() == text
    assert read_detections(path) == detections


def test_write_detections_without_path_only_returns_text():
    text = write_detections([Detection(Interval(0, 2), 1.0, "x")])
    assert json.loads(text) == [{"instance": "x", "start": 0, "end": 2, "score": 1.0}]


@pytest.mark.parametrize(
    ("record", "message"),
    [
        ({"instance": "a", "start": 0, "end": 5}, "missing key 'score'"),
        ({"instance": "a", "start": 0, "end": 5, "score": "high"}, "'score'"),
        ({"instance": "a", "start": 5, "end": 5, "score": 1.0}, "Invalid interval"),
    ],
)
def test_detection_format_errors(tmp_path, record, message):
    path = write_text(tmp_path, "detections.json", json.dumps([record]))
    with pytest.raises(DataFormatError, match=message):
        read_detections(path)


def test_report_and_pr_curve_files(tmp_path):
    reports = {"MS": EvaluationReport(ap=0.75, auc=0.9, pr_curve=[(0.5, 1.0), (1.0, 0.5)], matches=[(0, 0)])}
    write_report(reports, 0.5, tmp_path / "report.json")
    data = json.loads((tmp_path / "report.json").read_text())
    assert data == {"iou": 0.5, "groups": {"MS": {"ap": 0.75, "auc": 0.9, "pr_curve": [[0.5, 1.0], [1.0, 0.5]], "matches": [[0, 0]]}}}

    write_pr_curve(reports, tmp_path / "report.pr.txt")
    assert (tmp_path / "report.pr.txt").read_text() == "# MS\n0.5 1.0\n1.0 0.5\n"


def test_point_score_traces(tmp_path):
    write_point_scores({"a": PointScores([0.0, 2.5]), "b": PointScores([1.0])}, tmp_path / "trace.txt")
    assert (tmp_path / "trace.txt").read_text() == "# a\n0 0.0\n1 2.5\n\n# b\n0 1.0\n"


def test_instance_name():
    assert instance_name("some/dir/buoy_sample.csv") == "buoy_sample"
