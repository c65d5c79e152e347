import numpy as np
import pytest

from dev.core import Detection, Interval, InvalidParameterError, TimeSeries
from dev.evaluation import auc, average_precision, evaluate_dataset, evaluate_group, intervals_to_point_scores, iou
from dev.synthesis import AnomalyType, DatasetInstance


def make_instance(inst_id, anomaly_type, gt, n=30, multivariate=False):
    dims = 5 if multivariate else 1
    return DatasetInstance(inst_id, anomaly_type, multivariate, TimeSeries(np.zeros((n, dims))), (gt,), 0)


def test_iou_examples():
    assert iou(Interval(0, 10), Interval(0, 10)) == 1.0
    assert iou(Interval(0, 10), Interval(10, 20)) == 0.0
    assert iou(Interval(0, 10), Interval(5, 15)) == pytest.approx(1 / 3)


def test_overlap_alone_is_not_a_hit():
    """Ground truth [10, 20) on 30 steps; detections [12, 16) and [16, 30) each overlap it but never by more than half."""
    gt = Interval(10, 20)
    detections = [Detection(Interval(12, 16), 2.0, "a"), Detection(Interval(16, 30), 1.0, "a")]
    assert average_precision(detections, {"a": [gt]}).ap == 0.0
    assert auc(intervals_to_point_scores(detections, 30), [gt]) == pytest.approx(0.75)


def test_good_localization_is_a_hit_with_the_same_auc():
    gt = Interval(10, 20)
    detections = [Detection(Interval(10, 16), 2.0, "a"), Detection(Interval(0, 5), 1.0, "a")]
    assert average_precision(detections, {"a": [gt]}).ap == 1.0
    assert auc(intervals_to_point_scores(detections, 30), [gt]) == pytest.approx(0.75)


def test_pooled_ranking_and_pr_curve():
    ground_truth = {"a": [Interval(0, 10)], "b": [Interval(20, 30)]}
    detections = [
        Detection(Interval(0, 10), 0.9, "a"),
        Detection(Interval(50, 60), 0.8, "b"),
        Detection(Interval(20, 30), 0.7, "b"),
    ]
    report = average_precision(detections, ground_truth)
    assert report.ap == pytest.approx((1 + 2 / 3) / 2)
    assert report.pr_curve == [(0.5, 1.0), (0.5, 0.5), (1.0, pytest.approx(2 / 3))]
    assert report.matches == [(0, 0), (2, 1)]


def test_ground_truth_is_matched_once():
    detections = [Detection(Interval(0, 10), 1.0, "a"), Detection(Interval(1, 10), 0.5, "a")]
    report = average_precision(detections, {"a": [Interval(0, 10)]})
    assert report.matches == [(0, 0)]
    assert report.ap == 1.0
    assert report.pr_curve[-1] == (1.0, 0.5)


def test_highest_iou_ground_truth_is_taken():
    """[3, 13) clears the threshold for both truths; taking [0, 10) would leave [0, 9) unmatched."""
    ground_truth = {"a": [Interval(0, 10), Interval(3, 13)]}
    detections = [Detection(Interval(3, 13), 1.0, "a"), Detection(Interval(0, 9), 0.5, "a")]
    report = average_precision(detections, ground_truth)
    assert report.matches == [(0, 1), (1, 0)]
    assert report.ap == 1.0


def test_detections_only_match_their_own_instance():
    report = average_precision([Detection(Interval(0, 10), 1.0, "b")], {"a": [Interval(0, 10)], "b": []})
    assert report.ap == 0.0


def test_ties_are_ranked_by_instance_then_start():
    ground_truth = {"a": [Interval(0, 10)], "b": [Interval(0, 10)]}
    detections = [Detection(Interval(0, 10), 1.0, "b"), Detection(Interval(40, 50), 1.0, "a"), Detection(Interval(0, 10), 1.0, "a")]
    report = average_precision(detections, ground_truth)
    # ranked: a[0,10), a[40,50), b[0,10)
    assert report.matches == [(2, 0), (0, 1)]
    assert report.ap == pytest.approx((1 + 2 / 3) / 2)


def test_average_precision_validation():
    with pytest.raises(InvalidParameterError):
        average_precision([], {"a": [Interval(0, 1)]}, beta=0.0)
    with pytest.raises(InvalidParameterError):
        average_precision([], {"a": []})
    assert average_precision([], {"a": [Interval(0, 1)]}).ap == 0.0


def test_ap_is_invariant_under_monotone_rescoring():
    rng = np.random.default_rng(3)
    ground_truth = {f"i{j}": [Interval(int(s), int(s) + 15)] for j, s in enumerate(rng.integers(0, 80, size=10))}
    detections = []
    for inst in ground_truth:
        for _ in range(4):
            start = int(rng.integers(0, 90))
            detections.append(Detection(Interval(start, start + int(rng.integers(5, 25))), float(rng.normal()), inst))
    rescored = [Detection(d.interval, float(np.exp(3 * d.score) + 1), d.instance) for d in detections]
    assert average_precision(rescored, ground_truth).ap == pytest.approx(average_precision(detections, ground_truth).ap, abs=1e-12)


def test_fuzzed_matching_never_reuses_a_ground_truth():
    rng = np.random.default_rng(99)
    for _ in range(500):
        ground_truth = {}
        for j in range(int(rng.integers(1, 4))):
            starts = rng.integers(0, 80, size=int(rng.integers(0, 3)))
            ground_truth[f"i{j}"] = [Interval(int(s), int(s) + int(rng.integers(1, 20))) for s in starts]
        if not any(ground_truth.values()):
            continue
        detections = []
        for _ in range(int(rng.integers(0, 15))):
            start = int(rng.integers(0, 90))
            detections.append(Detection(Interval(start, start + int(rng.integers(1, 20))), float(rng.integers(0, 3)), f"i{rng.integers(0, 3)}"))
        report = average_precision(detections, ground_truth, beta=float(rng.uniform(0.1, 0.9)))
        matched = [g for _, g in report.matches]
        assert len(matched) == len(set(matched))
        assert len({d for d, _ in report.matches}) == len(report.matches)
        assert 0.0 <= report.ap <= 1.0


def test_auc_examples():
    assert auc([0, 0, 1, 1], [Interval(2, 4)]) == 1.0
    assert auc([1, 1, 0, 0], [Interval(2, 4)]) == 0.0
    assert auc(np.zeros(10), [Interval(3, 6)]) == 0.5


def test_auc_needs_both_classes():
    with pytest.raises(InvalidParameterError):
        auc(np.zeros(5), [Interval(0, 5)])
    with pytest.raises(InvalidParameterError):
        auc(np.zeros(5), [])


def test_auc_matches_pairwise_count():
    rng = np.random.default_rng(5)
    scores = rng.integers(0, 5, size=60).astype(float)
    gt = [Interval(10, 25), Interval(40, 45)]
    labels = np.zeros(60, dtype=bool)
    labels[10:25] = labels[40:45] = True
    diff = scores[labels][:, None] - scores[~labels][None, :]
    expected = ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size
    assert auc(scores, gt) == pytest.approx(expected)


def test_intervals_to_point_scores_takes_the_maximum():
    detections = [Detection(Interval(0, 4), 1.0), Detection(Interval(2, 6), 3.0), Detection(Interval(8, 9), -2.0)]
    np.testing.assert_array_equal(intervals_to_point_scores(detections, 10).scores, [1, 1, 3, 3, 3, 3, 0, 0, -2, 0])


def test_evaluate_group_ignores_other_instances():
    instances = [make_instance("MS-00", AnomalyType.MS, Interval(10, 20)), make_instance("MS-01", AnomalyType.MS, Interval(0, 8))]
    detections = [
        Detection(Interval(0, 10), 5.0, "AC-00"),
        Detection(Interval(10, 20), 2.0, "MS-00"),
        Detection(Interval(20, 30), 1.0, "MS-01"),
    ]
    report = evaluate_group(detections, instances)
    assert report.ap == 0.5
    assert report.matches == [(1, 0)]
    # MS-00 is perfectly separated, MS-01 scores [20, 30) above its anomaly
    assert report.auc == pytest.approx((1.0 + 8 * 12 * 0.5 / (8 * 22)) / 2)


def test_evaluate_group_prefers_supplied_point_scores():
    inst = make_instance("FC-00", AnomalyType.FC, Interval(5, 10), n=20)
    scores = np.zeros(20)
    scores[5:10] = 1.0
    report = evaluate_group([], [inst], point_scores={"FC-00": scores})
    assert report.auc == 1.0
    assert report.ap == 0.0


def test_evaluate_dataset_reports_groups_in_fixed_order():
    instances = [
        make_instance("AC5-00", AnomalyType.AC, Interval(0, 5), multivariate=True),
        make_instance("MS-00", AnomalyType.MS, Interval(0, 5)),
        make_instance("FC-00", AnomalyType.FC, Interval(0, 5)),
    ]
    detections = [Detection(Interval(0, 5), 1.0, "FC-00")]
    reports = evaluate_dataset(detections, instances)
    assert list(reports) == ["MS", "FC", "AC5"]
    assert reports["FC"].ap == 1.0
    assert reports["MS"].ap == 0.0
    assert reports["MS"].auc == 0.5
