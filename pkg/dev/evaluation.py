import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from dev.baselines import PointScores
from dev.core import InvalidParameterError
from dev.synthesis import GROUP_NAMES

logger = logging.getLogger(__name__)


@dataclass
class EvaluationReport:
    ap: float
    auc: float | None = None
    pr_curve: list = field(default_factory=list)
    matches: list = field(default_factory=list)

    def to_dict(self):
        return {
            "ap": self.ap,
            "auc": self.auc,
            "pr_curve": [[r, p] for r, p in self.pr_curve],
            "matches": [[d, g] for d, g in self.matches],
        }


def iou(a, b):
    intersection = max(0, min(a.end, b.end) - max(a.start, b.start))
    return intersection / (a.length + b.length - intersection)


def average_precision(detections, ground_truth, beta=0.5):
    """
    Pooled detection AP. ground_truth maps instance id -> list of Interval.

    Detections are ranked by score (ties: instance id, then start). A detection is a true
    positive when its IoU with a still-unmatched ground truth of its own instance exceeds
    beta; the highest-IoU candidate is taken. AP is the mean of the precision values at
    true-positive ranks over all ground truths (no interpolation).
    """
    if not 0 < beta <= 1:
        raise InvalidParameterError(f"IoU threshold must be in (0, 1], got {beta}")
    flat_ids = {}
    for instance, intervals in ground_truth.items():
        for j, _ in enumerate(intervals):
            flat_ids[(instance, j)] = len(flat_ids)
    total = len(flat_ids)
    if total == 0:
        raise InvalidParameterError("Average precision is undefined without ground-truth intervals")

    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, str(detections[i].instance), detections[i].interval.start))
    matched = set()
    matches = []
    pr_curve = []
    true_positives = 0
    precision_sum = 0.0
    for rank, i in enumerate(order, start=1):
        det = detections[i]
        best, best_iou = None, beta
        for j, gt in enumerate(ground_truth.get(det.instance, [])):
            if (det.instance, j) in matched:
                continue
            overlap = iou(det.interval, gt)
            if overlap > best_iou:
                best, best_iou = j, overlap
        if best is not None:
            matched.add((det.instance, best))
            matches.append((i, flat_ids[(det.instance, best)]))
            true_positives += 1
            precision_sum += true_positives / rank
        pr_curve.append((true_positives / total, true_positives / rank))
    return EvaluationReport(ap=precision_sum / total, pr_curve=pr_curve, matches=matches)


def point_labels(ground_truth, n):
    labels = np.zeros(n, dtype=bool)
    for interval in ground_truth:
        labels[interval.start : interval.end] = True
    return labels


def auc(point_scores, ground_truth):
    """Mann-Whitney AUC of point scores against ground-truth membership, ties counted 1/2."""
    scores = point_scores.scores if isinstance(point_scores, PointScores) else np.asarray(point_scores, dtype=float)
    labels = point_labels(ground_truth, scores.shape[0])
    positives = int(labels.sum())
    negatives = labels.shape[0] - positives
    if positives == 0 or negatives == 0:
        raise InvalidParameterError("AUC needs at least one anomalous and one normal time step")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - positives * (positives + 1) / 2) / (positives * negatives))


def intervals_to_point_scores(detections, n):
    """Each time step gets the highest score among detections covering it, 0 if none does."""
    scores = np.full(n, -np.inf)
    for det in detections:
        window = scores[det.interval.start : det.interval.end]
        np.maximum(window, det.score, out=window)
    scores[np.isneginf(scores)] = 0.0
    return PointScores(scores)


def evaluate_group(detections, instances, beta=0.5, point_scores=None):
    """
    AP over the pooled detections of a group of instances, and the mean per-instance AUC.
    point_scores maps instance id -> PointScores; when absent the detections are spread over time steps.
    """
    ids = {inst.id for inst in instances}
    positions = [i for i, det in enumerate(detections) if det.instance in ids]
    pooled = [detections[i] for i in positions]
    report = average_precision(pooled, {inst.id: list(inst.ground_truth) for inst in instances}, beta)
    report.matches = [(positions[d], g) for d, g in report.matches]

    per_instance = defaultdict(list)
    for det in pooled:
        per_instance[det.instance].append(det)
    aucs = []
    for inst in instances:
        if point_scores is not None and inst.id in point_scores:
            scores = point_scores[inst.id]
        else:
            scores = intervals_to_point_scores(per_instance[inst.id], inst.series.n)
        aucs.append(auc(scores, inst.ground_truth))
    report.auc = float(np.mean(aucs))
    return report


def evaluate_dataset(detections, instances, beta=0.5, point_scores=None):
    """One EvaluationReport per dataset group, in the fixed group order; empty groups are skipped."""
    by_group = defaultdict(list)
    for inst in instances:
        by_group[inst.group].append(inst)
    reports = {}
    for name in GROUP_NAMES:
        if by_group[name]:
            reports[name] = evaluate_group(detections, by_group[name], beta, point_scores)
            logger.info("Group %s: AP %.3f, AUC %.3f", name, reports[name].ap, reports[name].auc)
    return reports
