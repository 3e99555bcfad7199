"""Confusion matrices, per-class metrics, and ROC analysis.

Conventions: confusion rows are true labels, columns predicted. Metrics
with a zero denominator come back as 0.0 and are flagged rather than
raised, so a degenerate class cannot crash a report. ROC curves sweep
every distinct score as a threshold (ties move together), carry (0,0)
and (1,1) anchors, and integrate by the trapezoid rule; a constant score
vector therefore yields an AUC of exactly 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classifier import PredictionSet
from .schema import CadastreError, DatasetManifest, LabelSchema, ValidationError

SUMMARY_GRID_POINTS = 101


class EvaluationError(CadastreError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    schema: LabelSchema
    counts: np.ndarray  # (K, K) int64, rows true

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.schema.labels)
        if counts.shape != (k, k):
            raise ValidationError(
                f"confusion matrix shape {counts.shape} does not match "
                f"{k} labels"
            )
        if np.any(counts < 0):
            raise ValidationError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_normalized(self) -> tuple[np.ndarray, tuple[str, ...]]:
        """Rows as percentages summing to 100; all-zero rows stay zero
        and are reported by label."""
        support = self.support.astype(np.float64)
        zero_rows = tuple(
            self.schema.labels[i] for i in np.where(support == 0)[0]
        )
        safe = np.where(support == 0, 1.0, support)
        percent = self.counts / safe[:, None] * 100.0
        return percent, zero_rows


def confusion_from_labels(schema: LabelSchema, truth: Sequence[str],
                          predicted: Sequence[str]) -> ConfusionMatrix:
    if len(truth) != len(predicted):
        raise ValidationError(
            f"{len(truth)} truth labels vs {len(predicted)} predictions"
        )
    k = len(schema.labels)
    counts = np.zeros((k, k), dtype=np.int64)
    for true_label, pred_label in zip(truth, predicted):
        counts[schema.index(true_label), schema.index(pred_label)] += 1
    return ConfusionMatrix(schema=schema, counts=counts)


def _truth_for(manifest: DatasetManifest,
               predictions: PredictionSet) -> tuple[str, ...]:
    if manifest.schema.labels != predictions.schema.labels:
        raise ValidationError(
            f"prediction schema {predictions.schema.name!r} does not match "
            f"manifest schema {manifest.schema.name!r}"
        )
    by_id = {record.id: record.label for record in manifest.test}
    missing = [i for i in predictions.image_ids if i not in by_id]
    if missing:
        raise ValidationError(
            f"predictions reference images outside the test split: "
            f"{missing[:3]}"
        )
    if len(predictions.image_ids) != len(manifest.test):
        raise ValidationError(
            f"{len(predictions.image_ids)} predictions for "
            f"{len(manifest.test)} test images"
        )
    return tuple(by_id[i] for i in predictions.image_ids)


def confusion(manifest: DatasetManifest,
              predictions: PredictionSet) -> ConfusionMatrix:
    truth = _truth_for(manifest, predictions)
    return confusion_from_labels(manifest.schema, truth,
                                 predictions.predicted_labels)


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: tuple[str, ...]  # metric names computed over a zero denominator

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "degenerate": list(self.degenerate),
        }


@dataclass(frozen=True)
class MetricsTable:
    schema: LabelSchema
    per_class: tuple[ClassMetrics, ...]
    accuracy: float

    def for_label(self, label: str) -> ClassMetrics:
        for row in self.per_class:
            if row.label == label:
                return row
        raise ValidationError(f"no metrics for label {label!r}")

    def _weighted(self, attr: str) -> float:
        total = sum(row.support for row in self.per_class)
        if total == 0:
            return 0.0
        return sum(getattr(row, attr) * row.support
                   for row in self.per_class) / total

    @property
    def weighted_precision(self) -> float:
        return self._weighted("precision")

    @property
    def weighted_recall(self) -> float:
        return self._weighted("recall")

    @property
    def weighted_f1(self) -> float:
        return self._weighted("f1")

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.name,
            "accuracy": self.accuracy,
            "per_class": [row.to_dict() for row in self.per_class],
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
        }


def class_metrics(cm: ConfusionMatrix) -> MetricsTable:
    counts = cm.counts.astype(np.float64)
    rows: list[ClassMetrics] = []
    for i, label in enumerate(cm.schema.labels):
        tp = counts[i, i]
        predicted = counts[:, i].sum()
        actual = counts[i, :].sum()
        degenerate: list[str] = []
        if predicted == 0:
            precision = 0.0
            degenerate.append("precision")
        else:
            precision = tp / predicted
        recall = 0.0 if actual == 0 else tp / actual
        if actual == 0:
            degenerate.append("recall")
        if precision + recall == 0:
            f1 = 0.0
            degenerate.append("f1")
        else:
            f1 = 2 * precision * recall / (precision + recall)
        rows.append(ClassMetrics(
            label=label, precision=float(precision), recall=float(recall),
            f1=float(f1), support=int(actual), degenerate=tuple(degenerate),
        ))
    total = cm.total
    accuracy = float(np.trace(cm.counts) / total) if total else 0.0
    return MetricsTable(schema=cm.schema, per_class=tuple(rows),
                        accuracy=accuracy)


@dataclass(frozen=True)
class RocCurve:
    positive_label: str
    thresholds: tuple[float, ...]  # one per point; inf at the (0,0) anchor
    fpr: tuple[float, ...]
    tpr: tuple[float, ...]
    auc: float

    def __post_init__(self):
        n = len(self.fpr)
        if not (len(self.tpr) == len(self.thresholds) == n):
            raise ValidationError("ROC point arrays must share a length")
        if n < 2 or self.fpr[0] != 0.0 or self.tpr[0] != 0.0 \
                or self.fpr[-1] != 1.0 or self.tpr[-1] != 1.0:
            raise ValidationError("ROC curve must run from (0,0) to (1,1)")
        if any(b < a for a, b in zip(self.fpr, self.fpr[1:])) \
                or any(b < a for a, b in zip(self.tpr, self.tpr[1:])):
            raise ValidationError("ROC curve must be monotone")


def roc_curve(scores: Sequence[float], is_positive: Sequence[bool],
              positive_label: str = "positive") -> RocCurve:
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(is_positive, dtype=bool)
    if scores.shape != truth.shape or scores.ndim != 1:
        raise ValidationError("scores and truth must be equal-length vectors")
    n_pos = int(truth.sum())
    n_neg = int(len(truth) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError(
            f"ROC for {positive_label!r} is undefined: "
            f"{n_pos} positives, {n_neg} negatives"
        )

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_truth = truth[order]

    fpr = [0.0]
    tpr = [0.0]
    thresholds = [float("inf")]
    tp = fp = 0
    i = 0
    n = len(sorted_scores)
    while i < n:
        threshold = sorted_scores[i]
        # All samples tied at this score cross the threshold together.
        while i < n and sorted_scores[i] == threshold:
            if sorted_truth[i]:
                tp += 1
            else:
                fp += 1
            i += 1
        thresholds.append(float(threshold))
        fpr.append(fp / n_neg)
        tpr.append(tp / n_pos)

    trapezoid = getattr(np, "trapezoid", np.trapz)
    auc = float(trapezoid(tpr, fpr))
    return RocCurve(positive_label=positive_label, thresholds=tuple(thresholds),
                    fpr=tuple(fpr), tpr=tuple(tpr), auc=auc)


def class_roc(predictions: PredictionSet, truth: Sequence[str],
              label: str) -> RocCurve:
    scores = predictions.scores_for(label)
    is_positive = [t == label for t in truth]
    return roc_curve(scores, is_positive, positive_label=label)


@dataclass(frozen=True)
class RocSummary:
    """Experiment-level ROC on a fixed FPR grid.

    Macro mode interpolates each per-class curve onto the grid and averages
    the TPRs; the reported AUC is the mean of the per-class AUCs. Micro mode
    pools every (score, is-this-class) decision into one binary problem.
    """

    mode: str
    grid_fpr: tuple[float, ...]
    tpr: tuple[float, ...]
    auc: float
    per_class_auc: dict[str, float]


def _interp_on_grid(curve: RocCurve, grid: np.ndarray) -> np.ndarray:
    fpr = np.asarray(curve.fpr)
    tpr = np.asarray(curve.tpr)
    # Collapse vertical segments to their best TPR so interpolation sees a
    # function of FPR.
    best: dict[float, float] = {}
    for x, y in zip(fpr, tpr):
        best[x] = max(best.get(x, 0.0), y)
    xs = np.array(sorted(best))
    ys = np.array([best[x] for x in xs])
    return np.interp(grid, xs, ys)


def experiment_roc_summary(predictions: PredictionSet, truth: Sequence[str],
                           mode: str = "macro",
                           grid_points: int = SUMMARY_GRID_POINTS) -> RocSummary:
    if mode not in ("macro", "micro"):
        raise ValidationError(f"unknown ROC summary mode {mode!r}")
    truth = tuple(truth)
    grid = np.linspace(0.0, 1.0, grid_points)

    if mode == "micro":
        pooled_scores: list[float] = []
        pooled_truth: list[bool] = []
        for k, label in enumerate(predictions.schema.labels):
            pooled_scores.extend(predictions.scores[:, k])
            pooled_truth.extend(t == label for t in truth)
        curve = roc_curve(pooled_scores, pooled_truth, positive_label="micro")
        return RocSummary(
            mode="micro", grid_fpr=tuple(grid),
            tpr=tuple(_interp_on_grid(curve, grid)),
            auc=curve.auc, per_class_auc={},
        )

    curves: dict[str, RocCurve] = {}
    for label in predictions.schema.labels:
        if not any(t == label for t in truth):
            continue  # absent classes cannot anchor a curve
        if all(t == label for t in truth):
            raise EvaluationError(
                f"ROC summary is undefined: every test image is {label!r}"
            )
        curves[label] = class_roc(predictions, truth, label)
    if not curves:
        raise EvaluationError("ROC summary needs at least one populated class")

    stacked = np.stack([_interp_on_grid(c, grid) for c in curves.values()])
    per_class_auc = {label: c.auc for label, c in curves.items()}
    mean_auc = float(np.mean(list(per_class_auc.values())))
    return RocSummary(
        mode="macro", grid_fpr=tuple(grid), tpr=tuple(stacked.mean(axis=0)),
        auc=mean_auc, per_class_auc=per_class_auc,
    )


@dataclass(frozen=True)
class ExperimentEvaluation:
    """Everything the report writer needs for one experiment."""

    tag: str
    cm: ConfusionMatrix
    metrics: MetricsTable
    roc_summary: RocSummary
    class_curves: tuple[RocCurve, ...] = ()


def evaluate_experiment(tag: str, manifest: DatasetManifest,
                        predictions: PredictionSet,
                        roc_mode: str = "macro") -> ExperimentEvaluation:
    truth = _truth_for(manifest, predictions)
    cm = confusion_from_labels(manifest.schema, truth,
                               predictions.predicted_labels)
    metrics = class_metrics(cm)
    summary = experiment_roc_summary(predictions, truth, mode=roc_mode)
    curves = []
    for label in manifest.schema.labels:
        positives = sum(1 for t in truth if t == label)
        if 0 < positives < len(truth):
            curves.append(class_roc(predictions, truth, label))
    return ExperimentEvaluation(tag=tag, cm=cm, metrics=metrics,
                                roc_summary=summary,
                                class_curves=tuple(curves))
