from __future__ import annotations

import numpy as np
import pytest

from cadastre.evaluation import (
    ConfusionMatrix,
    EvaluationError,
    class_metrics,
    class_roc,
    confusion,
    confusion_from_labels,
    evaluate_experiment,
    experiment_roc_summary,
    roc_curve,
)
from cadastre.classifier import PredictionSet
from cadastre.schema import (
    DatasetManifest,
    LabelSchema,
    ValidationError,
)

from helpers import (
    make_manual,
    oracle_auc,
    oracle_class_metrics,
    oracle_weighted,
)

SCHEMA = LabelSchema.reduced("stucco")


def _scores_for_labels(labels, strength=0.8):
    k = len(SCHEMA.labels)
    rows = []
    for label in labels:
        row = [(1 - strength) / (k - 1)] * k
        row[SCHEMA.index(label)] = strength
        rows.append(row)
    return np.array(rows)


# --- confusion matrices ---


def test_confusion_counts_by_schema_order():
    truth = ["null", "null", "other", "stucco", "stucco", "stucco"]
    pred = ["null", "other", "other", "stucco", "stucco", "null"]
    cm = confusion_from_labels(SCHEMA, truth, pred)
    assert cm.counts.tolist() == [[1, 1, 0], [0, 1, 0], [1, 0, 2]]
    assert cm.support.tolist() == [2, 1, 3]
    assert cm.total == 6


def test_confusion_validation():
    with pytest.raises(ValidationError):
        confusion_from_labels(SCHEMA, ["null"], [])
    with pytest.raises(ValidationError, match="shape"):
        ConfusionMatrix(schema=SCHEMA, counts=np.zeros((2, 2)))
    with pytest.raises(ValidationError, match="non-negative"):
        ConfusionMatrix(schema=SCHEMA, counts=-np.eye(3))


def test_row_normalization_and_zero_row_flags():
    cm = ConfusionMatrix(schema=SCHEMA,
                         counts=[[8, 1, 1], [0, 0, 0], [1, 1, 2]])
    percent, zero_rows = cm.row_normalized()
    assert percent[0].tolist() == [80.0, 10.0, 10.0]
    assert percent[1].tolist() == [0.0, 0.0, 0.0]
    assert percent[2].tolist() == [25.0, 25.0, 50.0]
    assert zero_rows == ("other",)


def _tiny_manifest():
    train = tuple(make_manual(label, i)
                  for label in SCHEMA.labels for i in range(2))
    test = tuple(make_manual(label, i + 10) for label in SCHEMA.labels
                 for i in range(1))
    return DatasetManifest(schema=SCHEMA, train=train, test=test,
                           seed=0, experiment_tag="baseline-stucco")


def test_confusion_from_manifest_checks_identity():
    manifest = _tiny_manifest()
    ids = tuple(r.id for r in manifest.test)
    ps = PredictionSet(schema=SCHEMA, image_ids=ids,
                       scores=_scores_for_labels([r.label
                                                  for r in manifest.test]))
    cm = confusion(manifest, ps)
    assert np.trace(cm.counts) == 3

    stranger = PredictionSet(schema=SCHEMA, image_ids=("ghost",) + ids[1:],
                             scores=_scores_for_labels(["null"] * 3))
    with pytest.raises(ValidationError, match="outside the test split"):
        confusion(manifest, stranger)

    short = PredictionSet(schema=SCHEMA, image_ids=ids[:2],
                          scores=_scores_for_labels(["null", "other"]))
    with pytest.raises(ValidationError, match="2 predictions for 3"):
        confusion(manifest, short)

    other_schema = PredictionSet(schema=LabelSchema.reduced("siding"),
                                 image_ids=ids,
                                 scores=_scores_for_labels(["null"] * 3))
    with pytest.raises(ValidationError, match="does not match"):
        confusion(manifest, other_schema)


# --- precision / recall / F1 against the brute-force oracle ---


def test_class_metrics_match_the_oracle_on_random_matrices():
    rng = np.random.default_rng(11)
    for _ in range(50):
        counts = rng.integers(0, 30, size=(3, 3))
        table = class_metrics(ConfusionMatrix(schema=SCHEMA, counts=counts))
        oracle_rows = oracle_class_metrics(counts)
        for row, expected in zip(table.per_class, oracle_rows):
            assert row.precision == pytest.approx(expected["precision"],
                                                  abs=1e-12)
            assert row.recall == pytest.approx(expected["recall"], abs=1e-12)
            assert row.f1 == pytest.approx(expected["f1"], abs=1e-12)
            assert row.support == expected["support"]
        for key, got in (("precision", table.weighted_precision),
                         ("recall", table.weighted_recall),
                         ("f1", table.weighted_f1)):
            assert got == pytest.approx(oracle_weighted(oracle_rows, key),
                                        abs=1e-12)


def test_degenerate_metrics_are_zero_and_flagged():
    # nothing predicted as "other", nothing truly "stucco"
    cm = ConfusionMatrix(schema=SCHEMA, counts=[[5, 0, 1], [2, 0, 1],
                                                [0, 0, 0]])
    table = class_metrics(cm)
    other = table.for_label("other")
    assert other.precision == 0.0 and "precision" in other.degenerate
    stucco = table.for_label("stucco")
    assert stucco.recall == 0.0 and "recall" in stucco.degenerate
    assert "f1" in stucco.degenerate
    null = table.for_label("null")
    assert null.degenerate == ()
    assert table.accuracy == pytest.approx(5 / 9)


def test_accuracy_of_empty_matrix_is_zero():
    table = class_metrics(ConfusionMatrix(schema=SCHEMA,
                                          counts=np.zeros((3, 3))))
    assert table.accuracy == 0.0
    assert table.weighted_f1 == 0.0


# --- ROC / AUC against the pairwise oracle ---


def test_roc_auc_matches_pairwise_oracle_with_ties():
    rng = np.random.default_rng(23)
    for trial in range(60):
        n = int(rng.integers(4, 80))
        # Quantized scores force plenty of ties.
        scores = rng.integers(0, 6, size=n) / 5.0
        truth = rng.random(n) < 0.4
        if truth.all() or not truth.any():
            continue
        curve = roc_curve(scores, truth)
        assert curve.auc == pytest.approx(oracle_auc(scores, truth),
                                          abs=1e-9)


def test_all_equal_scores_give_exactly_half():
    curve = roc_curve([0.5] * 10, [True] * 4 + [False] * 6)
    assert curve.auc == 0.5
    assert curve.fpr == (0.0, 1.0)
    assert curve.tpr == (0.0, 1.0)


def test_roc_anchors_thresholds_and_monotonicity():
    curve = roc_curve([0.9, 0.8, 0.7, 0.6], [True, False, True, False])
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert curve.thresholds[0] == float("inf")
    assert list(curve.thresholds[1:]) == [0.9, 0.8, 0.7, 0.6]
    assert all(b >= a for a, b in zip(curve.fpr, curve.fpr[1:]))
    assert all(b >= a for a, b in zip(curve.tpr, curve.tpr[1:]))


def test_single_class_truth_is_an_error():
    with pytest.raises(EvaluationError, match="0 negatives"):
        roc_curve([0.1, 0.2], [True, True])
    with pytest.raises(EvaluationError, match="0 positives"):
        roc_curve([0.1, 0.2], [False, False])


def test_class_roc_uses_the_right_score_column():
    truth = ["stucco", "null", "stucco", "other"]
    ps = PredictionSet(schema=SCHEMA, image_ids=("a", "b", "c", "d"),
                       scores=[[0.1, 0.1, 0.8], [0.7, 0.2, 0.1],
                               [0.2, 0.2, 0.6], [0.1, 0.8, 0.1]])
    curve = class_roc(ps, truth, "stucco")
    assert curve.positive_label == "stucco"
    assert curve.auc == pytest.approx(
        oracle_auc(ps.scores_for("stucco"), [t == "stucco" for t in truth]))


# --- experiment-level summaries ---


def _random_predictions(rng, n=40):
    labels = [SCHEMA.labels[i] for i in rng.integers(0, 3, size=n)]
    raw = rng.random((n, 3)) + 0.2
    raw[np.arange(n), [SCHEMA.index(l) for l in labels]] += rng.random(n)
    scores = raw / raw.sum(axis=1, keepdims=True)
    ids = tuple(f"img-{i:03d}" for i in range(n))
    return PredictionSet(schema=SCHEMA, image_ids=ids, scores=scores), labels


def test_macro_summary_is_the_mean_of_class_aucs():
    rng = np.random.default_rng(5)
    ps, truth = _random_predictions(rng)
    summary = experiment_roc_summary(ps, truth, mode="macro")
    assert summary.mode == "macro"
    assert len(summary.grid_fpr) == 101
    assert summary.grid_fpr[0] == 0.0 and summary.grid_fpr[-1] == 1.0
    expected = {
        label: oracle_auc(ps.scores_for(label),
                          [t == label for t in truth])
        for label in SCHEMA.labels
    }
    for label, auc in summary.per_class_auc.items():
        assert auc == pytest.approx(expected[label], abs=1e-9)
    assert summary.auc == pytest.approx(
        np.mean(list(expected.values())), abs=1e-9)


def test_macro_summary_skips_absent_classes():
    rng = np.random.default_rng(8)
    ps, _ = _random_predictions(rng, n=20)
    truth = ["null" if i < 10 else "stucco" for i in range(20)]
    summary = experiment_roc_summary(ps, truth, mode="macro")
    assert set(summary.per_class_auc) == {"null", "stucco"}


def test_micro_summary_pools_all_decisions():
    rng = np.random.default_rng(13)
    ps, truth = _random_predictions(rng, n=30)
    summary = experiment_roc_summary(ps, truth, mode="micro")
    pooled_scores = []
    pooled_truth = []
    for k, label in enumerate(SCHEMA.labels):
        pooled_scores.extend(ps.scores[:, k])
        pooled_truth.extend(t == label for t in truth)
    assert summary.auc == pytest.approx(
        oracle_auc(pooled_scores, pooled_truth), abs=1e-9)
    assert summary.per_class_auc == {}


def test_summary_rejects_degenerate_truth():
    rng = np.random.default_rng(2)
    ps, _ = _random_predictions(rng, n=10)
    with pytest.raises(EvaluationError, match="every test image"):
        experiment_roc_summary(ps, ["null"] * 10, mode="macro")
    with pytest.raises(ValidationError, match="unknown ROC summary mode"):
        experiment_roc_summary(ps, ["null"] * 10, mode="weighted")


def test_evaluate_experiment_bundles_all_views():
    manifest = _tiny_manifest()
    ids = tuple(r.id for r in manifest.test)
    truth = [r.label for r in manifest.test]
    ps = PredictionSet(schema=SCHEMA, image_ids=ids,
                       scores=_scores_for_labels(truth))
    result = evaluate_experiment("baseline-stucco", manifest, ps)
    assert result.tag == "baseline-stucco"
    assert result.metrics.accuracy == 1.0
    assert result.roc_summary.auc == 1.0
    assert {c.positive_label for c in result.class_curves} == set(SCHEMA.labels)
