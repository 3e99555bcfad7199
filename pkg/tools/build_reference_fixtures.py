"""Builds the committed reference fixtures under tests/fixtures/.

Each fixture is a (manifest.txt, predictions.csv) pair for one mixed
experiment, constructed so the aggregate metrics land on the published
reference values:

    mixed-stucco: weighted (f1, p, r) = (0.86, 0.87, 0.86), diagonal 91%,
                  summary AUC 0.95
    mixed-siding: weighted (f1, p, r) = (0.72, 0.75, 0.74), diagonal 48%,
                  summary AUC 0.91

The search works against plain-Python/numpy re-implementations of the
metric definitions rather than the package's evaluation engine, so the
fixtures stay an independent cross-check. Rerunning the script regenerates
byte-identical files (fixed seeds throughout).
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cadastre.classifier import PredictionSet, write_predictions
from cadastre.manifest import save_manifest
from cadastre.schema import DatasetManifest, ImageRecord, LabelSchema

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

TARGETS = {
    "stucco": {
        "weighted": (0.86, 0.87, 0.86),  # f1, precision, recall
        "diag_percent": 91,
        "auc": 0.95,
        "support": 149,
        "train_per_class": 596,
    },
    "siding": {
        "weighted": (0.72, 0.75, 0.74),
        "diag_percent": 48,
        "auc": 0.91,
        "support": 62,
        "train_per_class": 248,
    },
}

# Integer confusion matrices quantize the weighted metrics in steps of
# 1/(3*support); at support 62 the closest grid point to the published
# numbers sits 0.00345 away (verified exhaustively), well inside the
# +/-0.005 reporting tolerance.
SEARCH_STOP = {"stucco": 0.003, "siding": 0.0035}


def oracle_weighted(counts: np.ndarray) -> tuple[float, float, float]:
    """(weighted f1, precision, recall) straight from the definitions."""
    k = counts.shape[0]
    support = counts.sum(axis=1)
    f1s, ps, rs = [], [], []
    for c in range(k):
        tp = counts[c, c]
        p = tp / counts[:, c].sum() if counts[:, c].sum() else 0.0
        r = tp / support[c] if support[c] else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        ps.append(p)
        rs.append(r)
        f1s.append(f1)
    total = support.sum()
    weight = support / total
    return (float(np.dot(f1s, weight)), float(np.dot(ps, weight)),
            float(np.dot(rs, weight)))


def oracle_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    pos = scores[positive]
    neg = scores[~positive]
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return float(wins / (len(pos) * len(neg)))


def search_confusion(label: str, seed: int) -> np.ndarray:
    """Random search for an integer confusion matrix hitting the weighted
    metric targets with margin inside the published +/-0.005 tolerance."""
    spec = TARGETS[label]
    s = spec["support"]
    # diagonal of the label-of-interest row, pinned by the rounded percent
    diag_options = [d for d in range(s + 1)
                    if round(d / s * 100) == spec["diag_percent"]]
    rng = np.random.default_rng(seed)
    target = np.array(spec["weighted"])
    best = None
    for _ in range(200_000):
        d_interest = int(rng.choice(diag_options))
        d_null = int(rng.integers(int(0.70 * s), s + 1))
        d_other = int(rng.integers(int(0.70 * s), s + 1))
        counts = np.zeros((3, 3), dtype=np.int64)
        for row, diag in enumerate((d_null, d_other, d_interest)):
            counts[row, row] = diag
            spill = s - diag
            left = int(rng.integers(0, spill + 1))
            cols = [c for c in range(3) if c != row]
            counts[row, cols[0]] = left
            counts[row, cols[1]] = spill - left
        got = np.array(oracle_weighted(counts))
        err = np.abs(got - target).max()
        if best is None or err < best[0]:
            best = (err, counts)
        if err <= SEARCH_STOP[label]:
            return counts
    raise SystemExit(
        f"no confusion matrix within tolerance for {label}: "
        f"best error {best[0]:.4f}\n{best[1]}"
    )


def scores_for_confusion(counts: np.ndarray, affinity: float,
                         seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Score rows whose argmax reproduces ``counts`` exactly.

    Each sample gets noisy logits with ``affinity`` added to its true
    class; the predicted class is then forced to the top so the confusion
    matrix survives softmax. Higher affinity -> higher AUC.
    """
    rng = np.random.default_rng(seed)
    truths, preds = [], []
    for t in range(3):
        for p in range(3):
            truths.extend([t] * int(counts[t, p]))
            preds.extend([p] * int(counts[t, p]))
    truths = np.array(truths)
    preds = np.array(preds)
    n = len(truths)
    logits = rng.normal(0.0, 1.0, size=(n, 3))
    logits[np.arange(n), truths] += affinity
    tops = logits.max(axis=1)
    bump = rng.uniform(0.05, 0.4, size=n)
    logits[np.arange(n), preds] = tops + bump
    z = logits - logits.max(axis=1, keepdims=True)
    scores = np.exp(z)
    scores /= scores.sum(axis=1, keepdims=True)
    assert np.array_equal(scores.argmax(axis=1), preds)
    return scores, truths


def macro_auc(scores: np.ndarray, truths: np.ndarray) -> float:
    return float(np.mean([
        oracle_auc(scores[:, k], truths == k) for k in range(3)
    ]))


def tune_affinity(counts: np.ndarray, target: float, seed: int) -> float:
    lo, hi = 0.0, 6.0
    for _ in range(60):
        mid = (lo + hi) / 2
        scores, truths = scores_for_confusion(counts, mid, seed)
        if macro_auc(scores, truths) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def synthetic_record(label: str, i: int) -> ImageRecord:
    return ImageRecord(
        id=f"fix-syn-{label}-{i:04d}",
        path=f"images/fix-syn-{label}-{i:04d}.png",
        width=512, height=512, label=label, provenance="synthetic",
        review_status="accepted", prompt_id=f"{label}-fixture",
    )


def manual_record(label: str, i: int) -> ImageRecord:
    return ImageRecord(
        id=f"fix-man-{label}-{i:04d}",
        path=f"images/fix-man-{label}-{i:04d}.png",
        width=400, height=600, label=label, provenance="manual",
        review_status="accepted",
    )


def build(label: str, seed: int) -> None:
    spec = TARGETS[label]
    schema = LabelSchema.reduced(label)
    counts = search_confusion(label, seed)
    affinity = tune_affinity(counts, spec["auc"], seed + 1)
    scores, truths = scores_for_confusion(counts, affinity, seed + 1)

    weighted = oracle_weighted(counts)
    auc = macro_auc(scores, truths)
    diag = counts[2, 2] / spec["support"] * 100
    print(f"{label}: weighted={tuple(round(v, 4) for v in weighted)} "
          f"diag={diag:.2f}% auc={auc:.4f} affinity={affinity:.3f}")
    assert np.abs(np.array(weighted) - spec["weighted"]).max() <= 0.0045
    assert abs(auc - spec["auc"]) <= 0.005

    train = tuple(
        synthetic_record(lab, i)
        for lab in schema.labels for i in range(spec["train_per_class"])
    )
    test = tuple(
        manual_record(schema.labels[t], i)
        for i, t in enumerate(truths)
    )
    manifest = DatasetManifest(
        schema=schema, train=train, test=test, seed=seed,
        experiment_tag=f"mixed-{label}",
    )
    predictions = PredictionSet(
        schema=schema,
        image_ids=tuple(r.id for r in test),
        scores=scores,
    )
    out = FIXTURES / f"mixed-{label}"
    out.mkdir(parents=True, exist_ok=True)
    save_manifest(manifest, out / "manifest.txt")
    write_predictions(predictions, out / "predictions.csv")
    print(f"  wrote {out}/manifest.txt and predictions.csv")


def main() -> None:
    build("stucco", seed=414001)
    build("siding", seed=515001)


if __name__ == "__main__":
    main()
