"""Shared fixtures and independent oracle implementations.

The oracles deliberately avoid the package's own evaluation code: metrics
are computed with plain Python loops over the formula definitions, and the
AUC oracle counts pairwise comparisons, so agreement with the engine is a
real cross-check rather than a tautology.
"""

from __future__ import annotations

import numpy as np

from cadastre.schema import ImageRecord


def make_manual(label: str, i: int = 0, city: str | None = None) -> ImageRecord:
    return ImageRecord(
        id=f"man-{label}-{i:04d}", path=f"images/man-{label}-{i:04d}.png",
        width=400, height=600, label=label, provenance="manual",
        review_status="accepted", city_keyword=city,
    )


def make_synthetic(label: str, i: int = 0, status: str = "accepted",
                   prompt_id: str | None = None) -> ImageRecord:
    return ImageRecord(
        id=f"syn-{label}-{i:04d}", path=f"images/syn-{label}-{i:04d}.png",
        width=512, height=512, label=label, provenance="synthetic",
        review_status=status, prompt_id=prompt_id or f"{label}-0000",
    )


def manual_pool(counts: dict[str, int]) -> list[ImageRecord]:
    return [make_manual(label, i)
            for label, n in counts.items() for i in range(n)]


def synthetic_pool(counts: dict[str, int],
                   status: str = "accepted") -> list[ImageRecord]:
    return [make_synthetic(label, i, status=status)
            for label, n in counts.items() for i in range(n)]


def oracle_class_metrics(counts: np.ndarray) -> list[dict]:
    """Per-class precision/recall/F1 straight from the definitions."""
    k = counts.shape[0]
    rows = []
    for c in range(k):
        tp = float(counts[c][c])
        fp = float(sum(counts[r][c] for r in range(k) if r != c))
        fn = float(sum(counts[c][p] for p in range(k) if p != c))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        rows.append({
            "precision": precision, "recall": recall, "f1": f1,
            "support": int(tp + fn),
        })
    return rows


def oracle_weighted(rows: list[dict], key: str) -> float:
    total = sum(r["support"] for r in rows)
    if total == 0:
        return 0.0
    return sum(r[key] * r["support"] for r in rows) / total


def oracle_auc(scores, is_positive) -> float:
    """AUC as the pairwise probability P(pos > neg) + 0.5 P(tie)."""
    scores = np.asarray(scores, dtype=np.float64)
    is_positive = np.asarray(is_positive, dtype=bool)
    pos = scores[is_positive]
    neg = scores[~is_positive]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("need both positives and negatives")
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0)
    ties = np.count_nonzero(diff == 0)
    return (wins + 0.5 * ties) / (len(pos) * len(neg))
