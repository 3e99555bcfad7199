"""Writes evaluation artifacts: metrics.json, per-experiment confusion and
ROC tables, and a dependency-free SVG chart of the weighted metrics.

Identical evaluations produce byte-identical files: floats are serialized
with repr, dict insertion order is fixed by schema order, and the SVG is
assembled from formatted strings rather than a plotting library.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from .evaluation import ExperimentEvaluation

_BAR_SERIES = ("f1", "precision", "recall")
_BAR_COLORS = {"f1": "#2563eb", "precision": "#059669", "recall": "#d97706"}


def _metrics_payload(evaluation: ExperimentEvaluation) -> dict:
    payload = evaluation.metrics.to_dict()
    payload["experiment"] = evaluation.tag
    payload["total_images"] = evaluation.cm.total
    percent, zero_rows = evaluation.cm.row_normalized()
    payload["confusion_zero_rows"] = list(zero_rows)
    payload["auc_summary"] = {
        "mode": evaluation.roc_summary.mode,
        "auc": evaluation.roc_summary.auc,
        "per_class_auc": dict(evaluation.roc_summary.per_class_auc),
    }
    # Key order: experiment first for readability.
    ordered = {"experiment": payload.pop("experiment")}
    ordered.update(payload)
    return ordered


def write_metrics_json(evaluations: Sequence[ExperimentEvaluation],
                       path: Path) -> None:
    body = {"experiments": [_metrics_payload(e) for e in evaluations]}
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")


def write_confusion_csv(evaluation: ExperimentEvaluation, path: Path) -> None:
    labels = evaluation.cm.schema.labels
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true_label"] + [f"pred_{label}" for label in labels])
        for i, label in enumerate(labels):
            writer.writerow([label] + [int(v) for v in evaluation.cm.counts[i]])


def write_roc_csv(evaluation: ExperimentEvaluation, path: Path) -> None:
    """Experiment summary curve. Grid-averaged curves have no single
    threshold per point, so that column is left empty."""
    summary = evaluation.roc_summary
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for fpr, tpr in zip(summary.grid_fpr, summary.tpr):
            writer.writerow(["", repr(float(fpr)), repr(float(tpr))])


def _svg_bar_chart(evaluations: Sequence[ExperimentEvaluation]) -> str:
    margin_left, margin_top = 60, 40
    plot_h = 220
    group_w = 40 * len(_BAR_SERIES) + 30
    plot_w = max(group_w * len(evaluations), 200)
    width = margin_left + plot_w + 30
    height = margin_top + plot_h + 70

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    parts.append(
        f'<text x="{margin_left}" y="20" font-family="sans-serif" '
        f'font-size="14">Weighted metrics by experiment</text>'
    )
    # Axis and horizontal gridlines every 0.2.
    for i in range(6):
        value = i / 5
        y = margin_top + plot_h - value * plot_h
        parts.append(
            f'<line x1="{margin_left}" y1="{y:.1f}" '
            f'x2="{margin_left + plot_w}" y2="{y:.1f}" '
            f'stroke="#d4d4d8" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin_left - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{value:.1f}</text>'
        )

    for gi, evaluation in enumerate(evaluations):
        x0 = margin_left + gi * group_w + 15
        values = {
            "f1": evaluation.metrics.weighted_f1,
            "precision": evaluation.metrics.weighted_precision,
            "recall": evaluation.metrics.weighted_recall,
        }
        for si, series in enumerate(_BAR_SERIES):
            value = max(0.0, min(1.0, values[series]))
            bar_h = value * plot_h
            x = x0 + si * 40
            y = margin_top + plot_h - bar_h
            parts.append(
                f'<rect x="{x}" y="{y:.1f}" width="32" height="{bar_h:.1f}" '
                f'fill="{_BAR_COLORS[series]}"/>'
            )
            parts.append(
                f'<text x="{x + 16}" y="{y - 4:.1f}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{values[series]:.2f}</text>'
            )
        label_x = x0 + (40 * len(_BAR_SERIES) - 8) / 2
        parts.append(
            f'<text x="{label_x:.1f}" y="{margin_top + plot_h + 18}" '
            f'text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{evaluation.tag}</text>'
        )

    legend_y = margin_top + plot_h + 42
    for si, series in enumerate(_BAR_SERIES):
        x = margin_left + si * 110
        parts.append(
            f'<rect x="{x}" y="{legend_y - 10}" width="12" height="12" '
            f'fill="{_BAR_COLORS[series]}"/>'
        )
        parts.append(
            f'<text x="{x + 18}" y="{legend_y}" font-family="sans-serif" '
            f'font-size="11">weighted {series}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(evaluations: Sequence[ExperimentEvaluation],
                out_dir: str | Path) -> list[Path]:
    """Write all report files for a set of experiments; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    metrics_path = out / "metrics.json"
    write_metrics_json(evaluations, metrics_path)
    written.append(metrics_path)

    for evaluation in evaluations:
        confusion_path = out / f"confusion_{evaluation.tag}.csv"
        write_confusion_csv(evaluation, confusion_path)
        written.append(confusion_path)
        roc_path = out / f"roc_{evaluation.tag}.csv"
        write_roc_csv(evaluation, roc_path)
        written.append(roc_path)

    svg_path = out / "weighted_metrics.svg"
    svg_path.write_text(_svg_bar_chart(evaluations), encoding="utf-8")
    written.append(svg_path)
    return written
