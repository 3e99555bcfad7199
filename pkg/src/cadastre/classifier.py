"""Classifier training and prediction.

Two backends share one interface. The builtin backend is a deterministic
nearest-centroid model over histogram features, strong enough to separate
the procedural textures and fast enough for tests. The external backend
shells out to a worker process and exchanges data exclusively through
files in a bundle directory:

    <bundle>/train_manifest.csv   image_id,path,label
    <bundle>/test_manifest.csv    image_id,path,label
    <bundle>/config.json          {resolution, epochs, seed, schema}

The worker writes <bundle>/predictions.csv and exits 0. Predictions are
one row per test image: image_id, predicted_label, then one score column
per label in schema order. Scores form a distribution; rows whose sum
drifts slightly from 1 are renormalized on ingest, larger drifts are
rejected with the offending row named.
"""

from __future__ import annotations

import csv
import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .features import COLOR_BINS, EDGE_BINS, FeatureCache, extract_features
from .schema import (
    CadastreError,
    DatasetManifest,
    ImageRecord,
    LabelSchema,
    ValidationError,
)

RESOLUTIONS = (192, 384)
SUM_TOLERANCE = 1e-3


class TrainingError(CadastreError):
    pass


class PredictionFormatError(CadastreError):
    pass


class WorkerError(CadastreError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    backend: str = "builtin"
    input_resolution: int = 384
    color_bins: int = COLOR_BINS
    edge_bins: int = EDGE_BINS
    temperature: float = 1.0
    epochs: int = 5
    seed: int = 0
    worker_command: tuple[str, ...] = ()
    worker_timeout: float = 6 * 3600.0

    def __post_init__(self):
        if self.backend not in ("builtin", "external"):
            raise ValidationError(f"unknown classifier backend {self.backend!r}")
        if self.input_resolution not in RESOLUTIONS:
            raise ValidationError(
                f"input resolution must be one of {RESOLUTIONS}, "
                f"got {self.input_resolution}"
            )
        if self.temperature <= 0:
            raise ValidationError("temperature must be positive")
        if self.backend == "external" and not self.worker_command:
            raise ValidationError("external backend requires a worker command")


@dataclass
class PredictionSet:
    """Per-image score distributions over a schema, in a fixed row order."""

    schema: LabelSchema
    image_ids: tuple[str, ...]
    scores: np.ndarray  # (N, K) float64, rows sum to 1

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        n, k = len(self.image_ids), len(self.schema.labels)
        if self.scores.shape != (n, k):
            raise ValidationError(
                f"score matrix shape {self.scores.shape} does not match "
                f"{n} images x {k} labels"
            )
        if len(set(self.image_ids)) != n:
            raise ValidationError("duplicate image ids in prediction set")
        if np.any(self.scores < 0):
            raise ValidationError("scores must be non-negative")
        sums = self.scores.sum(axis=1)
        bad = np.where(np.abs(sums - 1.0) > 1e-6)[0]
        if bad.size:
            raise ValidationError(
                f"scores for image {self.image_ids[bad[0]]!r} sum to "
                f"{sums[bad[0]]:.8f}, expected 1"
            )

    @property
    def predicted_indices(self) -> np.ndarray:
        # np.argmax takes the first maximum, i.e. the lowest class id on ties.
        return np.argmax(self.scores, axis=1)

    @property
    def predicted_labels(self) -> tuple[str, ...]:
        labels = self.schema.labels
        return tuple(labels[i] for i in self.predicted_indices)

    def scores_for(self, label: str) -> np.ndarray:
        return self.scores[:, self.schema.index(label)]


@dataclass
class ModelHandle:
    """A trained model: centroids for the builtin backend, a finished
    prediction set for the external one (the worker trains and predicts
    in a single invocation)."""

    schema: LabelSchema
    config: TrainConfig
    centroids: Optional[np.ndarray] = None
    external_predictions: Optional[PredictionSet] = None
    feature_cache: FeatureCache = field(default_factory=FeatureCache)


def _record_features(record: ImageRecord, image_root: Path, config: TrainConfig,
                     cache: FeatureCache) -> np.ndarray:
    path = image_root / record.path
    if not path.is_file():
        raise TrainingError(f"image file missing for record {record.id!r}: {path}")
    return cache.features_for(path, config.input_resolution,
                              config.color_bins, config.edge_bins)


def train(manifest: DatasetManifest, config: TrainConfig,
          image_root: str | Path,
          bundle_dir: Optional[str | Path] = None) -> ModelHandle:
    image_root = Path(image_root)
    if config.backend == "external":
        if bundle_dir is None:
            raise ValidationError("external backend requires a bundle directory")
        predictions = run_external_worker(manifest, config, image_root,
                                          Path(bundle_dir))
        return ModelHandle(schema=manifest.schema, config=config,
                           external_predictions=predictions)

    cache = FeatureCache()
    per_class: dict[str, list[np.ndarray]] = {
        label: [] for label in manifest.schema.labels
    }
    for record in manifest.train:
        per_class[record.label].append(
            _record_features(record, image_root, config, cache)
        )
    empty = [label for label, rows in per_class.items() if not rows]
    if empty:
        raise TrainingError(
            f"cannot fit centroids, empty train classes: {', '.join(empty)}"
        )
    centroids = np.stack([
        np.mean(per_class[label], axis=0) for label in manifest.schema.labels
    ])
    return ModelHandle(schema=manifest.schema, config=config,
                       centroids=centroids, feature_cache=cache)


def _softmax_scores(features: np.ndarray, centroids: np.ndarray,
                    temperature: float) -> np.ndarray:
    distances = np.linalg.norm(centroids - features, axis=1)
    logits = -distances / temperature
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def predict(handle: ModelHandle, manifest: DatasetManifest,
            image_root: str | Path) -> PredictionSet:
    if handle.schema.labels != manifest.schema.labels:
        raise ValidationError(
            f"model schema {handle.schema.name!r} does not match manifest "
            f"schema {manifest.schema.name!r}"
        )
    test_ids = tuple(record.id for record in manifest.test)

    if handle.external_predictions is not None:
        predictions = handle.external_predictions
        if predictions.image_ids != test_ids:
            raise PredictionFormatError(
                "worker predictions do not cover the test split in order"
            )
        return predictions

    assert handle.centroids is not None
    image_root = Path(image_root)
    rows = np.empty((len(manifest.test), len(handle.schema.labels)))
    for i, record in enumerate(manifest.test):
        features = _record_features(record, image_root, handle.config,
                                    handle.feature_cache)
        rows[i] = _softmax_scores(features, handle.centroids,
                                  handle.config.temperature)
    return PredictionSet(schema=handle.schema, image_ids=test_ids, scores=rows)


def classify_one(handle: ModelHandle, image, *, resolution: Optional[int] = None) -> str:
    """Label a single image with the builtin model; used by review tooling."""
    if handle.centroids is None:
        raise ValidationError("single-image classification needs the builtin backend")
    res = resolution if resolution is not None else handle.config.input_resolution
    features = extract_features(image, res, handle.config.color_bins,
                                handle.config.edge_bins)
    scores = _softmax_scores(features, handle.centroids, handle.config.temperature)
    return handle.schema.labels[int(np.argmax(scores))]


# --- external worker protocol ---


def _write_split_csv(path: Path, records: Sequence[ImageRecord],
                     image_root: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "path", "label"])
        for record in records:
            writer.writerow([record.id, str(image_root / record.path), record.label])


def write_worker_bundle(manifest: DatasetManifest, config: TrainConfig,
                        image_root: str | Path, bundle_dir: str | Path) -> Path:
    bundle = Path(bundle_dir)
    bundle.mkdir(parents=True, exist_ok=True)
    image_root = Path(image_root).resolve()
    _write_split_csv(bundle / "train_manifest.csv", manifest.train, image_root)
    _write_split_csv(bundle / "test_manifest.csv", manifest.test, image_root)
    worker_config = {
        "resolution": config.input_resolution,
        "epochs": config.epochs,
        "seed": config.seed,
        "schema": {
            "name": manifest.schema.name,
            "labels": list(manifest.schema.labels),
        },
    }
    (bundle / "config.json").write_text(
        json.dumps(worker_config, indent=2) + "\n", encoding="utf-8"
    )
    return bundle


def run_external_worker(manifest: DatasetManifest, config: TrainConfig,
                        image_root: str | Path,
                        bundle_dir: str | Path) -> PredictionSet:
    bundle = write_worker_bundle(manifest, config, image_root, bundle_dir)
    command = list(config.worker_command) + [str(bundle)]
    try:
        proc = subprocess.run(
            command, cwd=bundle, timeout=config.worker_timeout,
            capture_output=True, text=True,
        )
    except subprocess.TimeoutExpired as exc:
        raise WorkerError(
            f"worker timed out after {config.worker_timeout:.0f}s"
        ) from exc
    except OSError as exc:
        raise WorkerError(f"could not launch worker: {exc}") from exc
    if proc.returncode != 0:
        tail = (proc.stderr or "").strip().splitlines()[-5:]
        raise WorkerError(
            f"worker exited with status {proc.returncode}: "
            + (" | ".join(tail) if tail else "no stderr")
        )
    predictions_path = bundle / "predictions.csv"
    if not predictions_path.is_file():
        raise WorkerError("worker exited 0 but wrote no predictions.csv")
    expected = tuple(record.id for record in manifest.test)
    return ingest_external_predictions(predictions_path, manifest.schema,
                                       expected_ids=expected)


def ingest_external_predictions(path: str | Path, schema: LabelSchema,
                                expected_ids: Optional[Sequence[str]] = None,
                                sum_tolerance: float = SUM_TOLERANCE) -> PredictionSet:
    """Parse and validate a worker predictions file.

    Score rows may drift from summing to exactly 1 by up to sum_tolerance
    (absolute); such rows are renormalized. Larger drift, negative scores,
    or a predicted label that is not the argmax reject the file with the
    offending row number.
    """
    path = Path(path)
    expected_header = ["image_id", "predicted_label"] + [
        f"score_{label}" for label in schema.labels
    ]
    ids: list[str] = []
    rows: list[np.ndarray] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PredictionFormatError(f"{path.name}: empty file") from None
        if header != expected_header:
            raise PredictionFormatError(
                f"{path.name} line 1: header {header!r} does not match "
                f"schema {schema.name!r} (expected {expected_header!r})"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise PredictionFormatError(
                    f"{path.name} line {line_no}: expected "
                    f"{len(expected_header)} fields, got {len(row)}"
                )
            image_id, predicted = row[0], row[1]
            try:
                scores = np.array([float(v) for v in row[2:]], dtype=np.float64)
            except ValueError as exc:
                raise PredictionFormatError(
                    f"{path.name} line {line_no}: non-numeric score ({exc})"
                ) from None
            if np.any(scores < 0):
                raise PredictionFormatError(
                    f"{path.name} line {line_no}: negative score"
                )
            total = scores.sum()
            if abs(total - 1.0) > sum_tolerance:
                raise PredictionFormatError(
                    f"{path.name} line {line_no}: scores sum to {total:.6f}, "
                    f"outside tolerance {sum_tolerance}"
                )
            if total == 0.0:
                raise PredictionFormatError(
                    f"{path.name} line {line_no}: all-zero score row"
                )
            scores = scores / total
            argmax_label = schema.labels[int(np.argmax(scores))]
            if predicted != argmax_label:
                raise PredictionFormatError(
                    f"{path.name} line {line_no}: predicted_label "
                    f"{predicted!r} is not the argmax ({argmax_label!r})"
                )
            ids.append(image_id)
            rows.append(scores)
    if expected_ids is not None and tuple(ids) != tuple(expected_ids):
        missing = sorted(set(expected_ids) - set(ids))
        extra = sorted(set(ids) - set(expected_ids))
        detail = []
        if missing:
            detail.append(f"missing {missing[:3]}")
        if extra:
            detail.append(f"unexpected {extra[:3]}")
        raise PredictionFormatError(
            f"{path.name}: rows do not match the test split in order"
            + (f" ({'; '.join(detail)})" if detail else "")
        )
    if not ids:
        raise PredictionFormatError(f"{path.name}: no prediction rows")
    return PredictionSet(schema=schema, image_ids=tuple(ids),
                         scores=np.stack(rows))


def write_predictions(predictions: PredictionSet, path: str | Path) -> None:
    path = Path(path)
    labels = predictions.schema.labels
    predicted = predictions.predicted_labels
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "predicted_label"]
                        + [f"score_{label}" for label in labels])
        for i, image_id in enumerate(predictions.image_ids):
            writer.writerow([image_id, predicted[i]]
                            + [repr(float(v)) for v in predictions.scores[i]])
