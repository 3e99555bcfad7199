"""Bundle parsing and validation.

The bundle is the entire contract with the pipeline, so every problem is
reported against the file and line it came from; the caller maps the
exit_code on BundleError straight to the process exit status.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

RESOLUTIONS = (192, 384)
MANIFEST_HEADER = ("image_id", "path", "label")

CONFIG_EXIT = 2
MANIFEST_EXIT = 3


class BundleError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass(frozen=True)
class ManifestRow:
    image_id: str
    path: Path
    label: str


@dataclass(frozen=True)
class Bundle:
    root: Path
    resolution: int
    epochs: int
    seed: int
    schema_name: str
    labels: tuple[str, ...]
    learning_rate: float
    train: tuple[ManifestRow, ...]
    test: tuple[ManifestRow, ...]

    def label_index(self, label: str) -> int:
        return self.labels.index(label)


def _load_config(root: Path) -> dict:
    path = root / "config.json"
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise BundleError(f"missing {path.name}", CONFIG_EXIT) from None
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path.name}: invalid JSON ({exc})",
                          CONFIG_EXIT) from None

    for key in ("resolution", "epochs", "seed", "schema"):
        if key not in raw:
            raise BundleError(f"{path.name}: missing key {key!r}", CONFIG_EXIT)
    if raw["resolution"] not in RESOLUTIONS:
        raise BundleError(
            f"{path.name}: resolution must be one of {RESOLUTIONS}, "
            f"got {raw['resolution']!r}", CONFIG_EXIT)
    for key in ("epochs", "seed"):
        if not isinstance(raw[key], int) or isinstance(raw[key], bool):
            raise BundleError(f"{path.name}: {key} must be an integer",
                              CONFIG_EXIT)
    if raw["epochs"] < 1:
        raise BundleError(f"{path.name}: epochs must be >= 1", CONFIG_EXIT)
    schema = raw["schema"]
    labels = schema.get("labels") if isinstance(schema, dict) else None
    if (not isinstance(labels, list) or len(labels) < 2
            or len(set(labels)) != len(labels)
            or not all(isinstance(l, str) and l for l in labels)):
        raise BundleError(
            f"{path.name}: schema.labels must be >= 2 unique non-empty "
            "strings", CONFIG_EXIT)
    lr = raw.get("learning_rate", 0.05)
    if not isinstance(lr, (int, float)) or isinstance(lr, bool) or lr <= 0:
        raise BundleError(f"{path.name}: learning_rate must be positive",
                          CONFIG_EXIT)
    return {
        "resolution": raw["resolution"],
        "epochs": raw["epochs"],
        "seed": raw["seed"],
        "schema_name": str(schema.get("name", "")),
        "labels": tuple(labels),
        "learning_rate": float(lr),
    }


def _load_manifest(root: Path, name: str,
                   labels: tuple[str, ...]) -> tuple[ManifestRow, ...]:
    path = root / name
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise BundleError(f"missing {name}", MANIFEST_EXIT) from None
    if not lines or tuple(next(csv.reader([lines[0]]))) != MANIFEST_HEADER:
        raise BundleError(
            f"{name} line 1: header must be "
            f"{','.join(MANIFEST_HEADER)}", MANIFEST_EXIT)

    rows: list[ManifestRow] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = next(csv.reader([line]))
        if len(fields) != 3 or not all(fields):
            raise BundleError(
                f"{name} line {lineno}: expected 3 non-empty fields, "
                f"got {len(fields)}", MANIFEST_EXIT)
        image_id, raw_path, label = fields
        if image_id in seen:
            raise BundleError(
                f"{name} line {lineno}: duplicate image id {image_id!r}",
                MANIFEST_EXIT)
        seen.add(image_id)
        if label not in labels:
            raise BundleError(
                f"{name} line {lineno}: unknown label {label!r} "
                f"(schema has {', '.join(labels)})", MANIFEST_EXIT)
        rows.append(ManifestRow(image_id=image_id, path=Path(raw_path),
                                label=label))
    if not rows:
        raise BundleError(f"{name}: no data rows", MANIFEST_EXIT)
    return tuple(rows)


def load_bundle(root: str | Path) -> Bundle:
    root = Path(root)
    if not root.is_dir():
        raise BundleError(f"bundle directory not found: {root}", CONFIG_EXIT)
    config = _load_config(root)
    train = _load_manifest(root, "train_manifest.csv", config["labels"])
    test = _load_manifest(root, "test_manifest.csv", config["labels"])
    return Bundle(root=root, train=train, test=test, **config)
