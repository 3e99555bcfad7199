"""Manifest persistence and per-class accounting.

Format: UTF-8 text, one header line ``schema=<name>;seed=<u64>;tag=<string>``
followed by one CSV record per line
(``id,split,label,provenance,path,width,height,prompt_id,city,status``).
Saving is deterministic, so identical manifests produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .schema import (
    DatasetManifest,
    ImageRecord,
    LabelSchema,
    ManifestFormatError,
    ValidationError,
)

_COLUMNS = (
    "id",
    "split",
    "label",
    "provenance",
    "path",
    "width",
    "height",
    "prompt_id",
    "city",
    "status",
)


def manifest_to_text(m: DatasetManifest) -> str:
    m.validate()
    buf = io.StringIO()
    buf.write(f"schema={m.schema.name};seed={m.seed};tag={m.experiment_tag}\n")
    writer = csv.writer(buf, lineterminator="\n")
    for split_name in ("train", "test"):
        for rec in m.split(split_name):
            writer.writerow(
                [
                    rec.id,
                    split_name,
                    rec.label,
                    rec.provenance,
                    rec.path,
                    rec.width,
                    rec.height,
                    rec.prompt_id or "",
                    rec.city_keyword or "",
                    rec.review_status,
                ]
            )
    return buf.getvalue()


def save_manifest(m: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(manifest_to_text(m), encoding="utf-8")


def manifest_from_text(text: str) -> DatasetManifest:
    lines = text.splitlines()
    if not lines:
        raise ManifestFormatError("empty manifest file")
    header = lines[0]
    try:
        schema_part, seed_part, tag_part = header.split(";", 2)
        schema_name = _header_value(schema_part, "schema")
        seed = int(_header_value(seed_part, "seed"))
        tag = _header_value(tag_part, "tag")
    except (ValueError, ManifestFormatError) as exc:
        raise ManifestFormatError(
            f"line 1: bad manifest header {header!r}: {exc}"
        ) from None
    schema = LabelSchema.parse(schema_name)

    train: list[ImageRecord] = []
    test: list[ImageRecord] = []
    reader = csv.reader(lines[1:])
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(_COLUMNS):
            raise ManifestFormatError(
                f"line {lineno}: expected {len(_COLUMNS)} fields, got {len(row)}"
            )
        (rid, split, label, provenance, path, width, height,
         prompt_id, city, status) = row
        try:
            rec = ImageRecord(
                id=rid,
                path=path,
                width=int(width),
                height=int(height),
                label=label,
                provenance=provenance,
                review_status=status,
                prompt_id=prompt_id or None,
                city_keyword=city or None,
            )
        except ValueError:
            raise ManifestFormatError(
                f"line {lineno}: non-integer width/height for record {rid!r}"
            ) from None
        if split == "train":
            train.append(rec)
        elif split == "test":
            test.append(rec)
        else:
            raise ManifestFormatError(
                f"line {lineno}: unknown split {split!r} for record {rid!r}"
            )
    # DatasetManifest construction runs the full validation (leakage, labels).
    try:
        return DatasetManifest(
            schema=schema, train=tuple(train), test=tuple(test),
            seed=seed, experiment_tag=tag,
        )
    except ValidationError as exc:
        raise ManifestFormatError(str(exc)) from None


def load_manifest(path: str | Path) -> DatasetManifest:
    return manifest_from_text(Path(path).read_text(encoding="utf-8"))


def class_counts(m: DatasetManifest, split: str) -> dict[str, int]:
    """Per-label record counts for one split; absent labels report 0."""
    counts = {label: 0 for label in m.schema.labels}
    for rec in m.split(split):
        counts[rec.label] += 1
    return counts


def _header_value(part: str, key: str) -> str:
    prefix = f"{key}="
    if not part.startswith(prefix):
        raise ManifestFormatError(f"expected {prefix}..., got {part!r}")
    return part[len(prefix):]
