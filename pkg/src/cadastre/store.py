"""Flat-file image store shared by generation, triage, and assembly.

Layout under one root directory:

    images/         PNG files, content-addressed names
    records.csv     append-only registry, one line per image ever added
    prompts.csv     prompt pool sidecar
    decisions.jsonl triage decision log (owned by the triage state)

``records.csv`` captures each record as it was created (synthetic records
start pending); current review status comes from replaying the decision log.
"""

from __future__ import annotations

import csv
import threading
from pathlib import Path
from typing import Iterable, Optional

from .schema import CadastreError, ImageRecord

_RECORD_COLUMNS = (
    "id", "label", "provenance", "path", "width", "height",
    "prompt_id", "city", "status",
)


class StoreError(CadastreError):
    pass


class ImageStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.images_dir = self.root / "images"
        self.records_path = self.root / "records.csv"
        self.pool_path = self.root / "prompts.csv"
        self.decisions_path = self.root / "decisions.jsonl"
        self._records: dict[str, ImageRecord] = {}
        self._by_path: dict[str, str] = {}
        self._lock = threading.Lock()
        self.root.mkdir(parents=True, exist_ok=True)
        self.images_dir.mkdir(exist_ok=True)
        if self.records_path.exists():
            self._load()

    def _load(self) -> None:
        with self.records_path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != list(_RECORD_COLUMNS):
                raise StoreError(f"bad records header in {self.records_path}: {header}")
            for row in reader:
                rid, label, provenance, path, width, height, prompt_id, city, status = row
                rec = ImageRecord(
                    id=rid, path=path, width=int(width), height=int(height),
                    label=label, provenance=provenance, review_status=status,
                    prompt_id=prompt_id or None, city_keyword=city or None,
                )
                self._index(rec)

    def _index(self, rec: ImageRecord) -> None:
        self._records[rec.id] = rec
        self._by_path[rec.path] = rec.id

    def add(self, rec: ImageRecord, image_bytes: Optional[bytes] = None) -> None:
        with self._lock:
            if rec.id in self._records:
                raise StoreError(f"duplicate image id {rec.id!r}")
            if image_bytes is not None:
                target = self.root / rec.path
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(image_bytes)
            write_header = not self.records_path.exists()
            with self.records_path.open("a", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                if write_header:
                    writer.writerow(_RECORD_COLUMNS)
                writer.writerow([
                    rec.id, rec.label, rec.provenance, rec.path,
                    rec.width, rec.height, rec.prompt_id or "",
                    rec.city_keyword or "", rec.review_status,
                ])
            self._index(rec)

    def get(self, image_id: str) -> ImageRecord:
        try:
            return self._records[image_id]
        except KeyError:
            raise StoreError(f"unknown image id {image_id!r}") from None

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def by_relpath(self, relpath: str) -> Optional[ImageRecord]:
        rid = self._by_path.get(relpath)
        return self._records[rid] if rid is not None else None

    def records(self) -> Iterable[ImageRecord]:
        """All records in insertion (generation) order."""
        return list(self._records.values())

    def image_path(self, rec: ImageRecord) -> Path:
        return self.root / rec.path

    def read_image(self, rec: ImageRecord) -> bytes:
        path = self.image_path(rec)
        if not path.exists():
            raise StoreError(f"missing image file for record {rec.id!r}: {path}")
        return path.read_bytes()
