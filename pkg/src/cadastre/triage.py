"""Human-review loop over pending synthetic images.

State machine behind the review service: serves the oldest pending image,
records accept/reject decisions exactly once, feeds prompt batting averages,
and reports irrelevance statistics. Decisions append to a JSONL log that is
replayed at startup, so review state survives restarts and the log is the
single source of review truth (prompt accept/reject counters are rebuilt
from it, generation counters from the store registry).
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .prompts import PromptPool, record_outcome
from .schema import CadastreError, ImageRecord
from .store import ImageStore, StoreError

VERDICTS = ("accepted", "rejected")


class TriageError(CadastreError):
    pass


class UnknownImageError(TriageError):
    pass


class ConflictingVerdictError(TriageError):
    pass


@dataclass(frozen=True)
class ReviewDecision:
    image_id: str
    verdict: str
    reviewer: str
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise TriageError(f"unknown verdict {self.verdict!r}")


@dataclass(frozen=True)
class LabelTriageStats:
    generated: int = 0
    accepted: int = 0
    rejected: int = 0
    pending: int = 0

    @property
    def irrelevance_rate(self) -> Optional[float]:
        reviewed = self.accepted + self.rejected
        return self.rejected / reviewed if reviewed else None


@dataclass(frozen=True)
class TriageStats:
    per_label: dict[str, LabelTriageStats]
    per_prompt: dict[str, dict]

    @property
    def generated(self) -> int:
        return sum(s.generated for s in self.per_label.values())

    @property
    def accepted(self) -> int:
        return sum(s.accepted for s in self.per_label.values())

    @property
    def rejected(self) -> int:
        return sum(s.rejected for s in self.per_label.values())

    @property
    def pending(self) -> int:
        return sum(s.pending for s in self.per_label.values())

    @property
    def overall_irrelevance_rate(self) -> Optional[float]:
        reviewed = self.accepted + self.rejected
        return self.rejected / reviewed if reviewed else None

    def to_dict(self) -> dict:
        return {
            "per_label": {
                label: {
                    "generated": s.generated,
                    "accepted": s.accepted,
                    "rejected": s.rejected,
                    "pending": s.pending,
                    "irrelevance_rate": s.irrelevance_rate,
                }
                for label, s in self.per_label.items()
            },
            "overall": {
                "generated": self.generated,
                "accepted": self.accepted,
                "rejected": self.rejected,
                "pending": self.pending,
                "irrelevance_rate": self.overall_irrelevance_rate,
            },
            "per_prompt": self.per_prompt,
        }


class TriageState:
    """Single-writer review state over an image store and a prompt pool."""

    def __init__(self, store: ImageStore, pool: PromptPool):
        self.store = store
        self.pool = pool
        self._lock = threading.RLock()
        self._verdicts: dict[str, str] = {}
        self._rebuild_counters()
        self._replay_log()

    def _rebuild_counters(self) -> None:
        generated: dict[str, int] = {}
        for rec in self.store.records():
            if rec.provenance == "synthetic" and rec.prompt_id:
                generated[rec.prompt_id] = generated.get(rec.prompt_id, 0) + 1
        for prompt in self.pool:
            prompt.generated_count = generated.get(prompt.id, prompt.generated_count)
            prompt.accepted_count = 0
            prompt.rejected_count = 0

    def _replay_log(self) -> None:
        path = self.store.decisions_path
        if not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                self._apply(ReviewDecision(
                    image_id=entry["image_id"], verdict=entry["verdict"],
                    reviewer=entry.get("reviewer", ""),
                    timestamp=entry.get("timestamp", 0.0),
                ), log=False)

    def _apply(self, decision: ReviewDecision, log: bool) -> bool:
        """Apply one decision; returns False for an idempotent repeat."""
        try:
            rec = self.store.get(decision.image_id)
        except StoreError:
            raise UnknownImageError(
                f"unknown image id {decision.image_id!r}"
            ) from None
        if rec.provenance != "synthetic":
            raise TriageError(
                f"image {decision.image_id!r} is manual; only synthetic "
                "images are reviewed"
            )
        prior = self._verdicts.get(decision.image_id)
        if prior is not None:
            if prior == decision.verdict:
                return False
            raise ConflictingVerdictError(
                f"image {decision.image_id!r} already marked {prior}; "
                f"conflicting verdict {decision.verdict!r}"
            )
        self._verdicts[decision.image_id] = decision.verdict
        if rec.prompt_id:
            record_outcome(self.pool, rec.prompt_id, decision.verdict)
        if log:
            with self.store.decisions_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "image_id": decision.image_id,
                    "verdict": decision.verdict,
                    "reviewer": decision.reviewer,
                    "timestamp": decision.timestamp,
                }, sort_keys=True) + "\n")
        return True

    def status_of(self, image_id: str) -> str:
        rec = self.store.get(image_id)
        if rec.provenance != "synthetic":
            return rec.review_status
        return self._verdicts.get(image_id, "pending")

    def current_record(self, image_id: str) -> ImageRecord:
        rec = self.store.get(image_id)
        if rec.provenance != "synthetic":
            return rec
        return rec.with_status(self._verdicts.get(image_id, "pending"))

    def next_pending(self, label: Optional[str] = None) -> Optional[ImageRecord]:
        """Oldest unreviewed synthetic record, optionally filtered by label."""
        with self._lock:
            for rec in self.store.records():
                if rec.provenance != "synthetic":
                    continue
                if label is not None and rec.label != label:
                    continue
                if rec.id not in self._verdicts:
                    return rec
        return None

    def submit_review(self, decision: ReviewDecision) -> TriageStats:
        with self._lock:
            self._apply(decision, log=True)
            return self._stats_locked()

    def stats(self) -> TriageStats:
        with self._lock:
            return self._stats_locked()

    def _stats_locked(self) -> TriageStats:
        counts: dict[str, dict[str, int]] = {}
        for rec in self.store.records():
            if rec.provenance != "synthetic":
                continue
            c = counts.setdefault(
                rec.label, {"generated": 0, "accepted": 0, "rejected": 0, "pending": 0}
            )
            c["generated"] += 1
            verdict = self._verdicts.get(rec.id)
            c[verdict if verdict else "pending"] += 1
        per_label = {
            label: LabelTriageStats(**c) for label, c in sorted(counts.items())
        }
        per_prompt = {
            p.id: {
                "material": p.material,
                "generated": p.generated_count,
                "accepted": p.accepted_count,
                "rejected": p.rejected_count,
                "batting_average": p.batting_average,
                "promoted": p.promoted,
            }
            for p in self.pool
        }
        return TriageStats(per_label=per_label, per_prompt=per_prompt)

    def synthetic_view(self) -> list[ImageRecord]:
        """All synthetic records with their current review status."""
        with self._lock:
            return [
                rec.with_status(self._verdicts.get(rec.id, "pending"))
                for rec in self.store.records()
                if rec.provenance == "synthetic"
            ]

    def accepted_synthetic(self) -> list[ImageRecord]:
        return [rec for rec in self.synthetic_view()
                if rec.review_status == "accepted"]
