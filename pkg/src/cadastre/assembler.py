"""Builds the four experiment datasets from manual and synthetic pools.

Baseline: stratified split of the manual pool, no synthetic anywhere.
Augmented: manual split, then every train class topped up with accepted
synthetic images to the largest manual train class count.
Mixed: synthetic-only train, manual-only test, equal per-class counts.
Synthetic: train and test both synthetic, sized to the mixed-stucco targets.

All operations are pure functions of (pools, plan): selection runs on a
seeded RNG, so identical inputs produce byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .schema import (
    CadastreError,
    DatasetManifest,
    ExperimentPlan,
    ImageRecord,
    URC_LABELS,
    ValidationError,
    group_by_label,
)


class AssemblyError(CadastreError):
    pass


class InsufficientPoolError(AssemblyError):
    def __init__(self, experiment: str, shortfalls: dict[str, int]):
        self.shortfalls = shortfalls
        detail = ", ".join(f"{label} short {n}" for label, n in shortfalls.items())
        super().__init__(f"{experiment}: insufficient images ({detail})")


@dataclass(frozen=True)
class SplitTally:
    manual: int
    synthetic: int

    @property
    def total(self) -> int:
        return self.manual + self.synthetic

    @property
    def synthetic_fraction(self) -> Optional[float]:
        return self.synthetic / self.total if self.total else None


@dataclass(frozen=True)
class AssemblyReport:
    manifest: DatasetManifest
    per_class: dict[str, dict[str, SplitTally]]  # label -> split -> tally

    def synthetic_fraction(self, label: str) -> Optional[float]:
        """Synthetic share of the training split for one class."""
        return self.per_class[label]["train"].synthetic_fraction

    @property
    def overall_synthetic_fraction(self) -> Optional[float]:
        manual = sum(t["train"].manual for t in self.per_class.values())
        synthetic = sum(t["train"].synthetic for t in self.per_class.values())
        total = manual + synthetic
        return synthetic / total if total else None

    def to_dict(self) -> dict:
        return {
            "experiment": self.manifest.experiment_tag,
            "schema": self.manifest.schema.name,
            "seed": self.manifest.seed,
            "per_class": {
                label: {
                    split: {
                        "manual": tally.manual,
                        "synthetic": tally.synthetic,
                        "synthetic_fraction": tally.synthetic_fraction,
                    }
                    for split, tally in splits.items()
                }
                for label, splits in self.per_class.items()
            },
            "overall_synthetic_fraction": self.overall_synthetic_fraction,
        }


def reduce_labels(records: Sequence[ImageRecord],
                  label_of_interest: str) -> list[ImageRecord]:
    """Collapse the 8-label set to {null, other, X}; record count preserved."""
    if label_of_interest not in ("stucco", "siding"):
        raise ValidationError(
            f"label of interest must be stucco or siding, got {label_of_interest!r}"
        )
    out: list[ImageRecord] = []
    for rec in records:
        if rec.label not in URC_LABELS:
            raise ValidationError(
                f"record {rec.id!r}: label {rec.label!r} is not an URC label"
            )
        if rec.label in ("null", label_of_interest):
            out.append(rec)
        else:
            out.append(rec.with_label("other"))
    return out


def _tally(report_classes: dict, label: str, split: str,
           records: Sequence[ImageRecord]) -> None:
    manual = sum(1 for r in records if r.provenance == "manual")
    report_classes.setdefault(label, {})[split] = SplitTally(
        manual=manual, synthetic=len(records) - manual
    )


def _require_manual(records: Sequence[ImageRecord], context: str) -> None:
    for rec in records:
        if rec.provenance != "manual":
            raise AssemblyError(
                f"{context}: record {rec.id!r} is not manual"
            )


def _require_accepted_synthetic(records: Sequence[ImageRecord], context: str) -> None:
    for rec in records:
        if rec.provenance != "synthetic":
            raise AssemblyError(f"{context}: record {rec.id!r} is not synthetic")
        if rec.review_status != "accepted":
            raise AssemblyError(
                f"{context}: record {rec.id!r} has not passed review"
            )


def _stratified_split(pool: Sequence[ImageRecord], plan: ExperimentPlan,
                      rng: random.Random) -> tuple[dict[str, list[ImageRecord]],
                                                   dict[str, list[ImageRecord]]]:
    """Seeded per-class shuffle, test fraction rounded to the nearest image."""
    buckets = group_by_label(pool, plan.schema)
    train: dict[str, list[ImageRecord]] = {}
    test: dict[str, list[ImageRecord]] = {}
    for label in plan.schema.labels:
        records = buckets[label]
        if not records:
            raise AssemblyError(f"{plan.tag}: class {label!r} is empty in the pool")
        shuffled = rng.sample(records, len(records))
        n_test = int(len(records) * plan.test_fraction + 0.5)
        test[label] = shuffled[:n_test]
        train[label] = shuffled[n_test:]
    return train, test


def _build_manifest(plan: ExperimentPlan,
                    train: dict[str, list[ImageRecord]],
                    test: dict[str, list[ImageRecord]]) -> AssemblyReport:
    per_class: dict[str, dict[str, SplitTally]] = {}
    train_records: list[ImageRecord] = []
    test_records: list[ImageRecord] = []
    for label in plan.schema.labels:
        _tally(per_class, label, "train", train.get(label, []))
        _tally(per_class, label, "test", test.get(label, []))
        train_records.extend(train.get(label, []))
        test_records.extend(test.get(label, []))
    manifest = DatasetManifest(
        schema=plan.schema, train=tuple(train_records), test=tuple(test_records),
        seed=plan.seed, experiment_tag=plan.tag,
    )
    return AssemblyReport(manifest=manifest, per_class=per_class)


def assemble_baseline(manual_pool: Sequence[ImageRecord],
                      plan: ExperimentPlan) -> AssemblyReport:
    if plan.kind != "baseline":
        raise ValidationError(f"expected a baseline plan, got {plan.kind!r}")
    _require_manual(manual_pool, plan.tag)
    rng = random.Random(plan.seed)
    train, test = _stratified_split(manual_pool, plan, rng)
    return _build_manifest(plan, train, test)


def assemble_augmented(manual_pool: Sequence[ImageRecord],
                       synthetic_pool: Sequence[ImageRecord],
                       plan: ExperimentPlan) -> AssemblyReport:
    """Balance every train class up to the largest manual train class."""
    if plan.kind != "augmented":
        raise ValidationError(f"expected an augmented plan, got {plan.kind!r}")
    _require_manual(manual_pool, plan.tag)
    _require_accepted_synthetic(synthetic_pool, plan.tag)
    rng = random.Random(plan.seed)
    train, test = _stratified_split(manual_pool, plan, rng)
    synth_buckets = group_by_label(synthetic_pool, plan.schema)

    target = max(len(records) for records in train.values())
    shortfalls: dict[str, int] = {}
    topups: dict[str, list[ImageRecord]] = {}
    for label in plan.schema.labels:
        need = target - len(train[label])
        available = synth_buckets[label]
        if need > len(available):
            shortfalls[label] = need - len(available)
        elif need > 0:
            topups[label] = rng.sample(available, need)
    if shortfalls:
        raise InsufficientPoolError(plan.tag, shortfalls)
    for label, extra in topups.items():
        train[label] = train[label] + extra
    return _build_manifest(plan, train, test)


def assemble_mixed(manual_pool: Sequence[ImageRecord],
                   synthetic_pool: Sequence[ImageRecord],
                   plan: ExperimentPlan) -> AssemblyReport:
    """Synthetic-only train, manual-only test."""
    if plan.kind != "mixed":
        raise ValidationError(f"expected a mixed plan, got {plan.kind!r}")
    _require_manual(manual_pool, plan.tag)
    _require_accepted_synthetic(synthetic_pool, plan.tag)
    train_n, test_n = plan.per_class_targets()
    rng = random.Random(plan.seed)
    synth_buckets = group_by_label(synthetic_pool, plan.schema)
    manual_buckets = group_by_label(manual_pool, plan.schema)

    shortfalls: dict[str, int] = {}
    for label in plan.schema.labels:
        if len(synth_buckets[label]) < train_n:
            shortfalls[f"{label} (synthetic)"] = train_n - len(synth_buckets[label])
        if not plan.full_manual_test and len(manual_buckets[label]) < test_n:
            shortfalls[f"{label} (manual)"] = test_n - len(manual_buckets[label])
    if shortfalls:
        raise InsufficientPoolError(plan.tag, shortfalls)

    train = {label: rng.sample(synth_buckets[label], train_n)
             for label in plan.schema.labels}
    if plan.full_manual_test:
        test = {label: list(manual_buckets[label]) for label in plan.schema.labels}
    else:
        test = {label: rng.sample(manual_buckets[label], test_n)
                for label in plan.schema.labels}
    return _build_manifest(plan, train, test)


def assemble_synthetic(synthetic_pool: Sequence[ImageRecord],
                       plan: ExperimentPlan) -> AssemblyReport:
    """Train and test both synthetic, sized to the mixed-stucco targets."""
    if plan.kind != "synthetic":
        raise ValidationError(f"expected a synthetic plan, got {plan.kind!r}")
    _require_accepted_synthetic(synthetic_pool, plan.tag)
    train_n, test_n = plan.per_class_targets()
    rng = random.Random(plan.seed)
    buckets = group_by_label(synthetic_pool, plan.schema)

    shortfalls = {
        label: train_n + test_n - len(buckets[label])
        for label in plan.schema.labels
        if len(buckets[label]) < train_n + test_n
    }
    if shortfalls:
        raise InsufficientPoolError(plan.tag, shortfalls)

    train: dict[str, list[ImageRecord]] = {}
    test: dict[str, list[ImageRecord]] = {}
    for label in plan.schema.labels:
        drawn = rng.sample(buckets[label], train_n + test_n)
        train[label] = drawn[:train_n]
        test[label] = drawn[train_n:]
    return _build_manifest(plan, train, test)


def pool_digest(records: Sequence[ImageRecord]) -> str:
    hasher = hashlib.sha256()
    for rid in sorted(rec.id for rec in records):
        hasher.update(rid.encode())
        hasher.update(b"\n")
    return hasher.hexdigest()


def write_assembly_report(report: AssemblyReport, path: str | Path,
                          input_digests: Optional[dict[str, str]] = None) -> None:
    payload = report.to_dict()
    if input_digests:
        payload["input_pool_digests"] = input_digests
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
