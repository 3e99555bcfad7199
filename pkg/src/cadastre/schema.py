"""Domain types shared by every pipeline stage.

Label schemas, image records, dataset manifests, and experiment plans are
immutable values; construction validates the invariants so downstream code
can trust any instance it receives.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

URC_LABELS: tuple[str, ...] = (
    "brick",
    "stucco",
    "rustication",
    "metal",
    "siding",
    "wood",
    "null",
    "other",
)
HRP_LABELS: tuple[str, ...] = ("stone", "curtain_wall", "concrete_panels")
REDUCIBLE_LABELS: tuple[str, ...] = ("stucco", "siding")

PROVENANCES: tuple[str, ...] = ("manual", "synthetic")
REVIEW_STATUSES: tuple[str, ...] = ("pending", "accepted", "rejected")

# (width, height) enforced per provenance
SYNTHETIC_SIZE: tuple[int, int] = (512, 512)
MANUAL_SIZE: tuple[int, int] = (400, 600)

EXPERIMENT_KINDS: tuple[str, ...] = ("baseline", "augmented", "mixed", "synthetic")


class CadastreError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(CadastreError):
    """A domain invariant was violated."""


class ManifestFormatError(CadastreError):
    """A manifest file could not be parsed."""


@dataclass(frozen=True)
class LabelSchema:
    """An ordered, closed label set; list position is the class id."""

    name: str
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"duplicate labels in schema {self.name!r}")

    @classmethod
    def urc(cls) -> "LabelSchema":
        return cls("urc", URC_LABELS)

    @classmethod
    def hrp(cls) -> "LabelSchema":
        return cls("hrp", HRP_LABELS)

    @classmethod
    def reduced(cls, label_of_interest: str) -> "LabelSchema":
        if label_of_interest not in REDUCIBLE_LABELS:
            raise ValidationError(
                f"label of interest must be one of {REDUCIBLE_LABELS}, "
                f"got {label_of_interest!r}"
            )
        return cls(f"reduced:{label_of_interest}", ("null", "other", label_of_interest))

    @classmethod
    def parse(cls, name: str) -> "LabelSchema":
        if name == "urc":
            return cls.urc()
        if name == "hrp":
            return cls.hrp()
        if name.startswith("reduced:"):
            return cls.reduced(name.split(":", 1)[1])
        raise ManifestFormatError(f"unknown schema name {name!r}")

    @property
    def label_of_interest(self) -> Optional[str]:
        return self.labels[-1] if self.name.startswith("reduced:") else None

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(
                f"unknown label {label!r} for schema {self.name!r}"
            ) from None

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ImageRecord:
    """One image with label, provenance, review state, and prompt lineage."""

    id: str
    path: str
    width: int
    height: int
    label: str
    provenance: str
    review_status: str
    prompt_id: Optional[str] = None
    city_keyword: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("image record needs a non-empty id")
        if self.provenance not in PROVENANCES:
            raise ValidationError(
                f"record {self.id!r}: unknown provenance {self.provenance!r}"
            )
        if self.review_status not in REVIEW_STATUSES:
            raise ValidationError(
                f"record {self.id!r}: unknown review status {self.review_status!r}"
            )
        if self.provenance == "synthetic":
            if not self.prompt_id:
                raise ValidationError(
                    f"record {self.id!r}: synthetic records require a prompt_id"
                )
            if (self.width, self.height) != SYNTHETIC_SIZE:
                raise ValidationError(
                    f"record {self.id!r}: synthetic images are "
                    f"{SYNTHETIC_SIZE[0]}x{SYNTHETIC_SIZE[1]}, "
                    f"got {self.width}x{self.height}"
                )
        else:
            if self.prompt_id:
                raise ValidationError(
                    f"record {self.id!r}: manual records never carry a prompt_id"
                )
            if self.review_status != "accepted":
                raise ValidationError(
                    f"record {self.id!r}: manual records are always accepted"
                )
            if (self.width, self.height) != MANUAL_SIZE:
                raise ValidationError(
                    f"record {self.id!r}: manual images are "
                    f"{MANUAL_SIZE[0]}x{MANUAL_SIZE[1]}, "
                    f"got {self.width}x{self.height}"
                )

    def with_label(self, label: str) -> "ImageRecord":
        return replace(self, label=label)

    def with_status(self, review_status: str) -> "ImageRecord":
        return replace(self, review_status=review_status)


@dataclass(frozen=True)
class DatasetManifest:
    """Train/test splits as ordered record lists under one label schema."""

    schema: LabelSchema
    train: tuple[ImageRecord, ...]
    test: tuple[ImageRecord, ...]
    seed: int
    experiment_tag: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))
        self.validate()

    def validate(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed {self.seed} out of u64 range")
        seen: dict[str, str] = {}
        for split_name, records in (("train", self.train), ("test", self.test)):
            for rec in records:
                if rec.id in seen:
                    raise ValidationError(
                        f"record {rec.id!r} appears in both "
                        f"{seen[rec.id]} and {split_name}"
                    )
                seen[rec.id] = split_name
                if rec.label not in self.schema:
                    raise ValidationError(
                        f"record {rec.id!r}: unknown label {rec.label!r} "
                        f"for schema {self.schema.name!r}"
                    )
                if rec.provenance == "synthetic" and rec.review_status != "accepted":
                    raise ValidationError(
                        f"record {rec.id!r}: synthetic records enter manifests "
                        f"only when accepted (status {rec.review_status!r})"
                    )

    def split(self, name: str) -> tuple[ImageRecord, ...]:
        if name == "train":
            return self.train
        if name == "test":
            return self.test
        raise ValueError(f"unknown split {name!r}")


# Per-class dataset targets tied to the mixed sub-experiments; the synthetic
# experiment is sized to match the mixed stucco one.
MIXED_TARGETS: dict[str, tuple[int, int]] = {
    "stucco": (596, 149),
    "siding": (248, 62),
}
SYNTHETIC_TARGETS: tuple[int, int] = MIXED_TARGETS["stucco"]


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative description of one experiment (plus its sub-variant)."""

    kind: str
    seed: int
    label_of_interest: Optional[str] = None
    test_fraction: float = 0.2
    train_per_class: Optional[int] = None
    test_per_class: Optional[int] = None
    # Alternative reading of the mixed test set: take every manual record
    # instead of balanced per-class counts.
    full_manual_test: bool = False
    schema: LabelSchema = field(init=False)

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValidationError(f"unknown experiment kind {self.kind!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}"
            )
        if self.kind == "synthetic":
            if self.label_of_interest is not None:
                raise ValidationError(
                    "synthetic experiments take no label of interest"
                )
            object.__setattr__(self, "schema", LabelSchema.hrp())
        else:
            if self.label_of_interest is None:
                raise ValidationError(
                    f"{self.kind} experiments require a label of interest"
                )
            object.__setattr__(
                self, "schema", LabelSchema.reduced(self.label_of_interest)
            )

    @property
    def tag(self) -> str:
        if self.kind == "synthetic":
            return "synthetic"
        return f"{self.kind}-{self.label_of_interest}"

    def per_class_targets(self) -> tuple[int, int]:
        """(train, test) per-class sizes for mixed/synthetic experiments."""
        if self.train_per_class is not None and self.test_per_class is not None:
            return self.train_per_class, self.test_per_class
        if self.kind == "synthetic":
            return SYNTHETIC_TARGETS
        defaults = MIXED_TARGETS.get(self.label_of_interest or "")
        if defaults is None:
            raise ValidationError(
                f"no default per-class targets for label {self.label_of_interest!r}"
            )
        train_n, test_n = defaults
        return (
            self.train_per_class if self.train_per_class is not None else train_n,
            self.test_per_class if self.test_per_class is not None else test_n,
        )


def group_by_label(
    records: Iterable[ImageRecord], schema: LabelSchema
) -> dict[str, list[ImageRecord]]:
    """Bucket records by label in schema order; unknown labels raise."""
    buckets: dict[str, list[ImageRecord]] = {label: [] for label in schema.labels}
    for rec in records:
        if rec.label not in buckets:
            raise ValidationError(
                f"record {rec.id!r}: unknown label {rec.label!r} "
                f"for schema {schema.name!r}"
            )
        buckets[rec.label].append(rec)
    return buckets
