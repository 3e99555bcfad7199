"""Prompt pool: template-grammar expansion, sampling, and batting averages.

Keyword sets (material synonyms, an optional time period, cities) expand
through a fixed set of sentence skeletons into a diversified prompt pool.
A few skeletons are deliberately surreal; unedited odd phrasings tend to
produce the most varied images, so they stay in the rotation.

Each prompt tracks how many images it generated and how many survived
review; prompts with a high accept/generate ratio can be promoted, after
which sampling draws only from the promoted subset.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .schema import CadastreError, ValidationError


class PromptError(CadastreError):
    """Prompt pool misuse (unknown id, exhausted grammar, bad counters)."""


# Slot markers: {material} and {city} appear in every skeleton; {style} in
# some; {period_phrase} expands to " from the <period>" or "" at render time.
_SKELETONS: tuple[tuple[str, bool], ...] = (
    # (template, uses_style)
    ("A street-view photo of a {material} building facade in {city}{period_phrase}", False),
    ("Close-up of a {material} wall on a residential building in {city}, {style}", True),
    ("Street-level photograph of an apartment block with {material} cladding in {city}{period_phrase}, {style}", True),
    ("A {style} photo of a commercial building made of {material} in {city}", True),
    ("Weathered {material} facade on a narrow street in {city}{period_phrase}, shot from the sidewalk", False),
    ("The {material} wall of a corner shop in {city} at noon, {style}", True),
    ("Tax photograph of a {material} rowhouse in {city}{period_phrase}, straight-on view", False),
    ("A building in {city} wearing {material} like a winter coat{period_phrase}", False),
    ("A {material} facade rehearsing for the weather of {city}{period_phrase}, {style}", True),
    ("An ordinary {material} building in {city} photographed by a passing tram", False),
    ("Sunlight folding itself across a {material} facade somewhere in {city}, {style}", True),
    ("A {material} townhouse in {city} painted entirely by fog{period_phrase}", False),
    ("The biography of a {material} wall, chapter three: {city}{period_phrase}", False),
    ("A {material} building in {city} auditioning for a postcard, {style}", True),
)

_STYLES: tuple[str, ...] = (
    "photorealistic",
    "overcast daylight",
    "wide-angle lens",
    "golden hour",
    "documentary photography",
    "slightly oversaturated",
)


@dataclass(frozen=True)
class KeywordSet:
    """Keywords that seed the grammar for one material label."""

    material: str
    synonyms: tuple[str, ...] = ()
    period: Optional[str] = None
    cities: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.material:
            raise ValidationError("keyword set needs a material")
        if not self.cities:
            raise ValidationError(f"keyword set for {self.material!r} needs cities")
        object.__setattr__(self, "synonyms", tuple(self.synonyms))
        object.__setattr__(self, "cities", tuple(self.cities))

    @property
    def synonym_pool(self) -> tuple[str, ...]:
        # The material name itself counts as a synonym.
        return (self.material,) + self.synonyms


@dataclass
class PromptRecord:
    id: str
    material: str
    text: str
    slots_used: dict[str, str] = field(default_factory=dict)
    generated_count: int = 0
    accepted_count: int = 0
    rejected_count: int = 0
    promoted: bool = False

    @property
    def batting_average(self) -> Optional[float]:
        """accepted/generated; None (\"no data\") before the first generation."""
        if self.generated_count == 0:
            return None
        return self.accepted_count / self.generated_count

    def check_counters(self) -> None:
        if self.accepted_count < 0 or self.rejected_count < 0 or self.generated_count < 0:
            raise PromptError(f"prompt {self.id!r}: negative counter")
        if self.accepted_count + self.rejected_count > self.generated_count:
            raise PromptError(
                f"prompt {self.id!r}: more outcomes than generations "
                f"({self.accepted_count}+{self.rejected_count} > {self.generated_count})"
            )


class PromptPool:
    """Owns prompt records and the sampling RNG; single logical writer."""

    def __init__(self, rng_seed: int, prompts: Optional[list[PromptRecord]] = None):
        self.rng_seed = rng_seed
        self._rng = random.Random(rng_seed)
        self.prompts: list[PromptRecord] = []
        self._by_id: dict[str, PromptRecord] = {}
        for rec in prompts or []:
            self.add(rec)

    def add(self, rec: PromptRecord) -> None:
        if rec.id in self._by_id:
            raise PromptError(f"duplicate prompt id {rec.id!r}")
        self.prompts.append(rec)
        self._by_id[rec.id] = rec

    def extend(self, other: "PromptPool") -> None:
        for rec in other.prompts:
            self.add(rec)

    def get(self, prompt_id: str) -> PromptRecord:
        try:
            return self._by_id[prompt_id]
        except KeyError:
            raise PromptError(f"unknown prompt id {prompt_id!r}") from None

    def __len__(self) -> int:
        return len(self.prompts)

    def __iter__(self):
        return iter(self.prompts)

    def materials(self) -> list[str]:
        seen: dict[str, None] = {}
        for rec in self.prompts:
            seen.setdefault(rec.material, None)
        return list(seen)


def grammar_capacity(k: KeywordSet) -> int:
    """Number of distinct prompt texts the grammar can produce for ``k``."""
    total = 0
    for _, uses_style in _SKELETONS:
        combos = len(k.synonym_pool) * len(k.cities)
        if uses_style:
            combos *= len(_STYLES)
        total += combos
    return total


def _expand(template: str, uses_style: bool, k: KeywordSet,
            synonym: str, city: str, style: Optional[str]) -> tuple[str, dict[str, str]]:
    period_phrase = f" from the {k.period}" if k.period else ""
    text = template.format(
        material=synonym,
        city=city,
        style=style or "",
        period_phrase=period_phrase,
    )
    slots = {"material": synonym, "city": city}
    if uses_style and style:
        slots["style"] = style
    if k.period:
        slots["period"] = k.period
    return text, slots


def generate_prompts(k: KeywordSet, n: int, seed: int) -> PromptPool:
    """Expand ``k`` into ``n`` distinct prompts, sampled uniformly.

    The full combination space (skeleton x synonym x city x optional style)
    is enumerated in a fixed order and sampled without replacement, so the
    pool is fully determined by (k, n, seed).
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    capacity = grammar_capacity(k)
    if n > capacity:
        raise PromptError(
            f"requested {n} prompts for {k.material!r} but the grammar "
            f"only has {capacity} distinct combinations"
        )
    space: list[tuple[str, bool, str, str, Optional[str]]] = []
    for template, uses_style in _SKELETONS:
        styles: tuple[Optional[str], ...] = _STYLES if uses_style else (None,)
        for synonym in k.synonym_pool:
            for city in k.cities:
                for style in styles:
                    space.append((template, uses_style, synonym, city, style))
    chosen = random.Random(seed).sample(space, n)

    pool = PromptPool(rng_seed=seed)
    for i, (template, uses_style, synonym, city, style) in enumerate(chosen):
        text, slots = _expand(template, uses_style, k, synonym, city, style)
        pool.add(PromptRecord(id=f"{k.material}-{i:04d}", material=k.material,
                              text=text, slots_used=slots))
    return pool


def sample_prompt(pool: PromptPool, material: Optional[str] = None) -> PromptRecord:
    """Draw a prompt uniformly; once any prompt is promoted, draw only from
    the promoted subset (second phase of the filter loop)."""
    eligible = [p for p in pool
                if material is None or p.material == material]
    if not eligible:
        raise PromptError(
            "empty prompt pool" if material is None
            else f"no prompts for material {material!r}"
        )
    promoted = [p for p in eligible if p.promoted]
    candidates = promoted if promoted else eligible
    return candidates[pool._rng.randrange(len(candidates))]


def record_generation(pool: PromptPool, prompt_id: str) -> None:
    pool.get(prompt_id).generated_count += 1


def record_outcome(pool: PromptPool, prompt_id: str, decision: str) -> None:
    """Attribute one review decision to a prompt; counters stay monotone."""
    rec = pool.get(prompt_id)
    if decision not in ("accepted", "rejected"):
        raise ValidationError(f"unknown decision {decision!r}")
    if rec.accepted_count + rec.rejected_count + 1 > rec.generated_count:
        raise PromptError(
            f"prompt {prompt_id!r}: more outcomes than generations recorded"
        )
    if decision == "accepted":
        rec.accepted_count += 1
    else:
        rec.rejected_count += 1
    rec.check_counters()


def promote(pool: PromptPool, min_samples: int = 5, threshold: float = 0.6) -> list[str]:
    """Mark exactly the prompts meeting the batting-average predicate.

    Pure function of the counters: promoted state is recomputed for every
    prompt, so repeated calls yield the same set.
    """
    if min_samples < 1:
        raise ValidationError(f"min_samples must be >= 1, got {min_samples}")
    if not 0 < threshold <= 1:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    promoted_ids: list[str] = []
    for rec in pool:
        avg = rec.batting_average
        rec.promoted = (
            rec.generated_count >= min_samples
            and avg is not None
            and avg >= threshold
        )
        if rec.promoted:
            promoted_ids.append(rec.id)
    return promoted_ids


def save_pool(pool: PromptPool, path: str | Path) -> None:
    """CSV sidecar: ``id,material,text,generated,accepted,promoted``."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "material", "text", "generated", "accepted", "promoted"])
        for rec in pool:
            writer.writerow([
                rec.id, rec.material, rec.text,
                rec.generated_count, rec.accepted_count,
                "1" if rec.promoted else "0",
            ])


def load_pool(path: str | Path, rng_seed: int = 0) -> PromptPool:
    """Load a sidecar CSV.

    Rejected counts and slot values are not part of the sidecar format;
    services that need exact review counters rebuild them by replaying the
    triage decision log on top of the loaded pool.
    """
    pool = PromptPool(rng_seed=rng_seed)
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "material", "text", "generated", "accepted", "promoted"]:
            raise PromptError(f"bad prompt sidecar header in {path}: {header}")
        for row in reader:
            rid, material, text, generated, accepted, promoted = row
            pool.add(PromptRecord(
                id=rid, material=material, text=text,
                generated_count=int(generated), accepted_count=int(accepted),
                promoted=promoted == "1",
            ))
    return pool
