#!/usr/bin/env python3
"""Walk through the prompt grammar: keyword sets in, prompt pool out,
then a few review outcomes and a promotion pass."""

from cadastre.config import default_keywords
from cadastre.prompts import (
    generate_prompts,
    grammar_capacity,
    promote,
    record_generation,
    record_outcome,
)

# Every generated material starts from a keyword set: the material name,
# a couple of synonyms, an optional period, and the cities the grammar
# cycles through.
keywords = default_keywords(["stucco", "siding"])
for ks in keywords:
    print(f"{ks.material}: synonyms={ks.synonyms} period={ks.period!r}")
    print(f"  cities={ks.cities} (capacity {grammar_capacity(ks)} prompts)")

# The grammar is deterministic: same keywords + seed, same pool.
pool = generate_prompts(keywords[0], n=6, seed=7)
pool.extend(generate_prompts(keywords[1], n=6, seed=7))
prompts = list(pool)
print(f"\npool of {len(pool)} prompts:")
for p in prompts[:6]:
    print(f"  [{p.id}] {p.text}")

# Review outcomes accumulate on the prompt that produced each image.
# Here the first prompt goes 3 for 4 and the second goes 0 for 2.
first, second = prompts[0], prompts[1]
for p, outcomes in ((first, "aaar"), (second, "rr")):
    for o in outcomes:
        record_generation(pool, p.id)
        record_outcome(pool, p.id, "accepted" if o == "a" else "rejected")

print(f"\n{first.id}: batting average {first.batting_average:.2f}")
print(f"{second.id}: batting average {second.batting_average:.2f}")

# Promotion keeps prompts that cleared the threshold with enough samples
# (and clears the badge on any that no longer do).
promoted = promote(pool, min_samples=3, threshold=0.6)
print(f"promoted at >=0.6 over >=3 samples: {promoted}")
