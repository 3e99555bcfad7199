#!/usr/bin/env python3
"""Generate a small synthetic batch, review it against the stub oracle,
and show which counters the triage state maintains."""

import tempfile
from pathlib import Path

from cadastre.config import default_keywords
from cadastre.generation import IrrelevanceProfile, StubBackend, generate_batch
from cadastre.prompts import generate_prompts
from cadastre.store import ImageStore
from cadastre.triage import ReviewDecision, TriageState

workdir = Path(tempfile.mkdtemp(prefix="triage-demo-"))
store = ImageStore(workdir / "store")

# The stub backend renders procedural textures and, at a configured rate,
# a texture other than the one the prompt asked for. That rate is the
# knob the triage loop exists to measure.
profile = IrrelevanceProfile(overall=0.24, overrides=(("stucco", 0.45),))
backend = StubBackend(irrelevance=profile)

pool = generate_prompts(default_keywords(["stucco"])[0], n=4, seed=3)
batch = generate_batch(pool, labels=["stucco"], n_per_label=60,
                       backend=backend, store=store, seed=11)
print(f"generated {len(batch.completed)} images into {store.root}")

# Review: accept when the stub actually drew the target texture. A human
# does this through the web UI; the oracle just reads the backend's mind.
state = TriageState(store, pool)
for request, record in batch.completed:
    verdict = ("accepted" if backend.rendered_label(request) == record.label
               else "rejected")
    state.submit_review(ReviewDecision(image_id=record.id, verdict=verdict,
                                       reviewer="demo"))

stats = state.stats()
s = stats.per_label["stucco"]
print(f"stucco: {s.generated} generated = "
      f"{s.accepted} accepted + {s.rejected} rejected + {s.pending} pending")
print(f"measured irrelevance rate: {s.irrelevance_rate:.2f} "
      f"(configured 0.45)")

# Per-prompt batting averages come along for free.
for pid, row in sorted(stats.per_prompt.items()):
    print(f"  {pid}: {row['accepted']}/{row['generated']} accepted "
          f"(batting {row['batting_average']:.2f})")

# Every decision is one JSON line; a fresh state replays it on startup.
log_lines = (store.decisions_path).read_text().strip().splitlines()
replayed = TriageState(ImageStore(workdir / "store"),
                       generate_prompts(default_keywords(["stucco"])[0],
                                        n=4, seed=3))
print(f"\n{len(log_lines)} decisions logged; replayed stats match: "
      f"{replayed.stats().to_dict() == stats.to_dict()}")
