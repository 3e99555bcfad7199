#!/usr/bin/env python3
"""Run a miniature end-to-end study and tour the artifacts it leaves
behind. Everything lands in a throwaway directory."""

import json
import tempfile
from pathlib import Path

from cadastre.config import config_from_dict
from cadastre.pipeline import run_pipeline

out = Path(tempfile.mkdtemp(prefix="study-demo-")) / "out"

# A study is one dict (normally a TOML file): corpus sizes, review
# behavior, and the experiments to assemble. This one is deliberately
# tiny so it finishes in seconds.
config = config_from_dict({
    "pipeline": {"seed": 404, "out_dir": str(out)},
    "corpus": {
        "manual_per_label": 10,
        "synthetic_counts": {"stucco": 90, "siding": 30, "null": 65,
                             "other": 20, "stone": 25, "curtain_wall": 25,
                             "concrete_panels": 25},
    },
    "classifier": {"resolution": 192},
    "experiments": [
        {"kind": "baseline", "label_of_interest": "stucco"},
        {"kind": "augmented", "label_of_interest": "stucco"},
        {"kind": "mixed", "label_of_interest": "stucco",
         "train_per_class": 8, "test_per_class": 3},
    ],
})

result = run_pipeline(config)

stats = result.triage.stats()
print(f"corpus: {len(result.store)} images, "
      f"{stats.accepted} synthetic accepted, {stats.rejected} rejected")

for artifact in result.experiments:
    ev = artifact.evaluation
    frac = artifact.report.overall_synthetic_fraction
    print(f"{artifact.plan.tag}: weighted F1 {ev.metrics.weighted_f1:.3f}, "
          f"AUC {ev.roc_summary.auc:.3f}, "
          f"train synthetic fraction {frac:.2f}")

# Per-experiment artifacts: the manifest is the dataset, the assembly
# report says where each class came from, predictions.csv is what any
# external worker would have produced.
exp_dir = out / "experiments" / "mixed-stucco"
print(f"\n{exp_dir.name}/ holds: "
      f"{sorted(p.name for p in exp_dir.iterdir() if p.is_file())}")
report = json.loads((exp_dir / "assembly_report.json").read_text())
for label, splits in report["per_class"].items():
    print(f"  {label}: train {splits['train']}, test {splits['test']}")

# The report directory aggregates everything the study produced.
report_dir = out / "report"
print(f"\nreport/ holds: {sorted(p.name for p in report_dir.iterdir())}")
metrics = json.loads((report_dir / "metrics.json").read_text())
print("experiments in metrics.json: "
      f"{[e['experiment'] for e in metrics['experiments']]}")
