#!/usr/bin/env python3
"""Score a tiny prediction set by hand: confusion matrix, per-class and
weighted metrics, then a one-vs-rest ROC sweep."""

import numpy as np

from cadastre.evaluation import (
    class_metrics,
    class_roc,
    confusion_from_labels,
    experiment_roc_summary,
    roc_curve,
)
from cadastre.classifier import PredictionSet
from cadastre.schema import LabelSchema

schema = LabelSchema.reduced("stucco")  # null / other / stucco

truth = ["stucco"] * 4 + ["other"] * 3 + ["null"] * 3
preds = ["stucco", "stucco", "stucco", "other",   # 3 of 4 stucco right
         "other", "other", "stucco",              # 2 of 3 other right
         "null", "null", "null"]                  # null perfect

cm = confusion_from_labels(schema, truth, preds)
print("confusion matrix (rows = truth, columns = prediction):")
print(f"{'':>8}" + "".join(f"{l:>8}" for l in schema.labels))
for label, row in zip(schema.labels, cm.counts):
    print(f"{label:>8}" + "".join(f"{int(c):>8}" for c in row))

table = class_metrics(cm)
print(f"\naccuracy {table.accuracy:.3f}")
for row in table.per_class:
    print(f"{row.label:>8}: precision {row.precision:.3f} "
          f"recall {row.recall:.3f} f1 {row.f1:.3f} (support {row.support})")
print(f"weighted: precision {table.weighted_precision:.3f} "
      f"recall {table.weighted_recall:.3f} f1 {table.weighted_f1:.3f}")

# ROC needs scores, not hard labels. Build a prediction set whose stucco
# score mostly tracks the truth, then sweep thresholds.
rng = np.random.default_rng(5)
scores = np.zeros((len(truth), 3))
for i, (t, p) in enumerate(zip(truth, preds)):
    scores[i] = rng.dirichlet(np.ones(3) * 2.0)
    boost = schema.index(p)
    scores[i][boost] += 1.0
    scores[i] /= scores[i].sum()
pset = PredictionSet(schema=schema, image_ids=tuple(f"img-{i}" for i in
                                                    range(len(truth))),
                     scores=scores)

curve = class_roc(pset, truth, "stucco")
print(f"\nstucco one-vs-rest AUC: {curve.auc:.3f}")
print("threshold  fpr    tpr")
for th, fpr, tpr in list(zip(curve.thresholds, curve.fpr, curve.tpr))[:6]:
    print(f"{th:>9.3f}  {fpr:.3f}  {tpr:.3f}")

summary = experiment_roc_summary(pset, truth, mode="macro")
print(f"\nmacro summary AUC {summary.auc:.3f} "
      f"(per class { {k: round(v, 3) for k, v in summary.per_class_auc.items()} })")

# The sweep agrees with the probabilistic reading of AUC: score a random
# pair (positive, negative) and count how often the positive ranks higher.
flat = roc_curve([0.5] * 10, [True] * 4 + [False] * 6)
print(f"an uninformative scorer sits on the diagonal: AUC {flat.auc}")
