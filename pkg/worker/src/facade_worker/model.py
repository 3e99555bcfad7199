"""A compact CNN trained from scratch on the bundle's images.

Full-scale deployments swap build_model for a pretrained backbone; the
protocol (and everything in cli.py/bundle.py) does not change. Training
runs in torch's deterministic mode with every RNG seeded from the bundle
config, so a bundle maps to one set of predicted labels.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from PIL import Image
from torch import nn

from .bundle import Bundle, ManifestRow


class TrainingFailure(Exception):
    """Image IO or optimization failed; maps to exit 1."""


def _seed_everything(seed: int) -> torch.Generator:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def _load_images(rows: Sequence[ManifestRow], resolution: int,
                 root: Path) -> torch.Tensor:
    batch = torch.empty((len(rows), 3, resolution, resolution))
    for i, row in enumerate(rows):
        path = row.path if row.path.is_absolute() else root / row.path
        try:
            with Image.open(path) as img:
                img = img.convert("RGB").resize(
                    (resolution, resolution), Image.Resampling.BILINEAR)
                arr = np.asarray(img, dtype=np.float32) / 255.0
        except (OSError, ValueError) as exc:
            raise TrainingFailure(
                f"could not read image {row.image_id!r} at {path}: {exc}"
            ) from exc
        batch[i] = torch.from_numpy((arr - 0.5) / 0.25).permute(2, 0, 1)
    return batch


def build_model(n_classes: int) -> nn.Module:
    return nn.Sequential(
        nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.ReLU(),
        nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.ReLU(),
        nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.ReLU(),
        nn.AdaptiveAvgPool2d(1), nn.Flatten(),
        nn.Linear(64, n_classes),
    )


def train(bundle: Bundle) -> nn.Module:
    gen = _seed_everything(bundle.seed)
    images = _load_images(bundle.train, bundle.resolution, bundle.root)
    targets = torch.tensor([bundle.label_index(r.label)
                            for r in bundle.train])
    model = build_model(len(bundle.labels))
    optimizer = torch.optim.SGD(model.parameters(),
                                lr=bundle.learning_rate, momentum=0.9)
    loss_fn = nn.CrossEntropyLoss()
    batch_size = 16
    model.train()
    for _ in range(bundle.epochs):
        order = torch.randperm(len(images), generator=gen)
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(images[idx]), targets[idx])
            loss.backward()
            optimizer.step()
    return model


def predict(model: nn.Module, bundle: Bundle) -> list[tuple[str, str, list[float]]]:
    """(image_id, predicted_label, scores) per test row, manifest order."""
    images = _load_images(bundle.test, bundle.resolution, bundle.root)
    model.eval()
    rows = []
    with torch.no_grad():
        for start in range(0, len(images), 32):
            scores = torch.softmax(model(images[start:start + 32]), dim=1)
            for offset, row_scores in enumerate(scores):
                row = bundle.test[start + offset]
                values = [float(v) for v in row_scores]
                predicted = bundle.labels[int(np.argmax(values))]
                rows.append((row.image_id, predicted, values))
    return rows


def write_predictions(rows: Sequence[tuple[str, str, list[float]]],
                      labels: Sequence[str], path: Path) -> None:
    header = "image_id,predicted_label," + ",".join(
        f"score_{label}" for label in labels)
    lines = [header]
    for image_id, predicted, scores in rows:
        lines.append(",".join([image_id, predicted,
                               *(repr(s) for s in scores)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
