"""Histogram features for facade crops.

A feature vector is the concatenation of three per-channel color histograms
and one gradient-orientation histogram. The orientation histogram is
magnitude-weighted and normalized by pixel count rather than by total
magnitude, so lower input resolutions genuinely carry less edge signal
instead of being rescaled to look identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

COLOR_BINS = 8
EDGE_BINS = 8

ImageInput = Union[Image.Image, np.ndarray, str, Path]


def feature_length(color_bins: int = COLOR_BINS, edge_bins: int = EDGE_BINS) -> int:
    return 3 * color_bins + edge_bins


def _as_array(image: ImageInput, resolution: int) -> np.ndarray:
    if isinstance(image, (str, Path)):
        with Image.open(image) as handle:
            image = handle.convert("RGB").copy()
    if isinstance(image, np.ndarray):
        image = Image.fromarray(image.astype(np.uint8), "RGB")
    if image.mode != "RGB":
        image = image.convert("RGB")
    resized = image.resize((resolution, resolution), Image.BILINEAR)
    return np.asarray(resized, dtype=np.float64) / 255.0


def extract_features(image: ImageInput, resolution: int,
                     color_bins: int = COLOR_BINS,
                     edge_bins: int = EDGE_BINS) -> np.ndarray:
    arr = _as_array(image, resolution)
    pixels = arr.shape[0] * arr.shape[1]

    parts = []
    for channel in range(3):
        hist, _ = np.histogram(arr[:, :, channel], bins=color_bins, range=(0.0, 1.0))
        parts.append(hist / pixels)

    gray = arr.mean(axis=2)
    gy, gx = np.gradient(gray)
    magnitude = np.hypot(gx, gy)
    # Orientation folded onto [0, pi): a vertical edge and its reverse agree.
    orientation = np.mod(np.arctan2(gy, gx), np.pi)
    edge_hist, _ = np.histogram(orientation, bins=edge_bins, range=(0.0, np.pi),
                                weights=magnitude)
    parts.append(edge_hist / pixels)

    return np.concatenate(parts)


class FeatureCache:
    """Memoizes per-path feature vectors; keyed by (path, resolution, bins)."""

    def __init__(self) -> None:
        self._cache: dict[tuple[str, int, int, int], np.ndarray] = {}

    def features_for(self, path: str | Path, resolution: int,
                     color_bins: int = COLOR_BINS,
                     edge_bins: int = EDGE_BINS) -> np.ndarray:
        key = (str(path), resolution, color_bins, edge_bins)
        hit = self._cache.get(key)
        if hit is None:
            hit = extract_features(path, resolution, color_bins, edge_bins)
            self._cache[key] = hit
        return hit
