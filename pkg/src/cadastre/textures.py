"""Procedural facade textures for the local stub backend.

One deterministic texture family per label, built so that color and
edge-orientation statistics are pairwise distinguishable: that is what lets
the desk-scale pipeline train and evaluate end to end without a remote
image service. Structural detail is drawn at 512-px scale so that
downsampling to low classifier resolutions visibly erodes it.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .schema import HRP_LABELS, URC_LABELS, ValidationError

TEXTURE_LABELS: tuple[str, ...] = URC_LABELS + HRP_LABELS


def _low_freq_noise(rng: np.random.Generator, width: int, height: int,
                    cells: int = 12) -> np.ndarray:
    """Smooth noise field in [-1, 1], (height, width)."""
    coarse = (rng.random((cells, cells)) * 255).astype(np.uint8)
    img = Image.fromarray(coarse, mode="L").resize((width, height), Image.BILINEAR)
    return np.asarray(img, dtype=np.float32) / 127.5 - 1.0


def _flat(width: int, height: int, color: tuple[int, int, int]) -> np.ndarray:
    out = np.empty((height, width, 3), dtype=np.float32)
    out[:] = color
    return out


def _clip(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0, 255).astype(np.uint8)


def _jitter(rng: np.random.Generator, img: np.ndarray, amount: float = 6.0) -> np.ndarray:
    return img + rng.uniform(-amount, amount, size=3).astype(np.float32)


def _brick(rng, w, h):
    img = _flat(w, h, (176, 72, 52))
    yy, xx = np.mgrid[0:h, 0:w]
    row_h, col_w = 26, 54
    row_idx = yy // row_h
    mortar = (yy % row_h < 3) | (((xx + (row_idx % 2) * (col_w // 2)) % col_w) < 3)
    img[mortar] = (208, 198, 186)
    img += 10 * _low_freq_noise(rng, w, h)[..., None]
    return img


def _stucco(rng, w, h):
    img = _flat(w, h, (221, 206, 178))
    img += 22 * _low_freq_noise(rng, w, h, cells=10)[..., None]
    img += 6 * _low_freq_noise(rng, w, h, cells=40)[..., None]
    return img


def _rustication(rng, w, h):
    img = _flat(w, h, (182, 170, 150))
    yy, xx = np.mgrid[0:h, 0:w]
    band_h = 64
    band = yy // band_h
    tones = rng.uniform(-12, 12, size=band.max() + 1).astype(np.float32)
    img += tones[band][..., None]
    groove = (yy % band_h < 5)
    joint = ((xx + (band % 2) * 80) % 160 < 5) & ~groove
    img[groove] *= 0.42
    img[joint] *= 0.55
    return img


def _metal(rng, w, h):
    img = _flat(w, h, (138, 148, 158))
    xx = np.arange(w, dtype=np.float32)
    phase = rng.uniform(0, 2 * np.pi)
    ribs = ((xx + rng.integers(0, 6)) % 6 < 3).astype(np.float32) * 36 - 18
    img += ribs[None, :, None]
    sheen = 14 * np.sin(2 * np.pi * xx / w + phase)
    img += sheen[None, :, None]
    return img


def _siding(rng, w, h):
    img = _flat(w, h, (214, 204, 142))
    yy = np.arange(h, dtype=np.float32)
    boards = ((yy + rng.integers(0, 8)) % 8 < 4).astype(np.float32) * 34 - 17
    img += boards[:, None, None]
    return img


def _wood(rng, w, h):
    img = _flat(w, h, (148, 104, 62))
    yy, xx = np.mgrid[0:h, 0:w]
    plank_w = 34
    plank = xx // plank_w
    tones = rng.uniform(-14, 14, size=plank.max() + 1).astype(np.float32)
    img += tones[plank][..., None]
    img[(xx % plank_w) < 2] *= 0.5
    grain = 8 * np.sin(yy / 9.0 + tones[plank] * 2.0)
    img += grain[..., None]
    return img


def _null_scene(rng, w, h):
    # Sky over ground: deliberately no building motif.
    img = np.empty((h, w, 3), dtype=np.float32)
    t = (np.arange(h, dtype=np.float32) / max(h - 1, 1))[:, None]
    sky_top = np.array((138, 178, 228), dtype=np.float32)
    sky_bottom = np.array((232, 238, 248), dtype=np.float32)
    img[:] = sky_top[None, None, :] * (1 - t[..., None]) + sky_bottom[None, None, :] * t[..., None]
    horizon = int(h * 0.72)
    img[horizon:] = (94, 142, 82)
    img[horizon:] += 14 * _low_freq_noise(rng, w, h - horizon, cells=8)[..., None]
    return img


def _other(rng, w, h):
    # Mixed motif in an off-palette: diagonal checker of two hues.
    yy, xx = np.mgrid[0:h, 0:w]
    cell = 48
    checker = (((xx + yy) // cell) % 2).astype(bool)
    img = _flat(w, h, (140, 96, 160))
    img[checker] = (120, 140, 88)
    img += 10 * _low_freq_noise(rng, w, h)[..., None]
    return img


def _stone(rng, w, h):
    img = _flat(w, h, (150, 156, 140))
    field = _low_freq_noise(rng, w, h, cells=9)
    levels = np.digitize(field, (-0.35, 0.0, 0.35)).astype(np.float32)
    img += (levels[..., None] - 1.5) * 18
    gy, gx = np.gradient(field)
    boundary = np.hypot(gx, gy) > np.quantile(np.hypot(gx, gy), 0.93)
    img[boundary] *= 0.55
    return img


def _curtain_wall(rng, w, h):
    img = _flat(w, h, (42, 62, 92))
    yy, xx = np.mgrid[0:h, 0:w]
    cell = 44
    cols, rows = xx // cell, yy // cell
    reflect = rng.random((rows.max() + 1, cols.max() + 1)) < 0.4
    img[reflect[rows, cols]] = (188, 208, 228)
    mullion = (xx % cell < 4) | (yy % cell < 4)
    img[mullion] = (18, 20, 24)
    return img


def _concrete_panels(rng, w, h):
    img = _flat(w, h, (190, 190, 186))
    yy, xx = np.mgrid[0:h, 0:w]
    pw, ph = 120, 90
    panel_x, panel_y = xx // pw, yy // ph
    tones = rng.uniform(-5, 5, size=(panel_y.max() + 1, panel_x.max() + 1)).astype(np.float32)
    img += tones[panel_y, panel_x][..., None]
    seam = (xx % pw < 3) | (yy % ph < 3)
    img[seam] *= 0.62
    return img


_GENERATORS = {
    "brick": _brick,
    "stucco": _stucco,
    "rustication": _rustication,
    "metal": _metal,
    "siding": _siding,
    "wood": _wood,
    "null": _null_scene,
    "other": _other,
    "stone": _stone,
    "curtain_wall": _curtain_wall,
    "concrete_panels": _concrete_panels,
}


def render_texture(label: str, width: int, height: int,
                   rng: np.random.Generator) -> np.ndarray:
    """(height, width, 3) uint8 texture for ``label``."""
    try:
        gen = _GENERATORS[label]
    except KeyError:
        raise ValidationError(f"no stub texture for label {label!r}") from None
    img = gen(rng, width, height)
    return _clip(_jitter(rng, img))


def texture_image(label: str, width: int, height: int,
                  rng: np.random.Generator) -> Image.Image:
    return Image.fromarray(render_texture(label, width, height, rng), mode="RGB")
