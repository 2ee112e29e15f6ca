"""Image preprocessing: resize to 160, crop to 128, optional augmentation.

Without augmentation the crop is the deterministic center crop. With it,
the augmentation stack runs in listed order (flip, rotate, zoom, random
crop) from a seeded generator, so outputs are reproducible per seed.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

RESIZE_TO = 160
CROP_TO = 128
ROTATION_FACTOR = 0.2  # fraction of a half-turn in each direction
ZOOM_FACTOR = 0.2


def load_rgb(path) -> Image.Image:
    with Image.open(path) as img:
        return img.convert("RGB")


def preprocess(
    img: Image.Image,
    resize_to: int = RESIZE_TO,
    crop_to: int = CROP_TO,
    augment: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Return a (crop_to, crop_to, 3) float array in [0, 1]."""
    img = img.resize((resize_to, resize_to), Image.BILINEAR)
    if augment:
        rng = rng or np.random.default_rng()
        if rng.random() < 0.5:
            img = img.transpose(Image.FLIP_LEFT_RIGHT)
        if rng.random() < 0.5:
            img = img.transpose(Image.FLIP_TOP_BOTTOM)
        angle = float(rng.uniform(-ROTATION_FACTOR, ROTATION_FACTOR)) * 180.0
        img = img.rotate(angle, resample=Image.BILINEAR)
        zoom = 1.0 + float(rng.uniform(-ZOOM_FACTOR, ZOOM_FACTOR))
        zoomed = max(crop_to, int(round(resize_to * zoom)))
        img = img.resize((zoomed, zoomed), Image.BILINEAR)
        max_off = img.width - crop_to
        left = int(rng.integers(0, max_off + 1))
        top = int(rng.integers(0, max_off + 1))
    else:
        left = top = (resize_to - crop_to) // 2
    img = img.crop((left, top, left + crop_to, top + crop_to))
    return np.asarray(img, dtype=np.float64) / 255.0
