"""Small procedural datasets for demos, regression fixtures, and CLI runs.

Each class is a distinct spatial pattern (stripes, square, checkerboard)
drawn over a dark noisy background. Foreground intensity varies per pixel
across a wide range, so the class signal is spread over many intensity
bands: every band slice of an image carries a sparse sampling of the same
shape. Pixels are integer-valued, like an 8-bit capture.
"""

from __future__ import annotations

import numpy as np

from .data_io import Dataset
from .errors import ValidationError
from .rng import RandomState, derive_seed

CLASS_PATTERNS = ("stripes_h", "stripes_v", "square", "checker")


def _pattern_mask(name: str, size: int) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size]
    if name == "stripes_h":
        return (y // 2) % 2 == 0
    if name == "stripes_v":
        return (x // 2) % 2 == 0
    if name == "square":
        m = size // 4
        return (y >= m) & (y < size - m) & (x >= m) & (x < size - m)
    return ((y // 4) + (x // 4)) % 2 == 0  # checker


def make_synthetic_dataset(
    n_images: int, num_classes: int = 4, size: int = 16, seed: int = 0
) -> Dataset:
    """Balanced dataset of 3×size×size pattern images; labels cycle 0..K-1."""
    if not 2 <= num_classes <= len(CLASS_PATTERNS):
        raise ValidationError(f"num_classes must be in [2, {len(CLASS_PATTERNS)}], got {num_classes}")
    if size < 8:
        raise ValidationError(f"size must be >= 8, got {size}")
    images = np.empty((n_images, 3, size, size), dtype=np.float32)
    labels = np.empty(n_images, dtype=np.int64)
    for i in range(n_images):
        label = i % num_classes
        rng = RandomState(derive_seed(seed, i))
        mask = _pattern_mask(CLASS_PATTERNS[label], size)
        bg = rng.uniforms(3 * size * size).reshape(3, size, size) * 55.0
        fg = 65.0 + rng.uniforms(3 * size * size).reshape(3, size, size) * 190.0
        img = np.where(mask[None, :, :], fg, bg)
        images[i] = np.floor(img + 0.5)
        labels[i] = label
    return Dataset(images, labels, CLASS_PATTERNS[:num_classes])
