"""Intensity-band decomposition of images into disjoint stream inputs.

An image over [0, 255] is split into ``n`` slices: slice ``i`` keeps every
channel value whose intensity falls in the ``i``-th equal-width band of
[0, 256) (the last band also absorbs 255) and is zero elsewhere. Slices have
pairwise disjoint support, and their weighted sum reconstructs the image —
exactly, when all weights are 1.

Band membership is decided per channel value, not via a luminance proxy, so
reconstruction is bit-exact. Slices stay in the raw [0, 255] domain;
normalization happens at model input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SliceSpec:
    """Slice count and per-slice reconstruction weights (default all 1)."""

    n: int
    weights: tuple[float, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"slice count must be >= 1, got {self.n}")
        w = self.weights if self.weights is not None else (1.0,) * self.n
        if len(w) != self.n:
            raise ValidationError(f"expected {self.n} weights, got {len(w)}")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))


@dataclass(frozen=True)
class SliceStack:
    """The n per-band slices of one image plus its original shape."""

    slices: tuple[np.ndarray, ...]
    source_shape: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.slices)


def band_of(v: float, n: int) -> int:
    """Band index of intensity ``v``: min(floor(v * n / 256), n - 1)."""
    if n < 1:
        raise ValidationError(f"band count must be >= 1, got {n}")
    if not 0 <= v <= 255:
        raise ValidationError(f"intensity {v} outside [0, 255]")
    return min(int(v * n / 256.0), n - 1)


def band_indices(img: np.ndarray, n: int) -> np.ndarray:
    """Vectorized band_of over an array; validates the [0, 255] range."""
    if n < 1:
        raise ValidationError(f"band count must be >= 1, got {n}")
    a = np.asarray(img)
    if a.size and (a.min() < 0 or a.max() > 255):
        bad = a[(a < 0) | (a > 255)].flat[0]
        raise ValidationError(f"intensity {bad} outside [0, 255]")
    scaled = a.astype(np.float64) * n / 256.0  # 64-bit so it agrees with band_of
    return np.minimum(scaled.astype(np.int64), n - 1)


def decompose(img: np.ndarray, spec: SliceSpec) -> SliceStack:
    """Split ``img`` (C×H×W, values in [0, 255]) into ``spec.n`` band slices."""
    a = np.asarray(img, dtype=np.float32)
    bands = band_indices(a, spec.n)
    slices = tuple(np.where(bands == i, a, np.float32(0.0)) for i in range(spec.n))
    return SliceStack(slices=slices, source_shape=a.shape)


def reconstruct(stack: SliceStack, weights=None) -> np.ndarray:
    """Weighted sum of slices; unit weights reproduce the source bit-exactly."""
    w = tuple(weights) if weights is not None else (1.0,) * stack.n
    if len(w) != stack.n:
        raise ValidationError(f"expected {stack.n} weights, got {len(w)}")
    out = np.zeros(stack.source_shape, dtype=np.float32)
    for wi, sl in zip(w, stack.slices):
        out += np.float32(wi) * sl
    return out


def decompose_batch(batch: np.ndarray, n: int) -> list[np.ndarray]:
    """Band slices of a whole N×C×H×W batch; slice i is an N×C×H×W array."""
    bands = band_indices(batch, n)
    a = np.asarray(batch, dtype=np.float32)
    return [np.where(bands == i, a, np.float32(0.0)) for i in range(n)]
