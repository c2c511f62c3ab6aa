"""Deterministic image corruptions for training and evaluation pipelines.

Ten kinds are generated here: zero noise, four statistical noises (gaussian,
speckle, shot, impulse), three photometric edits (brightness, contrast,
saturate), pixelation, and the gamma low-light transform. Pre-corrupted
datasets covering further kinds (blurs, fog, frost, snow, spatter, elastic,
JPEG, zoom) are ingested as NPY files instead of being regenerated.

All functions map [0, 255] images into [0, 255] and compute in 64-bit;
stochastic kinds are pure functions of (image, params, seed). Quantization
to integers happens only when image files are written.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .rng import RandomState, derive_seed

KINDS = (
    "zero_noise",
    "gaussian",
    "speckle",
    "shot",
    "impulse",
    "brightness",
    "contrast",
    "saturate",
    "pixelate",
    "gamma",
)

# canonical parameter name per kind, as used in configs and on the CLI
PARAM_NAMES = {
    "zero_noise": "p",
    "gaussian": "sigma",
    "speckle": "sigma",
    "shot": "sigma",
    "impulse": "p",
    "brightness": "amount",
    "contrast": "amount",
    "saturate": "amount",
    "pixelate": "k",
    "gamma": "gamma",
}


@dataclass(frozen=True)
class CorruptionSpec:
    """One corruption kind with its parameters and (for stochastic kinds) seed."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown corruption kind {self.kind!r}; expected one of {KINDS}")
        name = PARAM_NAMES[self.kind]
        if set(self.params) - {name}:
            raise ValidationError(f"{self.kind} accepts only parameter {name!r}, got {sorted(self.params)}")
        value = self.params.get(name)
        if value is None:
            raise ValidationError(f"{self.kind} requires parameter {name!r}")
        if name == "p" and not 0.0 <= value <= 1.0:
            raise ValidationError(f"{self.kind} fraction must be in [0, 1], got {value}")
        if name == "sigma" and value < 0:
            raise ValidationError(f"{self.kind} sigma must be >= 0, got {value}")
        if name == "k" and (int(value) != value or value < 1):
            raise ValidationError(f"pixelate block size must be an integer >= 1, got {value}")
        if name == "gamma" and value <= 0:
            raise ValidationError(f"gamma must be > 0, got {value}")
        if self.kind in ("contrast", "saturate") and value < 0:
            raise ValidationError(f"{self.kind} amount must be >= 0, got {value}")

    @property
    def value(self) -> float:
        return self.params[PARAM_NAMES[self.kind]]


def _as_chw(img: np.ndarray) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 3:
        raise ValidationError(f"expected a C×H×W image, got shape {a.shape}")
    return a


def zero_noise(img: np.ndarray, p: float, seed: int = 0) -> np.ndarray:
    """Set exactly floor(p*H*W) pixel positions to 0 across all channels."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"zero-noise fraction must be in [0, 1], got {p}")
    a = _as_chw(img).copy()
    _, h, w = a.shape
    count = int(p * h * w)
    if count:
        rng = RandomState(seed)
        pos = rng.sample_without_replacement(h * w, count)
        flat = a.reshape(a.shape[0], h * w)
        flat[:, pos] = 0.0
    return a


def gamma_lowlight(img: np.ndarray, gamma: float) -> np.ndarray:
    """Low-light map out = (v/255)^gamma * 255 per element, kept as float."""
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    a = np.asarray(img, dtype=np.float64)
    return np.power(a / 255.0, gamma) * 255.0


def statistical_noise(img: np.ndarray, kind: str, strength: float, seed: int = 0) -> np.ndarray:
    """Seeded gaussian / speckle / shot / impulse noise, clipped to [0, 255]."""
    if kind not in ("gaussian", "speckle", "shot", "impulse"):
        raise ValidationError(f"unknown statistical noise kind {kind!r}")
    if strength < 0:
        raise ValidationError(f"noise strength must be >= 0, got {strength}")
    a = _as_chw(img)
    if strength == 0.0:
        return a.copy()  # identity; for shot this is the lambda -> inf limit
    rng = RandomState(seed)
    if kind == "gaussian":
        eps = rng.normals(a.size).reshape(a.shape)
        out = a + 255.0 * strength * eps
    elif kind == "speckle":
        eps = rng.normals(a.size).reshape(a.shape)
        out = a * (1.0 + strength * eps)
    elif kind == "shot":
        lam = 1.0 / (strength * strength)
        out = 255.0 * rng.poissons(a / 255.0 * lam) / lam
    else:  # impulse: salt/pepper on whole pixel positions
        c, h, w = a.shape
        count = int(strength * h * w)
        out = a.copy()
        if count:
            pos = rng.sample_without_replacement(h * w, count)
            salt = rng.uniforms(count) < 0.5
            flat = out.reshape(c, h * w)
            flat[:, pos[salt]] = 255.0
            flat[:, pos[~salt]] = 0.0
    return np.clip(out, 0.0, 255.0)


def photometric(img: np.ndarray, kind: str, amount: float) -> np.ndarray:
    """Brightness shift, contrast scaling about the global mean, or saturation."""
    a = _as_chw(img)
    if kind == "brightness":
        out = a + 255.0 * amount
    elif kind == "contrast":
        if amount < 0:
            raise ValidationError(f"contrast amount must be >= 0, got {amount}")
        mu = a.mean()
        out = mu + (a - mu) * amount
    elif kind == "saturate":
        if amount < 0:
            raise ValidationError(f"saturate amount must be >= 0, got {amount}")
        g = a.mean(axis=0, keepdims=True)
        out = g + (a - g) * amount
    else:
        raise ValidationError(f"unknown photometric kind {kind!r}")
    return np.clip(out, 0.0, 255.0)


def pixelate(img: np.ndarray, k: int) -> np.ndarray:
    """Replace each k×k block by its per-channel mean; ragged edges use smaller blocks."""
    if k < 1:
        raise ValidationError(f"pixelate block size must be >= 1, got {k}")
    a = _as_chw(img)
    if k == 1:
        return a.copy()
    c, h, w = a.shape
    out = np.empty_like(a)
    for y in range(0, h, k):
        for x in range(0, w, k):
            block = a[:, y : y + k, x : x + k]
            out[:, y : y + k, x : x + k] = block.mean(axis=(1, 2), keepdims=True)
    return out


def apply_corruption(img: np.ndarray, spec: CorruptionSpec, seed: int | None = None) -> np.ndarray:
    """Apply one corruption; ``seed`` overrides the spec's own seed."""
    s = spec.seed if seed is None else seed
    v = spec.value
    if spec.kind == "zero_noise":
        return zero_noise(img, v, s)
    if spec.kind == "gamma":
        return gamma_lowlight(img, v)
    if spec.kind in ("gaussian", "speckle", "shot", "impulse"):
        return statistical_noise(img, spec.kind, v, s)
    if spec.kind == "pixelate":
        return pixelate(img, int(v))
    return photometric(img, spec.kind, v)


def apply_pipeline(img: np.ndarray, specs, image_index: int = 0) -> np.ndarray:
    """Fold corruptions left-to-right with per-image seeds.

    The effective seed of each stage is derived from (stage seed, image
    index), so corrupting a dataset is reproducible and order-independent
    across images.
    """
    out = np.asarray(img, dtype=np.float64)
    for spec in specs:
        out = apply_corruption(out, spec, seed=derive_seed(spec.seed, image_index))
    return out


def corrupt_images(images: np.ndarray, specs) -> np.ndarray:
    """Apply a pipeline to every image of an N×C×H×W batch (float32 result)."""
    specs = list(specs)
    if not specs:
        return np.asarray(images, dtype=np.float32).copy()
    out = np.empty(images.shape, dtype=np.float32)
    for i in range(images.shape[0]):
        out[i] = apply_pipeline(images[i], specs, image_index=i)
    return out
