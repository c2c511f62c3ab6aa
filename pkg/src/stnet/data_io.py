"""Dataset loading: CIFAR-10 binary batches, NPY arrays, PPM directories.

Every format is parsed byte-exactly by hand and has a matching writer so
round-trips can be verified. PPM (P6, maxval 255) is the only image codec;
convert PNG/JPEG sources externally (e.g. ImageMagick ``mogrify -format
ppm``) before loading. Pixel values are carried as float32 in [0, 255].
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptRecordError,
    NotNpyError,
    ShapeError,
    TruncatedFileError,
    UnsupportedDtypeError,
    UnsupportedImageError,
    UnsupportedLayoutError,
    ValidationError,
)
from .rng import RandomState

CIFAR10_CLASS_NAMES = (
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
)

_CIFAR_RECORD = 3073  # 1 label byte + 3 * 1024 channel-plane bytes


@dataclass
class Dataset:
    """Images (N×C×H×W float32 in [0,255]), integer labels, class names."""

    images: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise ShapeError(f"dataset images must be N×C×H×W, got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ShapeError(
                f"got {self.images.shape[0]} images but {self.labels.shape} labels"
            )
        if len(self.labels) and self.labels.max() >= len(self.class_names):
            raise ValidationError(
                f"label {int(self.labels.max())} outside {len(self.class_names)} classes"
            )

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def subset(self, indices) -> "Dataset":
        return Dataset(self.images[indices], self.labels[indices], self.class_names)


# --------------------------------------------------------------------------
# CIFAR-10 binary batches.
# --------------------------------------------------------------------------


def parse_cifar10_binary(data: bytes) -> Dataset:
    """Parse records of 1 label byte + 3072 pixel bytes (R, G, B planes)."""
    if len(data) % _CIFAR_RECORD != 0:
        raise TruncatedFileError(
            f"CIFAR-10 batch length {len(data)} is not a multiple of {_CIFAR_RECORD}"
        )
    n = len(data) // _CIFAR_RECORD
    raw = np.frombuffer(data, dtype=np.uint8).reshape(n, _CIFAR_RECORD)
    labels = raw[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise CorruptRecordError(f"record {int(bad[0])} has label byte {int(labels[bad[0]])} > 9")
    images = raw[:, 1:].reshape(n, 3, 32, 32).astype(np.float32)
    return Dataset(images, labels, CIFAR10_CLASS_NAMES)


def write_cifar10_binary(dataset: Dataset) -> bytes:
    """Inverse of :func:`parse_cifar10_binary` (values rounded half-up)."""
    if dataset.images.shape[1:] != (3, 32, 32):
        raise ShapeError(f"CIFAR-10 records need 3×32×32 images, got {dataset.images.shape}")
    n = len(dataset)
    out = np.empty((n, _CIFAR_RECORD), dtype=np.uint8)
    out[:, 0] = dataset.labels.astype(np.uint8)
    out[:, 1:] = _quantize(dataset.images).reshape(n, 3072)
    return out.tobytes()


# --------------------------------------------------------------------------
# NPY 1.0 files (the Cifar10-C distribution format).
# --------------------------------------------------------------------------

_NPY_MAGIC = b"\x93NUMPY"
_NPY_DTYPES = {"|u1": np.uint8, "<f4": np.float32, "<f8": np.float64}


def parse_npy(data: bytes) -> tuple[tuple[int, ...], str, np.ndarray]:
    """Parse an NPY 1.0 byte stream; returns (shape, descr, C-order array)."""
    if data[:6] != _NPY_MAGIC:
        raise NotNpyError(f"bad magic bytes {data[:6]!r}")
    if data[6:8] != b"\x01\x00":
        raise NotNpyError(f"unsupported NPY version {tuple(data[6:8])}")
    header_len = int.from_bytes(data[8:10], "little")
    header_end = 10 + header_len
    if len(data) < header_end:
        raise TruncatedFileError("NPY header extends past end of data")
    try:
        header = ast.literal_eval(data[10:header_end].decode("latin1"))
        descr, fortran, shape = header["descr"], header["fortran_order"], header["shape"]
    except Exception as exc:
        raise NotNpyError(f"malformed NPY header: {exc}") from exc
    if fortran:
        raise UnsupportedLayoutError("fortran_order arrays are not supported")
    if descr not in _NPY_DTYPES:
        raise UnsupportedDtypeError(f"unsupported descr {descr!r}; expected one of {sorted(_NPY_DTYPES)}")
    shape = tuple(int(s) for s in shape)
    dtype = np.dtype(_NPY_DTYPES[descr])
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = data[header_end:]
    if len(payload) != expected:
        raise TruncatedFileError(f"payload holds {len(payload)} bytes, header implies {expected}")
    array = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return shape, descr, array


def write_npy(array: np.ndarray) -> bytes:
    """Serialize a C-order array of a supported dtype as NPY 1.0 bytes."""
    descr = {np.uint8: "|u1", np.float32: "<f4", np.float64: "<f8"}.get(array.dtype.type)
    if descr is None:
        raise UnsupportedDtypeError(f"cannot write dtype {array.dtype}")
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {tuple(array.shape)}, }}"
    # pad with spaces so the total header block is 64-byte aligned, ending in \n
    pad = -(10 + len(header) + 1) % 64
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    out = bytearray(_NPY_MAGIC + b"\x01\x00")
    out += len(header_bytes).to_bytes(2, "little")
    out += header_bytes
    out += np.ascontiguousarray(array).tobytes()
    return bytes(out)


def load_npy_pair(images_path, labels_path) -> Dataset:
    """Load an images NPY (N×H×W×C or N×C×H×W) plus a labels NPY as a dataset."""
    _, _, images = parse_npy(Path(images_path).read_bytes())
    _, _, labels = parse_npy(Path(labels_path).read_bytes())
    if images.ndim != 4:
        raise ShapeError(f"expected a 4-d image array, got {images.shape}")
    if images.shape[3] in (1, 3) and images.shape[1] not in (1, 3):
        images = images.transpose(0, 3, 1, 2)  # N,H,W,C -> N,C,H,W
    labels = labels.astype(np.int64).reshape(-1)
    k = int(labels.max()) + 1 if labels.size else 1
    return Dataset(images.astype(np.float32), labels, tuple(str(i) for i in range(k)))


# --------------------------------------------------------------------------
# PPM (P6) images and directory-per-class loading.
# --------------------------------------------------------------------------


def parse_ppm(data: bytes) -> np.ndarray:
    """Parse one binary PPM (P6, maxval 255) into a 3×H×W float32 array."""
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedFileError("PPM header ended early")
        return data[start:pos]

    magic = token()
    if magic != b"P6":
        raise UnsupportedImageError(f"expected binary PPM magic P6, got {magic!r}")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise UnsupportedImageError(f"non-numeric PPM header field: {exc}") from exc
    if maxval != 255:
        raise UnsupportedImageError(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise UnsupportedImageError(f"bad PPM dimensions {width}x{height}")
    pos += 1  # exactly one whitespace byte separates header from pixels
    payload = data[pos : pos + 3 * width * height]
    if len(payload) != 3 * width * height:
        raise TruncatedFileError(
            f"PPM pixel data holds {len(payload)} bytes, expected {3 * width * height}"
        )
    interleaved = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return interleaved.transpose(2, 0, 1).astype(np.float32)


def write_ppm(img: np.ndarray) -> bytes:
    """Serialize a 3×H×W image as binary PPM; values rounded half-up."""
    a = np.asarray(img)
    if a.ndim != 3 or a.shape[0] != 3:
        raise ShapeError(f"PPM needs a 3×H×W image, got {a.shape}")
    _, h, w = a.shape
    body = _quantize(a).transpose(1, 2, 0).tobytes()
    return f"P6\n{w} {h}\n255\n".encode() + body


def _quantize(a: np.ndarray) -> np.ndarray:
    """Round half-up and clip to the writable byte range."""
    return np.clip(np.floor(np.asarray(a, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def write_ppm_dir(dataset: Dataset, root) -> None:
    """Write ``root/<class>/img_<i>.ppm``; the inverse of :func:`load_ppm_dir`."""
    root = Path(root)
    for idx, name in enumerate(dataset.class_names):
        cdir = root / name
        cdir.mkdir(parents=True, exist_ok=True)
        for j in np.flatnonzero(dataset.labels == idx):
            (cdir / f"img_{int(j):04d}.ppm").write_bytes(write_ppm(dataset.images[j]))


def load_ppm_dir(root) -> Dataset:
    """Load ``root/<class>/<name>.ppm`` with lexicographic class and file order."""
    root = Path(root)
    if not root.is_dir():
        raise ValidationError(f"dataset root {root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValidationError(f"dataset root {root} contains no class directories")
    images, labels = [], []
    shape_source = None
    for idx, cdir in enumerate(class_dirs):
        files = sorted(p for p in cdir.iterdir() if p.is_file() and p.suffix == ".ppm")
        if not files:
            raise ValidationError(f"class directory {cdir.name!r} holds no .ppm files")
        for f in files:
            img = parse_ppm(f.read_bytes())
            if shape_source is None:
                shape_source = (img.shape, f)
            elif img.shape != shape_source[0]:
                raise ShapeError(
                    f"image shape {img.shape} of {f} differs from {shape_source[0]} of {shape_source[1]}"
                )
            images.append(img)
            labels.append(idx)
    return Dataset(
        np.stack(images), np.asarray(labels, dtype=np.int64), tuple(d.name for d in class_dirs)
    )


# --------------------------------------------------------------------------
# Resize and splitting.
# --------------------------------------------------------------------------


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resample of a C×H×W image."""
    if out_h < 1 or out_w < 1:
        raise ValidationError(f"target size must be >= 1, got {out_h}x{out_w}")
    a = np.asarray(img, dtype=np.float64)
    c, h, w = a.shape

    def coords(n_out: int, n_in: int):
        src = (np.arange(n_out) + 0.5) * n_in / n_out - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = src - lo
        return lo, hi, frac

    y0, y1, fy = coords(out_h, h)
    x0, x1, fx = coords(out_w, w)
    top = a[:, y0][:, :, x0] * (1 - fx) + a[:, y0][:, :, x1] * fx
    bot = a[:, y1][:, :, x0] * (1 - fx) + a[:, y1][:, :, x1] * fx
    out = top * (1 - fy)[None, :, None] + bot * fy[None, :, None]
    return out.astype(np.float32)


def split(dataset: Dataset, n_train: int, n_test: int, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded permutation split into disjoint train/test subsets."""
    n = len(dataset)
    if n_train < 0 or n_test < 0 or n_train + n_test > n:
        raise ValidationError(f"cannot split {n} samples into {n_train} train + {n_test} test")
    perm = RandomState(seed).permutation(n)
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train : n_train + n_test])
