"""Stream architectures and multi-stream network assembly.

A streaming network holds S parallel CNN streams with disjoint parameters.
Stream ``i`` consumes intensity slice ``i`` of the input (scaled to [0, 1]),
the per-stream feature vectors are concatenated in stream order, and a
single dense + softmax joint classifier produces class probabilities.
Hybrid networks mix stream architectures.

Two stream architectures are provided: a five-stage simple CNN and a
width-scaled VGG16 where every convolution channel count c becomes
ceil(c / n). The stream table is an open enumeration so further
architectures can be registered.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import ConfigurationError, FormatError, ShapeError, ValidationError
from .rng import RandomState
from .slicing import SliceSpec, decompose_batch

ARCHS = ("simple_cnn", "vgg16_scaled")

# (out_channels, kernel) per stage of the simple CNN; each stage is
# conv + relu + 2x2 pool, and the flattened stage-5 output is the feature
_SIMPLE_CNN_STAGES = ((32, 7), (64, 5), (128, 3), (256, 1), (10, 1))

# VGG16 convolution blocks (3x3 kernels, 2x2 pool after each block)
_VGG16_BLOCKS = ((64, 64), (128, 128), (256, 256, 256), (512, 512, 512), (512, 512, 512))
_VGG16_HIDDEN = 4096


@dataclass(frozen=True)
class StreamSpec:
    """One stream architecture; ``scale`` is the VGG16 width divisor."""

    arch: str
    scale: int = 1

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValidationError(f"unknown stream arch {self.arch!r}; expected one of {ARCHS}")
        if self.scale < 1:
            raise ValidationError(f"stream scale must be >= 1, got {self.scale}")


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative description of a streaming network."""

    streams: tuple[StreamSpec, ...]
    slice_spec: SliceSpec
    num_classes: int
    input_shape: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "streams", tuple(self.streams))
        if len(self.streams) < 1:
            raise ValidationError("a network needs at least one stream")
        if len(self.streams) != self.slice_spec.n:
            raise ValidationError(
                f"{len(self.streams)} streams require a slice count of "
                f"{len(self.streams)}, got {self.slice_spec.n}"
            )
        if self.num_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.num_classes}")
        if len(self.input_shape) != 3:
            raise ValidationError(f"input_shape must be (C, H, W), got {self.input_shape}")


class Conv2d:
    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: RandomState):
        bound = float(np.sqrt(6.0 / (in_ch * kernel * kernel)))
        w = (rng.uniforms(out_ch * in_ch * kernel * kernel) * 2 - 1) * bound
        self.weight = Tensor(w.reshape(out_ch, in_ch, kernel, kernel), requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return ag.conv2d(x, self.weight, self.bias)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: RandomState):
        bound = float(np.sqrt(6.0 / in_dim))
        w = (rng.uniforms(in_dim * out_dim) * 2 - 1) * bound
        self.weight = Tensor(w.reshape(in_dim, out_dim), requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return ag.dense(x, self.weight, self.bias)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]


class _Relu:
    def __call__(self, x: Tensor) -> Tensor:
        return ag.relu(x)

    def params(self):
        return []


class _Pool:
    def __call__(self, x: Tensor) -> Tensor:
        return ag.maxpool2(x)

    def params(self):
        return []


class _Flatten:
    def __call__(self, x: Tensor) -> Tensor:
        return ag.reshape(x, (x.shape[0], -1))

    def params(self):
        return []


class Stream:
    """A feature extractor: an ordered layer list ending in a flat vector."""

    def __init__(self, layers: list, named: list[tuple[str, object]], feature_dim: int):
        self._layers = layers
        self._named = named
        self.feature_dim = feature_dim

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self._layers:
            x = layer(x)
        return x

    def params(self):
        out = []
        for prefix, layer in self._named:
            out.extend((f"{prefix}.{n}", t) for n, t in layer.params())
        return out


def _build_stream(spec: StreamSpec, input_shape, rng: RandomState) -> Stream:
    c, h, w = input_shape
    layers: list = []
    named: list[tuple[str, object]] = []

    def add_pool(stage_name: str, final: bool):
        nonlocal h, w
        if h >= 2 and w >= 2:
            layers.append(_Pool())
            h, w = h // 2, w // 2
        elif not final:
            raise ConfigurationError(
                f"spatial extent {h}x{w} collapses to zero at {stage_name} "
                f"for input {tuple(input_shape)}"
            )
        # the final pool is skipped once the map is already 1x1

    if spec.arch == "simple_cnn":
        for i, (out_ch, kernel) in enumerate(_SIMPLE_CNN_STAGES, start=1):
            conv = Conv2d(c, out_ch, kernel, rng)
            layers += [conv, _Relu()]
            named.append((f"conv{i}", conv))
            c = out_ch
            add_pool(f"stage {i} pool", final=i == len(_SIMPLE_CNN_STAGES))
        layers.append(_Flatten())
        return Stream(layers, named, c * h * w)

    # vgg16_scaled
    n = spec.scale
    idx = 0
    for bi, block in enumerate(_VGG16_BLOCKS, start=1):
        for out_ch in block:
            idx += 1
            conv = Conv2d(c, -(-out_ch // n), 3, rng)
            layers += [conv, _Relu()]
            named.append((f"conv{idx}", conv))
            c = -(-out_ch // n)
        add_pool(f"block {bi} pool", final=bi == len(_VGG16_BLOCKS))
    layers.append(_Flatten())
    hidden = -(-_VGG16_HIDDEN // n)
    flat = c * h * w
    for j, (din, dout) in enumerate(((flat, hidden), (hidden, hidden)), start=1):
        fc = Dense(din, dout, rng)
        layers += [fc, _Relu()]
        named.append((f"dense{j}", fc))
    return Stream(layers, named, hidden)


class StreamModel:
    """A standalone single-stream classifier: feature extractor + dense head."""

    def __init__(self, features: Stream, head: Dense, input_shape, num_classes: int):
        self.features = features
        self.head = head
        self.input_shape = tuple(input_shape)
        self.num_classes = num_classes

    def params(self):
        out = [(f"features.{n}", t) for n, t in self.features.params()]
        out += [(f"head.{n}", t) for n, t in self.head.params()]
        return out


class ModelInstance:
    """An instantiated streaming network: streams, joint classifier, slice spec."""

    def __init__(self, spec: NetworkSpec, streams: list[Stream], classifier: Dense):
        self.spec = spec
        self.streams = streams
        self.classifier = classifier
        self.feature_dim = sum(s.feature_dim for s in streams)

    def params(self):
        out = []
        for i, s in enumerate(self.streams):
            out.extend((f"stream{i}.{n}", t) for n, t in s.params())
        out += [(f"classifier.{n}", t) for n, t in self.classifier.params()]
        return out


def build_simple_cnn(input_shape, num_classes: int, seed: int = 0) -> StreamModel:
    """The five-stage simple CNN with its own dense + softmax head."""
    rng = RandomState(seed)
    features = _build_stream(StreamSpec("simple_cnn"), input_shape, rng)
    head = Dense(features.feature_dim, num_classes, rng)
    return StreamModel(features, head, input_shape, num_classes)


def build_scaled_vgg16(scale: int, input_shape, num_classes: int, seed: int = 0) -> StreamModel:
    """VGG16 with channel counts divided by ``scale`` (rounded up), plus a head."""
    rng = RandomState(seed)
    features = _build_stream(StreamSpec("vgg16_scaled", scale), input_shape, rng)
    head = Dense(features.feature_dim, num_classes, rng)
    return StreamModel(features, head, input_shape, num_classes)


def build_streaming_network(spec: NetworkSpec, seed: int = 0) -> ModelInstance:
    """Instantiate every stream independently plus the joint classifier."""
    rng = RandomState(seed)
    streams = [_build_stream(s, spec.input_shape, rng) for s in spec.streams]
    classifier = Dense(sum(s.feature_dim for s in streams), spec.num_classes, rng)
    return ModelInstance(spec, streams, classifier)


# --------------------------------------------------------------------------
# Forward passes.
# --------------------------------------------------------------------------


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return (e / e.sum(axis=1, keepdims=True)).astype(np.float32)


def _check_batch(batch: np.ndarray, input_shape) -> np.ndarray:
    b = np.asarray(batch, dtype=np.float32)
    if b.ndim != 4 or b.shape[1:] != tuple(input_shape):
        raise ShapeError(f"batch shape {b.shape} does not match input shape {tuple(input_shape)}")
    return b


def forward_logits(model: ModelInstance, batch: np.ndarray) -> Tensor:
    """Slice a raw [0, 255] batch, run the streams, and return joint logits."""
    b = _check_batch(batch, model.spec.input_shape)
    slices = decompose_batch(b, model.spec.slice_spec.n)
    feats = [
        stream(Tensor(sl / np.float32(255.0)))
        for stream, sl in zip(model.streams, slices)
    ]
    joint = feats[0] if len(feats) == 1 else ag.concat(feats, axis=1)
    return model.classifier(joint)


def forward(model: ModelInstance, batch: np.ndarray) -> np.ndarray:
    """Class probabilities (N×K, rows sum to 1) for a raw [0, 255] batch."""
    return _softmax(forward_logits(model, batch).data)


def stream_forward_logits(model: StreamModel, batch: np.ndarray) -> Tensor:
    """Standalone stream classifier logits on a raw [0, 255] batch."""
    b = _check_batch(batch, model.input_shape)
    return model.head(model.features(Tensor(b / np.float32(255.0))))


def stream_forward(model: StreamModel, batch: np.ndarray) -> np.ndarray:
    return _softmax(stream_forward_logits(model, batch).data)


def param_count(model) -> int:
    """Total scalar parameters of a StreamModel or ModelInstance."""
    return int(sum(t.size for _, t in model.params()))


# --------------------------------------------------------------------------
# Checkpoints: magic "STNET1", then per-tensor records of
# (name length u32, name bytes, rank u32, extents u32..., float32 payload),
# all little-endian.
# --------------------------------------------------------------------------

_CHECKPOINT_MAGIC = b"STNET1"


def save_checkpoint(model, path) -> None:
    out = bytearray(_CHECKPOINT_MAGIC)
    for name, tensor in model.params():
        encoded = name.encode("utf-8")
        out += struct.pack("<I", len(encoded))
        out += encoded
        out += struct.pack("<I", tensor.data.ndim)
        out += struct.pack(f"<{tensor.data.ndim}I", *tensor.data.shape)
        out += tensor.data.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:6] != _CHECKPOINT_MAGIC:
        raise FormatError(f"bad checkpoint magic {data[:6]!r}")
    pos = 6
    tensors: dict[str, np.ndarray] = {}
    while pos < len(data):
        try:
            (name_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", data, pos)
            pos += 4
            shape = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            count = int(np.prod(shape, dtype=np.int64))
            arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
            pos += 4 * count
            tensors[name] = arr.reshape(shape).copy()
        except (struct.error, ValueError) as exc:
            raise FormatError(f"truncated checkpoint record near byte {pos}: {exc}") from exc
    return tensors


def load_checkpoint_into(model, path) -> None:
    """Assign checkpoint tensors to a freshly built model, checking shapes."""
    tensors = load_checkpoint(path)
    for name, tensor in model.params():
        if name not in tensors:
            raise FormatError(f"checkpoint is missing parameter {name!r}")
        if tensors[name].shape != tensor.data.shape:
            raise ShapeError(
                f"checkpoint parameter {name!r} has shape {tensors[name].shape}, "
                f"model expects {tensor.data.shape}"
            )
        tensor.data[...] = tensors[name]
