"""Tape-based reverse-mode autodiff over dense float32 arrays.

The engine records operations onto an explicit :class:`Tape` while one is
active (``with Tape() as tape: ...``), then :func:`backward` replays the
records in reverse to accumulate gradients on every ``requires_grad`` leaf.
Only the handful of primitives the stream networks need are provided.

Storage and compute are 32-bit; reductions (bias sums, loss means) and the
finite differences in :func:`gradient_check` accumulate in 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ShapeError, ValidationError
from .rng import RandomState, derive_seed


class Tensor:
    """Dense N-dimensional float32 array with an optional gradient buffer.

    ``grad`` exists (zero-filled) exactly when ``requires_grad`` is True and
    always matches ``data`` in shape.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float32)  # asarray keeps 0-d scalars 0-d
        self.data = arr if arr.flags["C_CONTIGUOUS"] else np.ascontiguousarray(arr)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def _require_grad(self) -> None:
        if not self.requires_grad:
            self.requires_grad = True
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={tuple(self.shape)}, requires_grad={self.requires_grad})"


@dataclass
class OpRecord:
    """One recorded operation: kind, operand identities, saved values."""

    kind: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    ctx: tuple


class Tape:
    """Ordered operation record for one forward pass; a context manager."""

    def __init__(self):
        self.records: list[OpRecord] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE.remove(self)


_ACTIVE: list[Tape] = []


def _record(kind: str, inputs: tuple[Tensor, ...], output: Tensor, ctx: tuple) -> None:
    if _ACTIVE and any(t.requires_grad for t in inputs):
        output._require_grad()
        _ACTIVE[-1].records.append(OpRecord(kind, inputs, output, ctx))


# --------------------------------------------------------------------------
# Dtype-preserving kernels. The engine calls them on float32 data; the
# finite-difference side of gradient_check calls them on float64 copies.
# --------------------------------------------------------------------------


_IM2COL_INDEX_CACHE: dict[tuple, np.ndarray] = {}


def _im2col_indices(c: int, h: int, w: int, kh: int, kw: int) -> np.ndarray:
    """Gather map (H*W, C*kh*kw) into a flattened padded (C, Hp, Wp) sample."""
    key = (c, h, w, kh, kw)
    idx = _IM2COL_INDEX_CACHE.get(key)
    if idx is None:
        hp, wp = h + 2 * (kh // 2), w + 2 * (kw // 2)
        yy, xx, cc, ii, jj = np.ix_(
            np.arange(h), np.arange(w), np.arange(c), np.arange(kh), np.arange(kw)
        )
        idx = ((cc * hp + yy + ii) * wp + (xx + jj)).reshape(h * w, c * kh * kw).astype(np.intp)
        _IM2COL_INDEX_CACHE[key] = idx
    return idx


def conv2d_kernel(
    x: np.ndarray, w: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, np.ndarray | None]:
    """Same-padding stride-1 convolution; returns (output, im2col matrix).

    1x1 kernels take a pure channel-matmul path and return cols=None.
    """
    n, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    if kh == 1 and kw == 1:
        out = np.matmul(w.reshape(f, c), x.reshape(n, c, h * wd)) + b[:, None]
        return out.reshape(n, f, h, wd), None
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    idx = _im2col_indices(c, h, wd, kh, kw)
    cols = xp.reshape(n, -1)[:, idx].reshape(n * h * wd, c * kh * kw)
    out = cols @ w.reshape(f, -1).T + b
    return np.ascontiguousarray(out.reshape(n, h, wd, f).transpose(0, 3, 1, 2)), cols


def conv2d_backward_kernel(
    g: np.ndarray,
    cols: np.ndarray | None,
    x: np.ndarray,
    w: np.ndarray,
    need_dx: bool,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    n, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    if kh == 1 and kw == 1:
        g2 = g.reshape(n, f, h * wd)
        x2 = x.reshape(n, c, h * wd)
        dw = np.matmul(g2, x2.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
        db = g2.sum(axis=(0, 2), dtype=np.float64).astype(g.dtype)
        dx = np.matmul(w.reshape(f, c).T, g2).reshape(x.shape) if need_dx else None
        return dx, dw, db
    ph, pw = kh // 2, kw // 2
    g2 = g.transpose(0, 2, 3, 1).reshape(n * h * wd, f)
    dw = (g2.T @ cols).reshape(w.shape)
    db = g2.sum(axis=0, dtype=np.float64).astype(g.dtype)
    dx = None
    if need_dx:
        dwin = (g2 @ w.reshape(f, -1)).reshape(n, h, wd, c, kh, kw)
        dxp = np.zeros((n, c, h + 2 * ph, wd + 2 * pw), dtype=g.dtype)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i : i + h, j : j + wd] += dwin[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, ph : ph + h, pw : pw + wd]
    return dx, dw, db


def maxpool2_kernel(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping 2x2 max pooling; returns (output, argmax indices)."""
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    t = x[:, :, : 2 * h2, : 2 * w2].reshape(n, c, h2, 2, w2, 2)
    t = t.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
    idx = t.argmax(axis=-1)  # first index wins ties, row-major window order
    out = np.take_along_axis(t, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool2_backward_kernel(g: np.ndarray, idx: np.ndarray, x_shape: tuple[int, ...]) -> np.ndarray:
    n, c, h, w = x_shape
    h2, w2 = h // 2, w // 2
    dt = np.zeros((n, c, h2, w2, 4), dtype=g.dtype)
    np.put_along_axis(dt, idx[..., None], g[..., None], axis=-1)
    dx = np.zeros(x_shape, dtype=g.dtype)
    dx[:, :, : 2 * h2, : 2 * w2] = (
        dt.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)
    )
    return dx


def dense_kernel(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def softmax_ce_kernel(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Stable row-wise softmax + mean NLL in 64-bit; returns (loss, probs)."""
    z = logits.astype(np.float64, copy=True)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e.sum(axis=1, keepdims=True)
    probs = e / s
    nll = np.log(s[:, 0]) - z[np.arange(len(labels)), labels]
    return float(nll.mean()), probs


# --------------------------------------------------------------------------
# Recorded operations.
# --------------------------------------------------------------------------


def conv2d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """2-D convolution, same padding, stride 1: N×C×H×W -> N×F×H×W."""
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d input and weight, got {x.shape} and {w.shape}")
    f, cw, kh, kw = w.shape
    if x.shape[1] != cw:
        raise ShapeError(f"conv2d channel mismatch: input {x.shape} vs weight {w.shape}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ConfigurationError(f"conv2d kernel extents must be odd, got {kh}x{kw}")
    if b.shape != (f,):
        raise ShapeError(f"conv2d bias must have shape ({f},), got {b.shape}")
    out_data, cols = conv2d_kernel(x.data, w.data, b.data)
    out = Tensor(out_data)
    _record("conv2d", (x, w, b), out, (cols,))
    return out


def _conv2d_backward(g, rec, needs):
    (cols,) = rec.ctx
    x, w, _ = rec.inputs
    return conv2d_backward_kernel(g, cols, x.data, w.data, needs[0])


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling, stride 2; trailing odd row/column dropped."""
    if x.data.ndim != 4:
        raise ShapeError(f"maxpool2 expects 4-d input, got {x.shape}")
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ConfigurationError(f"maxpool2 needs spatial extent >= 2, got {x.shape}")
    out_data, idx = maxpool2_kernel(x.data)
    out = Tensor(out_data)
    _record("maxpool2", (x,), out, (idx, x.shape))
    return out


def _maxpool2_backward(g, rec, needs):
    idx, x_shape = rec.ctx
    return (maxpool2_backward_kernel(g, idx, x_shape),)


def relu(x: Tensor) -> Tensor:
    """Elementwise max(x, 0)."""
    out = Tensor(np.maximum(x.data, 0.0))
    _record("relu", (x,), out, (x.data > 0.0,))
    return out


def _relu_backward(g, rec, needs):
    (mask,) = rec.ctx
    return (g * mask,)


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map N×D -> N×M with bias broadcast over rows."""
    if x.data.ndim != 2 or w.data.ndim != 2:
        raise ShapeError(f"dense expects 2-d input and weight, got {x.shape} and {w.shape}")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense inner dimensions disagree: input {x.shape} vs weight {w.shape}")
    if b.shape != (w.shape[1],):
        raise ShapeError(f"dense bias must have shape ({w.shape[1]},), got {b.shape}")
    out = Tensor(dense_kernel(x.data, w.data, b.data))
    _record("dense", (x, w, b), out, ())
    return out


def _dense_backward(g, rec, needs):
    x, w, _ = rec.inputs
    dx = g @ w.data.T if needs[0] else None
    dw = x.data.T @ g if needs[1] else None
    db = g.sum(axis=0, dtype=np.float64).astype(g.dtype) if needs[2] else None
    return dx, dw, db


def softmax_cross_entropy(logits: Tensor, labels: Sequence[int]) -> tuple[Tensor, Tensor]:
    """Mean NLL of the true class under row-wise softmax.

    Returns ``(loss, probs)``; the gradient of the loss w.r.t. the logits is
    ``(probs - onehot) / N``. Rows are stabilized by max subtraction.
    """
    if logits.data.ndim != 2:
        raise ShapeError(f"softmax_cross_entropy expects N×K logits, got {logits.shape}")
    n, k = logits.shape
    if n < 1:
        raise ValidationError("softmax_cross_entropy needs at least one row")
    lab = np.asarray(labels)
    if lab.shape != (n,) or not np.issubdtype(lab.dtype, np.integer):
        raise ValidationError(f"labels must be {n} integers, got {lab.shape} {lab.dtype}")
    if lab.min() < 0 or lab.max() >= k:
        raise ValidationError(f"label out of range [0, {k}): {int(lab[(lab < 0) | (lab >= k)][0])}")
    loss_val, probs64 = softmax_ce_kernel(logits.data, lab)
    loss = Tensor(np.float32(loss_val))
    probs = Tensor(probs64)
    _record("softmax_ce", (logits,), loss, (probs64, lab))
    return loss, probs


def _softmax_ce_backward(g, rec, needs):
    probs64, lab = rec.ctx
    n = len(lab)
    d = probs64.copy()
    d[np.arange(n), lab] -= 1.0
    return ((float(g) / n) * d.astype(np.float32),)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor(x.data.reshape(shape))
    _record("reshape", (x,), out, (x.shape,))
    return out


def _reshape_backward(g, rec, needs):
    (old_shape,) = rec.ctx
    return (g.reshape(old_shape),)


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    for p in parts[1:]:
        a, b = parts[0].shape, p.shape
        if len(a) != len(b) or any(x != y for i, (x, y) in enumerate(zip(a, b)) if i != axis):
            raise ShapeError(f"concat shapes incompatible along axis {axis}: {a} vs {b}")
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    sizes = tuple(p.shape[axis] for p in parts)
    _record("concat", tuple(parts), out, (sizes, axis))
    return out


def _concat_backward(g, rec, needs):
    sizes, axis = rec.ctx
    return tuple(np.split(g, np.cumsum(sizes)[:-1], axis=axis))


def scaled_sum(x: Tensor, weights: np.ndarray) -> Tensor:
    """Scalar projection sum(x * weights); weights are constant."""
    if weights.shape != x.shape:
        raise ShapeError(f"scaled_sum weights {weights.shape} must match input {x.shape}")
    val = np.float32((x.data.astype(np.float64) * weights).sum())
    out = Tensor(val)
    _record("scaled_sum", (x,), out, (weights,))
    return out


def _scaled_sum_backward(g, rec, needs):
    (weights,) = rec.ctx
    return ((float(g) * weights).astype(np.float32),)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"add shapes disagree: {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data)
    _record("add", (a, b), out, ())
    return out


def _add_backward(g, rec, needs):
    return g, g


BACKWARD_FUNCS: dict[str, Callable] = {
    "conv2d": _conv2d_backward,
    "maxpool2": _maxpool2_backward,
    "relu": _relu_backward,
    "dense": _dense_backward,
    "softmax_ce": _softmax_ce_backward,
    "reshape": _reshape_backward,
    "concat": _concat_backward,
    "scaled_sum": _scaled_sum_backward,
    "add": _add_backward,
}


def backward(loss: Tensor, tape: Tape) -> None:
    """Accumulate d(loss)/d(leaf) into every requires_grad leaf on the tape.

    Visits each record exactly once in reverse order; leaves that do not
    participate in the loss keep an exact-zero gradient.
    """
    if loss.data.shape != ():
        raise ValidationError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss.grad is None:
        return  # loss not connected to any requires_grad leaf
    loss.grad += np.float32(1.0)
    for rec in reversed(tape.records):
        g = rec.output.grad
        if g is None or not g.any():
            continue
        needs = [t.requires_grad for t in rec.inputs]
        grads = BACKWARD_FUNCS[rec.kind](g, rec, needs)
        for t, dg in zip(rec.inputs, grads):
            if t.requires_grad and dg is not None:
                t.grad += dg


# --------------------------------------------------------------------------
# Gradient checking.
# --------------------------------------------------------------------------


def _project_loss(out: Tensor, weights: np.ndarray) -> Tensor:
    return scaled_sum(out, weights)


def _sample_conv2d(rng: RandomState, eps: float):
    u = rng.uniforms(5)
    n, c, h, w = 1 + int(u[0] * 2), 1 + int(u[1] * 3), 3 + int(u[2] * 4), 3 + int(u[3] * 4)
    f = 1 + int(u[4] * 4)
    k = (1, 3, 5)[int(rng.uniforms(1)[0] * 3)]
    x = rng.uniforms(n * c * h * w).reshape(n, c, h, w) * 2 - 1
    wt = rng.uniforms(f * c * k * k).reshape(f, c, k, k) * 2 - 1
    b = rng.uniforms(f) * 2 - 1
    return [x, wt, b], None


def _sample_maxpool2(rng: RandomState, eps: float):
    u = rng.uniforms(4)
    n, c, h, w = 1 + int(u[0] * 2), 1 + int(u[1] * 3), 2 + int(u[2] * 6), 2 + int(u[3] * 6)
    # resample until window values are separated; eps nudges must not flip an argmax
    for attempt in range(1000):
        x = rng.uniforms(n * c * h * w).reshape(n, c, h, w) * 2 - 1
        t = x[:, :, : h // 2 * 2, : w // 2 * 2].reshape(n, c, h // 2, 2, w // 2, 2)
        t = t.transpose(0, 1, 2, 4, 3, 5).reshape(-1, 4)
        srt = np.sort(t, axis=1)
        if np.diff(srt, axis=1).min() > 10 * eps:
            return [x], None
    raise RuntimeError("could not sample tie-free maxpool input")


def _sample_relu(rng: RandomState, eps: float):
    u = rng.uniforms(3)
    shape = (1 + int(u[0] * 3), 1 + int(u[1] * 5), 1 + int(u[2] * 5))
    x = rng.uniforms(int(np.prod(shape))).reshape(shape) * 2 - 1
    x = np.where(x >= 0, x + 0.15, x - 0.15)  # keep |x| clear of the kink
    return [x], None


def _sample_dense(rng: RandomState, eps: float):
    u = rng.uniforms(3)
    n, d, m = 1 + int(u[0] * 4), 1 + int(u[1] * 6), 1 + int(u[2] * 6)
    x = rng.uniforms(n * d).reshape(n, d) * 2 - 1
    w = rng.uniforms(d * m).reshape(d, m) * 2 - 1
    b = rng.uniforms(m) * 2 - 1
    return [x, w, b], None


def _sample_softmax_ce(rng: RandomState, eps: float):
    u = rng.uniforms(2)
    n, k = 1 + int(u[0] * 4), 2 + int(u[1] * 9)
    logits = rng.uniforms(n * k).reshape(n, k) * 4 - 2
    labels = (rng.uniforms(n) * k).astype(np.int64)
    return [logits], labels


GRADCHECK_OPS = {
    "conv2d": (conv2d, lambda arrs, extra: conv2d_kernel(*arrs)[0], _sample_conv2d),
    "maxpool2": (maxpool2, lambda arrs, extra: maxpool2_kernel(*arrs)[0], _sample_maxpool2),
    "relu": (relu, lambda arrs, extra: np.maximum(arrs[0], 0.0), _sample_relu),
    "dense": (dense, lambda arrs, extra: dense_kernel(*arrs), _sample_dense),
    "softmax_cross_entropy": (
        softmax_cross_entropy,
        lambda arrs, extra: np.float64(softmax_ce_kernel(arrs[0], extra)[0]),
        _sample_softmax_ce,
    ),
}


def gradient_check(
    op: str,
    inputs: Sequence[np.ndarray] | None = None,
    extra=None,
    eps: float = 1e-3,
    seed: int = 0,
) -> float:
    """Compare analytic gradients against central finite differences.

    The analytic side runs the recorded op through the engine; the numeric
    side re-evaluates the op's kernel in 64-bit at ``x ± eps``. Returns the
    max over elements of ``|a - n| / max(|a|, |n|, 1e-8)``; the caller
    applies a threshold.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if op not in GRADCHECK_OPS:
        raise ValidationError(f"unknown op {op!r}; expected one of {sorted(GRADCHECK_OPS)}")
    engine_op, kernel, sampler = GRADCHECK_OPS[op]
    rng = RandomState(derive_seed(seed, list(GRADCHECK_OPS).index(op)))
    if inputs is None:
        inputs, extra = sampler(rng, eps)
    inputs = [np.asarray(a, dtype=np.float64) for a in inputs]

    # analytic gradients through the float32 engine
    tensors = [Tensor(a, requires_grad=True) for a in inputs]
    with Tape() as tape:
        if op == "softmax_cross_entropy":
            loss, _ = engine_op(tensors[0], extra)
            proj = None
        else:
            out = engine_op(*tensors)
            proj = rng.uniforms(out.size).reshape(out.shape) * 2 - 1
            loss = _project_loss(out, proj)
    backward(loss, tape)
    analytic = [t.grad.astype(np.float64) for t in tensors]

    def f(arrays: list[np.ndarray]) -> float:
        out = kernel(arrays, extra)
        return float(out) if proj is None else float((out * proj).sum())

    worst = 0.0
    for ai, arr in enumerate(inputs):
        flat = arr.reshape(-1)
        num = np.empty_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = f(inputs)
            flat[i] = orig - eps
            lo = f(inputs)
            flat[i] = orig
            num[i] = (hi - lo) / (2.0 * eps)
        a = analytic[ai].reshape(-1)
        rel = np.abs(a - num) / np.maximum(np.maximum(np.abs(a), np.abs(num)), 1e-8)
        worst = max(worst, float(rel.max()))
    return worst


def run_gradient_check_suite(cases_per_op: int = 5, eps: float = 1e-3, seed: int = 0):
    """Run every op at ``cases_per_op`` random shapes; yields (op, case, err)."""
    for op in GRADCHECK_OPS:
        for case in range(cases_per_op):
            yield op, case, gradient_check(op, eps=eps, seed=derive_seed(seed, case))
