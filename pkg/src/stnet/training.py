"""Adam optimizer, training loop, and repeated-run experiment harness.

A run is one seeded training of a network: per epoch, a seeded shuffle,
minibatch forward/backward/Adam over all batches (final partial batch
included), then a full test-set evaluation; train loss and accuracy are
accumulated from the training batches themselves. An experiment repeats
R runs with seeds ``base_seed + run`` and aggregates per-epoch mean and
sample standard deviation, emitted as CSV and SVG.

Metric values are recorded at 6-decimal precision, which makes the CSV a
lossless serialization of a report: aggregates recomputed from the file
agree with the in-memory report to float64 round-off.

Defaults follow the experimental setup reproduced here: learning rate 1e-4
with beta1 = 0.99, beta2 = 0.9, epsilon = 1e-8 (note the unconventional
beta assignment; both are overridable), 100 epochs, 10 runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models as md
from .autograd import Tape, backward, softmax_cross_entropy
from .data_io import Dataset
from .errors import ShapeError, ValidationError
from .rng import RandomState, derive_seed

METRIC_NAMES = ("train_loss", "train_acc", "test_acc")


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-4
    beta1: float = 0.99
    beta2: float = 0.9
    epsilon: float = 1e-8
    batch_size: int = 32
    runs: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValidationError(f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.runs < 1:
            raise ValidationError(f"runs must be >= 1, got {self.runs}")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, config: TrainConfig):
    """One Adam update, in place; dtype follows the parameter arrays.

    m' = b1*m + (1-b1)*g;  v' = b2*v + (1-b2)*g^2;
    theta' = theta - lr * (m'/(1-b1^t)) / (sqrt(v'/(1-b2^t)) + eps).
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError(
            f"got {len(params)} params, {len(grads)} grads, {len(state.m)} state slots"
        )
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"param shape {p.shape} vs grad shape {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
    return params, state


@dataclass
class RunMetrics:
    """Per-epoch metrics of one seeded run (6-decimal precision)."""

    seed: int
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)


def _logits_fn(model):
    if isinstance(model, md.ModelInstance):
        return md.forward_logits
    return md.stream_forward_logits


def evaluate_accuracy(model, dataset: Dataset, batch_size: int = 64) -> float:
    """Fraction of samples whose argmax probability hits the label.

    Argmax ties break toward the lowest class index; the result does not
    depend on ``batch_size``.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot evaluate on an empty dataset")
    logits_fn = _logits_fn(model)
    hits = 0
    for start in range(0, len(dataset), batch_size):
        batch = dataset.images[start : start + batch_size]
        probs = md._softmax(logits_fn(model, batch).data)
        pred = probs.argmax(axis=1)  # ties resolve to the lowest class index
        hits += int((pred == dataset.labels[start : start + batch_size]).sum())
    return hits / len(dataset)


def train(
    model,
    train_set: Dataset,
    test_set: Dataset,
    config: TrainConfig,
    run_seed: int | None = None,
) -> RunMetrics:
    """One deterministic training run; returns per-epoch metrics."""
    if len(train_set) == 0 or len(test_set) == 0:
        raise ValidationError("train and test sets must be non-empty")
    seed = config.base_seed if run_seed is None else run_seed
    logits_fn = _logits_fn(model)
    tensors = [t for _, t in model.params()]
    params = [t.data for t in tensors]
    state = AdamState.for_params(params)
    n = len(train_set)
    metrics = RunMetrics(seed=seed)
    for epoch in range(config.epochs):
        order = RandomState(derive_seed(seed, epoch)).permutation(n)
        loss_sum = 0.0
        hits = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            for t in tensors:
                t.zero_grad()
            with Tape() as tape:
                logits = logits_fn(model, train_set.images[idx])
                loss, probs = softmax_cross_entropy(logits, train_set.labels[idx])
            backward(loss, tape)
            adam_step(params, [t.grad for t in tensors], state, config)
            loss_sum += float(loss.data) * len(idx)
            hits += int((probs.data.argmax(axis=1) == train_set.labels[idx]).sum())
        metrics.train_loss.append(round(loss_sum / n, 6))
        metrics.train_acc.append(round(hits / n, 6))
        metrics.test_acc.append(round(evaluate_accuracy(model, test_set), 6))
    return metrics


# --------------------------------------------------------------------------
# Experiment aggregation and report files.
# --------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    """R runs plus per-epoch mean and sample standard deviation per metric."""

    runs: list[RunMetrics]
    mean: dict[str, list[float]] = field(default_factory=dict)
    std: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.runs:
            raise ValidationError("a report needs at least one run")
        if not self.mean:
            for name in METRIC_NAMES:
                rows = np.array([getattr(r, name) for r in self.runs], dtype=np.float64)
                self.mean[name] = rows.mean(axis=0).tolist()
                if rows.shape[0] > 1:
                    self.std[name] = rows.std(axis=0, ddof=1).tolist()
                else:
                    self.std[name] = [0.0] * rows.shape[1]

    @property
    def epochs(self) -> int:
        return len(self.runs[0].train_loss)


def emit_csv(report: ExperimentReport, path) -> None:
    """Write ``run,epoch,train_loss,train_acc,test_acc`` rows (epoch 1-based)."""
    lines = ["run,epoch,train_loss,train_acc,test_acc"]
    for ri, run in enumerate(report.runs):
        for e in range(len(run.train_loss)):
            lines.append(
                f"{ri},{e + 1},{run.train_loss[e]:.6f},{run.train_acc[e]:.6f},{run.test_acc[e]:.6f}"
            )
    Path(path).write_bytes(("\n".join(lines) + "\n").encode())


def parse_metrics_csv(path) -> ExperimentReport:
    """Rebuild a report from a metrics CSV (run seeds are not stored there)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "run,epoch,train_loss,train_acc,test_acc":
        raise ValidationError(f"{path} is not a metrics CSV (bad header)")
    runs: dict[int, RunMetrics] = {}
    for ln in lines[1:]:
        run_s, _epoch, loss_s, tr_s, te_s = ln.split(",")
        rm = runs.setdefault(int(run_s), RunMetrics(seed=-1))
        rm.train_loss.append(float(loss_s))
        rm.train_acc.append(float(tr_s))
        rm.test_acc.append(float(te_s))
    return ExperimentReport(runs=[runs[k] for k in sorted(runs)])


def emit_svg_plot(report: ExperimentReport, metric: str, path) -> None:
    """Standalone SVG: per-epoch mean polyline over a ±1 std band."""
    if metric not in METRIC_NAMES:
        raise ValidationError(f"unknown metric {metric!r}; expected one of {METRIC_NAMES}")
    mean = report.mean[metric]
    std = report.std[metric]
    epochs = len(mean)
    width, height, pad = 640, 420, 60.0
    lo = min(m - s for m, s in zip(mean, std))
    hi = max(m + s for m, s in zip(mean, std))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    margin = 0.05 * (hi - lo)
    lo, hi = lo - margin, hi + margin

    def px(e: int) -> float:  # epoch -> x pixel (single epoch sits mid-axis)
        frac = 0.5 if epochs == 1 else e / (epochs - 1)
        return pad + frac * (width - 2 * pad)

    def py(v: float) -> float:
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    band = [f"{px(e):.2f},{py(mean[e] + std[e]):.2f}" for e in range(epochs)]
    band += [f"{px(e):.2f},{py(mean[e] - std[e]):.2f}" for e in reversed(range(epochs))]
    line = " ".join(f"{px(e):.2f},{py(mean[e]):.2f}" for e in range(epochs))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<polygon points="{" ".join(band)}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>',
        f'<polyline points="{line}" fill="none" stroke="#08519c" stroke-width="2"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for i in range(5):
        v = lo + (hi - lo) * i / 4
        y = py(v)
        parts.append(
            f'<text x="{pad - 6:.2f}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{v:.4g}</text>'
        )
    for e in sorted({0, epochs // 2, epochs - 1}):
        parts.append(
            f'<text x="{px(e):.2f}" y="{height - pad + 16:.2f}" font-size="11" '
            f'text-anchor="middle">{e + 1}</text>'
        )
    parts.append(
        f'<text x="{width / 2:.2f}" y="{height - 18:.2f}" font-size="13" text-anchor="middle">epoch</text>'
    )
    parts.append(
        f'<text x="18" y="{height / 2:.2f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {height / 2:.2f})">{metric}</text>'
    )
    parts.append("</svg>")
    Path(path).write_bytes(("\n".join(parts) + "\n").encode())
