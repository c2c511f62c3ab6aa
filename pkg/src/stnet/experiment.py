"""JSON experiment configs and the end-to-end repeated-run experiment.

A config names one dataset source, an optional resize, a seeded train/test
split, the network (stream list + class count), per-split corruption
pipelines, and the training section. Unknown keys anywhere are errors, so
typos fail loudly. See README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corruptions import PARAM_NAMES, CorruptionSpec, corrupt_images
from .data_io import Dataset, load_npy_pair, load_ppm_dir, parse_cifar10_binary, resize_bilinear, split
from .errors import ConfigurationError
from .models import NetworkSpec, StreamSpec, build_streaming_network, save_checkpoint
from .slicing import SliceSpec
from .training import (
    METRIC_NAMES,
    ExperimentReport,
    TrainConfig,
    emit_csv,
    emit_svg_plot,
    train,
)

DATASET_KINDS = ("cifar10", "ppm_dir", "npy_pair")

_TRAIN_KEYS = {
    "epochs": "epochs",
    "lr": "learning_rate",
    "beta1": "beta1",
    "beta2": "beta2",
    "eps": "epsilon",
    "batch_size": "batch_size",
    "runs": "runs",
    "base_seed": "base_seed",
}


@dataclass
class DatasetConfig:
    kind: str
    path: str | None = None
    paths: tuple[str, ...] = ()
    images_path: str | None = None
    labels_path: str | None = None


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig
    n_train: int
    n_test: int
    split_seed: int
    streams: tuple[StreamSpec, ...]
    num_classes: int
    train_corruption: tuple[CorruptionSpec, ...] = ()
    test_corruption: tuple[CorruptionSpec, ...] = ()
    resize: tuple[int, int] | None = None
    train: TrainConfig = field(default_factory=TrainConfig)


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def _parse_corruption_list(items, where: str) -> tuple[CorruptionSpec, ...]:
    if not isinstance(items, list):
        raise ConfigurationError(f"{where} must be a list of corruption specs")
    specs = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or "kind" not in item:
            raise ConfigurationError(f"{where}[{i}] must be an object with a 'kind' key")
        kind = item["kind"]
        if kind not in PARAM_NAMES:
            raise ConfigurationError(f"{where}[{i}].kind: unknown corruption {kind!r}")
        pname = PARAM_NAMES[kind]
        _require_keys(item, {"kind", "seed", pname}, f"{where}[{i}]")
        if pname not in item:
            raise ConfigurationError(f"{where}[{i}] ({kind}) requires parameter {pname!r}")
        specs.append(CorruptionSpec(kind, {pname: item[pname]}, seed=int(item.get("seed", 0))))
    return tuple(specs)


def load_experiment_config(path) -> ExperimentConfig:
    """Parse and validate a JSON experiment config; errors name the field."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    _require_keys(raw, {"dataset", "resize", "split", "model", "corruption", "train"}, "config")
    for key in ("dataset", "split", "model"):
        if key not in raw:
            raise ConfigurationError(f"config is missing required section {key!r}")

    ds = raw["dataset"]
    _require_keys(ds, {"kind", "path", "paths", "images_path", "labels_path"}, "dataset")
    kind = ds.get("kind")
    if kind not in DATASET_KINDS:
        raise ConfigurationError(f"dataset.kind must be one of {DATASET_KINDS}, got {kind!r}")
    if kind == "cifar10" and not (ds.get("path") or ds.get("paths")):
        raise ConfigurationError("dataset.path or dataset.paths is required for kind 'cifar10'")
    if kind == "ppm_dir" and not ds.get("path"):
        raise ConfigurationError("dataset.path is required for kind 'ppm_dir'")
    if kind == "npy_pair" and not (ds.get("images_path") and ds.get("labels_path")):
        raise ConfigurationError("dataset.images_path and dataset.labels_path are required for kind 'npy_pair'")
    dataset = DatasetConfig(
        kind=kind,
        path=ds.get("path"),
        paths=tuple(ds.get("paths", ())),
        images_path=ds.get("images_path"),
        labels_path=ds.get("labels_path"),
    )

    resize = None
    if "resize" in raw:
        _require_keys(raw["resize"], {"h", "w"}, "resize")
        try:
            resize = (int(raw["resize"]["h"]), int(raw["resize"]["w"]))
        except KeyError as exc:
            raise ConfigurationError(f"resize needs both 'h' and 'w' (missing {exc})") from exc

    sp = raw["split"]
    _require_keys(sp, {"n_train", "n_test", "seed"}, "split")
    for k in ("n_train", "n_test"):
        if k not in sp:
            raise ConfigurationError(f"split.{k} is required")

    mo = raw["model"]
    _require_keys(mo, {"streams", "num_classes"}, "model")
    if not isinstance(mo.get("streams"), list) or not mo["streams"]:
        raise ConfigurationError("model.streams must be a non-empty list")
    streams = []
    for i, s in enumerate(mo["streams"]):
        _require_keys(s, {"arch", "scale"}, f"model.streams[{i}]")
        if "arch" not in s:
            raise ConfigurationError(f"model.streams[{i}].arch is required")
        streams.append(StreamSpec(arch=s["arch"], scale=int(s.get("scale", 1))))
    if "num_classes" not in mo:
        raise ConfigurationError("model.num_classes is required")

    train_corr, test_corr = (), ()
    if "corruption" in raw:
        _require_keys(raw["corruption"], {"train", "test"}, "corruption")
        train_corr = _parse_corruption_list(raw["corruption"].get("train", []), "corruption.train")
        test_corr = _parse_corruption_list(raw["corruption"].get("test", []), "corruption.test")

    tr = raw.get("train", {})
    _require_keys(tr, set(_TRAIN_KEYS), "train")
    train_cfg = TrainConfig(**{_TRAIN_KEYS[k]: v for k, v in tr.items()})

    return ExperimentConfig(
        dataset=dataset,
        n_train=int(sp["n_train"]),
        n_test=int(sp["n_test"]),
        split_seed=int(sp.get("seed", 0)),
        streams=tuple(streams),
        num_classes=int(mo["num_classes"]),
        train_corruption=train_corr,
        test_corruption=test_corr,
        resize=resize,
        train=train_cfg,
    )


def load_dataset(cfg: DatasetConfig) -> Dataset:
    if cfg.kind == "cifar10":
        paths = list(cfg.paths) or [cfg.path]
        parts = [parse_cifar10_binary(Path(p).read_bytes()) for p in paths]
        return Dataset(
            np.concatenate([d.images for d in parts]),
            np.concatenate([d.labels for d in parts]),
            parts[0].class_names,
        )
    if cfg.kind == "ppm_dir":
        return load_ppm_dir(cfg.path)
    return load_npy_pair(cfg.images_path, cfg.labels_path)


def prepare_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Load, optionally resize, split, and corrupt the train/test sets."""
    data = load_dataset(cfg.dataset)
    if cfg.num_classes != len(data.class_names):
        raise ConfigurationError(
            f"model.num_classes = {cfg.num_classes} but the dataset has "
            f"{len(data.class_names)} classes"
        )
    if cfg.resize is not None:
        h, w = cfg.resize
        data = Dataset(
            np.stack([resize_bilinear(img, h, w) for img in data.images]),
            data.labels,
            data.class_names,
        )
    train_set, test_set = split(data, cfg.n_train, cfg.n_test, cfg.split_seed)
    if cfg.train_corruption:
        train_set = Dataset(
            corrupt_images(train_set.images, cfg.train_corruption),
            train_set.labels,
            train_set.class_names,
        )
    if cfg.test_corruption:
        test_set = Dataset(
            corrupt_images(test_set.images, cfg.test_corruption),
            test_set.labels,
            test_set.class_names,
        )
    return train_set, test_set


def network_spec(cfg: ExperimentConfig, input_shape) -> NetworkSpec:
    return NetworkSpec(
        streams=cfg.streams,
        slice_spec=SliceSpec(len(cfg.streams)),
        num_classes=cfg.num_classes,
        input_shape=tuple(input_shape),
    )


def run_experiment_on(
    train_set: Dataset,
    test_set: Dataset,
    spec: NetworkSpec,
    config: TrainConfig,
    run_seeds=None,
):
    """Execute R seeded runs on prepared datasets.

    Returns ``(report, final_model)``; the model is the trained instance of
    the last run, kept for optional checkpointing.
    """
    seeds = list(run_seeds) if run_seeds is not None else [
        config.base_seed + r for r in range(config.runs)
    ]
    runs = []
    model = None
    for seed in seeds:
        model = build_streaming_network(spec, seed=seed)
        runs.append(train(model, train_set, test_set, config, run_seed=seed))
    return ExperimentReport(runs=runs), model


def run_experiment(config_path, out_dir, checkpoint: bool = False) -> ExperimentReport:
    """Run the experiment described by a config file; write artifacts to out_dir.

    Writes ``metrics.csv`` plus one ``<metric>.svg`` per metric, and
    optionally ``checkpoint.stnet`` holding the final run's parameters.
    """
    cfg = load_experiment_config(config_path)
    train_set, test_set = prepare_datasets(cfg)
    spec = network_spec(cfg, train_set.images.shape[1:])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report, final_model = run_experiment_on(train_set, test_set, spec, cfg.train)
    emit_csv(report, out / "metrics.csv")
    for metric in METRIC_NAMES:
        emit_svg_plot(report, metric, out / f"{metric}.svg")
    if checkpoint:
        save_checkpoint(final_model, out / "checkpoint.stnet")
    return report
