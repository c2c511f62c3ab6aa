"""Experiment configs: schema validation, dataset preparation, full runs."""

import json

import numpy as np
import pytest

from stnet.data_io import write_npy, write_ppm_dir
from stnet.errors import ConfigurationError
from stnet.experiment import (
    load_experiment_config,
    network_spec,
    prepare_datasets,
    run_experiment,
    run_experiment_on,
)
from stnet.synthetic import make_synthetic_dataset


def write_config(tmp_path, **overrides):
    data_dir = tmp_path / "data"
    if not data_dir.exists():
        write_ppm_dir(make_synthetic_dataset(24, num_classes=2, size=16, seed=1), data_dir)
    cfg = {
        "dataset": {"kind": "ppm_dir", "path": str(data_dir)},
        "split": {"n_train": 16, "n_test": 8, "seed": 3},
        "model": {"streams": [{"arch": "simple_cnn"}], "num_classes": 2},
        "corruption": {"train": [], "test": [{"kind": "zero_noise", "p": 0.1, "seed": 4}]},
        "train": {"epochs": 2, "lr": 5e-4, "beta1": 0.9, "beta2": 0.99, "runs": 2, "base_seed": 1},
    }
    cfg.update(overrides)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


class TestConfigValidation:
    def test_valid_config_loads(self, tmp_path):
        cfg = load_experiment_config(write_config(tmp_path))
        assert cfg.dataset.kind == "ppm_dir"
        assert cfg.n_train == 16 and cfg.n_test == 8
        assert cfg.train.epochs == 2 and cfg.train.runs == 2
        assert cfg.test_corruption[0].kind == "zero_noise"

    def test_empty_train_section_gives_reported_defaults(self, tmp_path):
        cfg = load_experiment_config(write_config(tmp_path, train={}))
        t = cfg.train
        assert (t.learning_rate, t.beta1, t.beta2, t.epsilon) == (1e-4, 0.99, 0.9, 1e-8)

    def test_unknown_top_level_key(self, tmp_path):
        path = write_config(tmp_path, optimizer={"kind": "sgd"})
        with pytest.raises(ConfigurationError, match="optimizer"):
            load_experiment_config(path)

    def test_unknown_nested_key(self, tmp_path):
        path = write_config(tmp_path, split={"n_train": 4, "n_test": 2, "sede": 0})
        with pytest.raises(ConfigurationError, match="sede"):
            load_experiment_config(path)

    def test_unknown_dataset_kind(self, tmp_path):
        path = write_config(tmp_path, dataset={"kind": "imagenet", "path": "/x"})
        with pytest.raises(ConfigurationError, match="imagenet"):
            load_experiment_config(path)

    def test_missing_section(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dataset": {"kind": "ppm_dir", "path": "x"}}))
        with pytest.raises(ConfigurationError, match="split"):
            load_experiment_config(path)

    def test_unknown_corruption_parameter(self, tmp_path):
        path = write_config(
            tmp_path, corruption={"test": [{"kind": "gaussian", "p": 0.1}]}
        )
        with pytest.raises(ConfigurationError):
            load_experiment_config(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError, match="JSON"):
            load_experiment_config(path)

    def test_num_classes_must_match_dataset(self, tmp_path):
        path = write_config(tmp_path, model={"streams": [{"arch": "simple_cnn"}], "num_classes": 7})
        with pytest.raises(ConfigurationError, match="num_classes"):
            prepare_datasets(load_experiment_config(path))


class TestPrepareDatasets:
    def test_split_sizes_and_corruption(self, tmp_path):
        cfg = load_experiment_config(write_config(tmp_path))
        train_set, test_set = prepare_datasets(cfg)
        assert len(train_set) == 16 and len(test_set) == 8
        # test pipeline zeroes floor(0.1*256) = 25 positions per image
        changed = (test_set.images == 0.0).all(axis=1).reshape(8, -1).sum(axis=1)
        assert (changed >= 25).all()

    def test_resize_applied(self, tmp_path):
        path = write_config(tmp_path, resize={"h": 12, "w": 20})
        train_set, _ = prepare_datasets(load_experiment_config(path))
        assert train_set.images.shape[1:] == (3, 12, 20)

    def test_npy_pair_source(self, tmp_path):
        ds = make_synthetic_dataset(12, num_classes=2, size=16, seed=2)
        (tmp_path / "imgs.npy").write_bytes(write_npy(ds.images.astype(np.float32)))
        (tmp_path / "labels.npy").write_bytes(write_npy(ds.labels.astype(np.float64)))
        cfg_path = write_config(
            tmp_path,
            dataset={
                "kind": "npy_pair",
                "images_path": str(tmp_path / "imgs.npy"),
                "labels_path": str(tmp_path / "labels.npy"),
            },
            split={"n_train": 8, "n_test": 4, "seed": 0},
        )
        train_set, test_set = prepare_datasets(load_experiment_config(cfg_path))
        assert len(train_set) == 8 and train_set.images.shape[1:] == (3, 16, 16)


class TestRunExperiment:
    def test_artifacts_and_report(self, tmp_path):
        path = write_config(tmp_path)
        out = tmp_path / "out"
        report = run_experiment(path, out, checkpoint=True)
        assert len(report.runs) == 2
        assert (out / "metrics.csv").exists()
        for metric in ("train_loss", "train_acc", "test_acc"):
            assert (out / f"{metric}.svg").exists()
        assert (out / "checkpoint.stnet").read_bytes()[:6] == b"STNET1"
        rows = (out / "metrics.csv").read_text().splitlines()
        assert len(rows) == 1 + 2 * 2  # header + runs * epochs

    def test_coerced_equal_seeds_zero_std(self, tmp_path):
        cfg = load_experiment_config(write_config(tmp_path))
        train_set, test_set = prepare_datasets(cfg)
        spec = network_spec(cfg, train_set.images.shape[1:])
        report, _ = run_experiment_on(train_set, test_set, spec, cfg.train, run_seeds=[7, 7])
        assert report.runs[0] == report.runs[1].__class__(**vars(report.runs[1]))
        for name in ("train_loss", "train_acc", "test_acc"):
            assert all(s == 0.0 for s in report.std[name])

    def test_run_seeds_default_to_base_seed_offsets(self, tmp_path):
        cfg = load_experiment_config(write_config(tmp_path))
        train_set, test_set = prepare_datasets(cfg)
        spec = network_spec(cfg, train_set.images.shape[1:])
        report, _ = run_experiment_on(train_set, test_set, spec, cfg.train)
        assert [r.seed for r in report.runs] == [1, 2]
