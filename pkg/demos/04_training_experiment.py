"""An end-to-end experiment: dataset on disk, JSON config, repeated runs.

Writes a small synthetic dataset as a PPM directory tree, describes the
experiment in the same JSON schema the `stnet train` command consumes
(train on clean images, test under 30% zero noise), runs it, and leaves
metrics.csv plus SVG curves behind. Everything is seeded, so re-running
produces byte-identical artifacts.
"""

import json
from pathlib import Path

from stnet import make_synthetic_dataset, run_experiment, write_ppm_dir

root = Path(__file__).parent / "output" / "experiment"
data_dir = root / "dataset"
out_dir = root / "artifacts"
root.mkdir(parents=True, exist_ok=True)

write_ppm_dir(make_synthetic_dataset(60, num_classes=4, size=16, seed=42), data_dir)

config = {
    "dataset": {"kind": "ppm_dir", "path": str(data_dir)},
    "split": {"n_train": 40, "n_test": 20, "seed": 0},
    "model": {"streams": [{"arch": "simple_cnn"}] * 3, "num_classes": 4},
    "corruption": {"train": [], "test": [{"kind": "zero_noise", "p": 0.3, "seed": 7}]},
    "train": {
        "epochs": 12,
        "lr": 5e-4,
        "beta1": 0.9,
        "beta2": 0.99,
        "batch_size": 32,
        "runs": 3,
        "base_seed": 0,
    },
}
config_path = root / "experiment.json"
config_path.write_text(json.dumps(config, indent=2))
print(f"config written to {config_path}")

report = run_experiment(config_path, out_dir, checkpoint=True)

print(f"\n{'epoch':>5} {'train_loss':>12} {'train_acc':>10} {'test_acc':>9} {'test_std':>9}")
for e in range(report.epochs):
    print(
        f"{e + 1:>5} {report.mean['train_loss'][e]:>12.4f} "
        f"{report.mean['train_acc'][e]:>10.3f} {report.mean['test_acc'][e]:>9.3f} "
        f"{report.std['test_acc'][e]:>9.3f}"
    )

print(f"\nfinal test accuracy over {len(report.runs)} runs: "
      f"{report.mean['test_acc'][-1]:.3f} ± {report.std['test_acc'][-1]:.3f}")
print(f"artifacts: {sorted(p.name for p in out_dir.iterdir())}")
print("same command again would reproduce metrics.csv byte for byte.")
