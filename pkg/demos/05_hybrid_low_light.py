"""Hybrid streaming network facing gamma-darkened test images.

A hybrid network mixes stream architectures: here one width-scaled VGG16
stream plus five simple-CNN streams (six slices). It trains on normally lit
synthetic images and is evaluated on a gamma 5.8 low-light version of the
test set, next to a homogeneous simple-CNN baseline of the same width.
"""


from stnet import (
    CorruptionSpec,
    Dataset,
    NetworkSpec,
    SliceSpec,
    StreamSpec,
    TrainConfig,
    corrupt_images,
    evaluate_accuracy,
    make_synthetic_dataset,
    param_count,
    train,
)
from stnet.models import build_streaming_network

train_set = make_synthetic_dataset(40, num_classes=4, size=16, seed=5)
test_clean = make_synthetic_dataset(60, num_classes=4, size=16, seed=6)
dark = corrupt_images(test_clean.images, [CorruptionSpec("gamma", {"gamma": 5.8})])
test_dark = Dataset(dark, test_clean.labels, test_clean.class_names)
print(f"test images darkened: mean {test_clean.images.mean():.1f} -> {dark.mean():.1f}")

hybrid_spec = NetworkSpec(
    streams=(StreamSpec("vgg16_scaled", scale=8),) + (StreamSpec("simple_cnn"),) * 5,
    slice_spec=SliceSpec(6),
    num_classes=4,
    input_shape=(3, 16, 16),
)
plain_spec = NetworkSpec(
    streams=(StreamSpec("simple_cnn"),) * 6,
    slice_spec=SliceSpec(6),
    num_classes=4,
    input_shape=(3, 16, 16),
)

cfg = TrainConfig(epochs=20, learning_rate=5e-4, beta1=0.9, beta2=0.99, runs=1, base_seed=0)
for name, spec in [("hybrid (vgg16/8 + 5 simple)", hybrid_spec), ("homogeneous (6 simple)", plain_spec)]:
    model = build_streaming_network(spec, seed=1)
    print(f"\n{name}: {len(model.streams)} streams, {param_count(model):,} parameters")
    metrics = train(model, train_set, test_dark, cfg, run_seed=1)
    acc_clean = evaluate_accuracy(model, test_clean)
    print(f"  final train acc {metrics.train_acc[-1]:.3f}, "
          f"clean test acc {acc_clean:.3f}, low-light test acc {metrics.test_acc[-1]:.3f}")

print("\nper-stream feature widths (hybrid):",
      [s.feature_dim for s in build_streaming_network(hybrid_spec, seed=1).streams])
