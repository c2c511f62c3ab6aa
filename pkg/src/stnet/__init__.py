"""Multi-stream convolutional classifiers over image intensity slices.

A streaming network splits each input image into disjoint intensity slices,
feeds slice i to CNN stream i, concatenates the stream features, and
classifies with a joint dense + softmax head. The package bundles the
minimal autodiff engine the networks run on, a corruption/low-light suite,
bit-exact dataset parsers, and a deterministic repeated-run trainer.
"""

from .autograd import (
    Tape,
    Tensor,
    backward,
    conv2d,
    dense,
    gradient_check,
    maxpool2,
    relu,
    run_gradient_check_suite,
    softmax_cross_entropy,
)
from .corruptions import (
    CorruptionSpec,
    apply_pipeline,
    corrupt_images,
    gamma_lowlight,
    photometric,
    pixelate,
    statistical_noise,
    zero_noise,
)
from .data_io import (
    Dataset,
    load_npy_pair,
    load_ppm_dir,
    parse_cifar10_binary,
    parse_npy,
    parse_ppm,
    resize_bilinear,
    split,
    write_cifar10_binary,
    write_npy,
    write_ppm,
    write_ppm_dir,
)
from .errors import (
    ConfigurationError,
    FormatError,
    ShapeError,
    StnetError,
    ValidationError,
)
from .experiment import (
    ExperimentConfig,
    load_experiment_config,
    run_experiment,
    run_experiment_on,
)
from .models import (
    ModelInstance,
    NetworkSpec,
    StreamSpec,
    build_scaled_vgg16,
    build_simple_cnn,
    build_streaming_network,
    forward,
    forward_logits,
    load_checkpoint,
    load_checkpoint_into,
    param_count,
    save_checkpoint,
    stream_forward,
    stream_forward_logits,
)
from .rng import RandomState, derive_seed
from .slicing import SliceSpec, SliceStack, band_of, decompose, decompose_batch, reconstruct
from .synthetic import make_synthetic_dataset
from .training import (
    AdamState,
    ExperimentReport,
    RunMetrics,
    TrainConfig,
    adam_step,
    emit_csv,
    emit_svg_plot,
    evaluate_accuracy,
    parse_metrics_csv,
    train,
)

__version__ = "0.1.0"
