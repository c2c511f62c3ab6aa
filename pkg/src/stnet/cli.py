"""Command-line interface: train, eval, slice, corrupt, gradcheck, report."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


from .autograd import run_gradient_check_suite
from .corruptions import PARAM_NAMES, CorruptionSpec, apply_pipeline
from .data_io import parse_ppm, write_ppm
from .errors import StnetError, ValidationError
from .experiment import load_experiment_config, network_spec, prepare_datasets, run_experiment
from .models import build_streaming_network, load_checkpoint_into
from .slicing import SliceSpec, decompose
from .training import emit_svg_plot, evaluate_accuracy, parse_metrics_csv


def _cmd_train(args) -> int:
    report = run_experiment(args.config, args.out, checkpoint=args.checkpoint)
    final = report.mean["test_acc"][-1]
    print(f"runs: {len(report.runs)}  epochs: {report.epochs}")
    print(f"final test_acc mean: {final:.6f}  std: {report.std['test_acc'][-1]:.6f}")
    print(f"artifacts written to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_experiment_config(args.config)
    train_set, test_set = prepare_datasets(cfg)
    model = build_streaming_network(network_spec(cfg, test_set.images.shape[1:]), seed=0)
    load_checkpoint_into(model, args.checkpoint)
    print(f"test_accuracy: {evaluate_accuracy(model, test_set):.6f}")
    return 0


def _cmd_slice(args) -> int:
    img = parse_ppm(Path(args.infile).read_bytes())
    stack = decompose(img, SliceSpec(args.n))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, sl in enumerate(stack.slices):
        (out / f"slice_{i}.ppm").write_bytes(write_ppm(sl))
    print(f"wrote {stack.n} slices to {out}")
    return 0


def _cmd_corrupt(args) -> int:
    pname = PARAM_NAMES[args.kind]
    value = getattr(args, pname)
    if value is None:
        raise ValidationError(f"corruption {args.kind!r} requires --{pname}")
    for flag in ("p", "sigma", "amount", "k", "gamma"):
        if flag != pname and getattr(args, flag) is not None:
            raise ValidationError(f"corruption {args.kind!r} does not take --{flag}")
    spec = CorruptionSpec(args.kind, {pname: value}, seed=args.seed)
    in_dir, out_dir = Path(args.indir), Path(args.out)
    files = sorted(p for p in in_dir.iterdir() if p.is_file() and p.suffix == ".ppm")
    if not files:
        raise ValidationError(f"no .ppm files found in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(files):
        img = parse_ppm(f.read_bytes())
        (out_dir / f.name).write_bytes(write_ppm(apply_pipeline(img, [spec], image_index=i)))
    print(f"corrupted {len(files)} images into {out_dir}")
    return 0


def _cmd_gradcheck(args) -> int:
    threshold = args.threshold
    ok = True
    for op, case, err in run_gradient_check_suite(cases_per_op=args.cases, seed=args.seed):
        status = "ok" if err < threshold else "FAIL"
        ok &= err < threshold
        print(f"{op:<24} case {case}  max_rel_err {err:.3e}  {status}")
    print("gradient check: " + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def _cmd_report(args) -> int:
    report = parse_metrics_csv(args.csv)
    emit_svg_plot(report, args.metric, args.svg)
    print(f"wrote {args.svg}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stnet",
        description="Multi-stream CNN classifiers over image intensity slices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a repeated-run training experiment")
    p.add_argument("--config", required=True, help="experiment JSON config")
    p.add_argument("--out", required=True, help="output directory for metrics/plots")
    p.add_argument("--checkpoint", action="store_true", help="save the final run's parameters")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a config's test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("slice", help="decompose a PPM image into intensity slices")
    p.add_argument("--n", type=int, required=True, help="slice count")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE.ppm")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_slice)

    p = sub.add_parser("corrupt", help="corrupt a directory of PPM images")
    p.add_argument("--kind", required=True, choices=sorted(PARAM_NAMES))
    p.add_argument("--p", type=float, help="fraction for zero_noise/impulse")
    p.add_argument("--sigma", type=float, help="strength for gaussian/speckle/shot")
    p.add_argument("--amount", type=float, help="amount for brightness/contrast/saturate")
    p.add_argument("--k", type=int, help="block size for pixelate")
    p.add_argument("--gamma", type=float, help="exponent for gamma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="indir", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("gradcheck", help="run the full gradient-check suite")
    p.add_argument("--cases", type=int, default=5, help="random shapes per op")
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("report", help="render an SVG plot from a metrics CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--svg", required=True)
    p.add_argument("--metric", required=True, choices=["train_loss", "train_acc", "test_acc"])
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
