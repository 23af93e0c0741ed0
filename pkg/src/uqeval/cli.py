"""Command line interface.

Subcommands: generate, train, eval, stability, bias, sparsify,
density-grid.  Exit codes: 0 on success, 1 on usage errors (with usage
text on stderr), 2 on runtime failures.  Every run emits a RunManifest:
written next to the artifact as <out>.manifest.json, or to stderr when
the result goes to stdout.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .datasets import DatasetKind, Split, generate, write_csv
from .metrics import CalibrationConfig, EvalConfig, RankTieMode, REPORT_HEADER, WeightMode
from .experiments import (
    bias_experiment,
    convergence_experiment,
    density_grid_csv,
    guarded_report,
    make_manifest,
    sha256_file,
    sparsification_csv,
    table_csv,
    TableRow,
)
from .predictors import (
    TrainConfig,
    TrueDistributionPredictor,
    load_ensemble,
    make_records,
    save_ensemble,
    train_ensemble,
)

DEFAULT_TRAIN_N = 10_000
DEFAULT_TEST_N = 2**16


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}error: {message}")


def _add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--thresholds", type=int, default=100, metavar="M",
                        help="number of calibration thresholds (default 100)")
    parser.add_argument("--weights", choices=[m.value for m in WeightMode],
                        default=WeightMode.PAPER.value, help="calibration weighting")
    parser.add_argument("--tie-mode", choices=[m.value for m in RankTieMode],
                        default=RankTieMode.PAPER.value, help="rank tie handling")


def _add_predictor_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--predictor", choices=["oracle", "ensemble"], default="oracle")
    parser.add_argument("--model-path", help="trained model file (required for ensemble)")


def build_parser() -> _Parser:
    parser = _Parser(prog="uqeval", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    kinds = [k.value for k in DatasetKind]

    p = sub.add_parser("generate", help="write a dataset CSV")
    p.add_argument("--dataset", choices=kinds, required=True)
    p.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)
    p.add_argument("--n", type=int, default=None,
                   help=f"sample count (default {DEFAULT_TRAIN_N} train, {DEFAULT_TEST_N} test)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a deep ensemble and save it")
    p.add_argument("--dataset", choices=kinds, required=True)
    p.add_argument("--n", type=int, default=DEFAULT_TRAIN_N)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="metric report for one predictor on one test set")
    p.add_argument("--dataset", choices=kinds, required=True)
    p.add_argument("--n", type=int, default=DEFAULT_TEST_N)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report CSV path (default: print to stdout)")
    _add_predictor_flags(p)
    _add_eval_flags(p)

    p = sub.add_parser("stability", help="convergence study on nested test subsets")
    p.add_argument("--dataset", choices=kinds, default=DatasetKind.HETEROSCEDASTIC.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_predictor_flags(p)

    p = sub.add_parser("bias", help="replicate-mean study across test set sizes")
    p.add_argument("--dataset", choices=kinds, default=DatasetKind.HETEROSCEDASTIC.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--out", required=True)
    _add_predictor_flags(p)

    p = sub.add_parser("sparsify", help="write sparsification curve CSV")
    p.add_argument("--dataset", choices=kinds, required=True)
    p.add_argument("--n", type=int, default=DEFAULT_TEST_N)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_predictor_flags(p)

    p = sub.add_parser("density-grid", help="write log predictive density grid CSV")
    p.add_argument("--dataset", choices=kinds, required=True)
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--y-min", type=float, default=-2.0)
    p.add_argument("--y-max", type=float, default=2.0)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--ny", type=int, default=200)
    p.add_argument("--out", required=True)
    _add_predictor_flags(p)

    return parser


def _predictor(args) -> tuple[object, dict]:
    kind = DatasetKind(args.dataset)
    if args.predictor == "oracle":
        return TrueDistributionPredictor(kind), {"predictor": "oracle"}
    if not args.model_path:
        raise UsageError("error: --model-path is required with --predictor ensemble")
    return load_ensemble(args.model_path), {
        "predictor": "ensemble",
        "model_path": str(args.model_path),
        "model_sha256": sha256_file(args.model_path),
    }


def _eval_config(args) -> EvalConfig:
    if args.thresholds < 1:
        raise UsageError("error: --thresholds must be at least 1")
    return EvalConfig(
        calibration=CalibrationConfig(
            thresholds=np.linspace(0.0, 1.0, args.thresholds),
            weight_mode=WeightMode(args.weights),
        ),
        rank_tie_mode=RankTieMode(args.tie_mode),
    )


def _emit(command: str, argv: list[str], params: dict, text: str, out: str | None) -> None:
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        manifest = make_manifest(command, argv, params, [out])
        with open(f"{out}.manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest.to_json())
    else:
        sys.stdout.write(text)
        sys.stderr.write(make_manifest(command, argv, params, []).to_json())


def _cmd_generate(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    split = Split(args.split)
    n = args.n if args.n is not None else (
        DEFAULT_TRAIN_N if split is Split.TRAIN else DEFAULT_TEST_N
    )
    data = generate(kind, split, n, args.seed)
    write_csv(data, args.out)
    params = {"dataset": kind.value, "split": split.value, "n": n, "seed": args.seed}
    manifest = make_manifest("generate", argv, params, [args.out])
    with open(f"{args.out}.manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())


def _cmd_train(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    data = generate(kind, Split.TRAIN, args.n, args.seed)
    config = TrainConfig(seed=args.seed)
    predictor = train_ensemble(data, config)
    save_ensemble(predictor, args.out)
    params = {
        "dataset": kind.value, "n": args.n, "seed": args.seed,
        "ensemble_size": config.ensemble_size, "epochs": config.epochs,
        "batch_size": config.batch_size, "learning_rate": config.adam.learning_rate,
    }
    manifest = make_manifest("train", argv, params, [args.out])
    with open(f"{args.out}.manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())


def _cmd_eval(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    predictor, pparams = _predictor(args)
    config = _eval_config(args)
    data = generate(kind, Split.TEST, args.n, args.seed)
    report = guarded_report(make_records(predictor, data), config)
    text = table_csv((TableRow(kind.value, pparams["predictor"], report),))
    params = {
        "dataset": kind.value, "n": args.n, "seed": args.seed,
        "thresholds": args.thresholds, "weights": args.weights,
        "tie_mode": args.tie_mode, **pparams,
    }
    _emit("eval", argv, params, text, args.out)


def _cmd_stability(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    predictor, pparams = _predictor(args)
    result = convergence_experiment(predictor, kind, args.seed)
    params = {"dataset": kind.value, "seed": args.seed, **pparams}
    _emit("stability", argv, params, result.to_csv(), args.out)


def _cmd_bias(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    predictor, pparams = _predictor(args)
    result = bias_experiment(predictor, kind, args.seed, replicates=args.replicates)
    params = {"dataset": kind.value, "seed": args.seed,
              "replicates": args.replicates, **pparams}
    _emit("bias", argv, params, result.to_csv(mean_prefix=True), args.out)


def _cmd_sparsify(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    predictor, pparams = _predictor(args)
    text = sparsification_csv(predictor, kind, args.seed, args.n)
    params = {"dataset": kind.value, "n": args.n, "seed": args.seed, **pparams}
    _emit("sparsify", argv, params, text, args.out)


def _cmd_density_grid(args, argv) -> None:
    kind = DatasetKind(args.dataset)
    predictor, pparams = _predictor(args)
    lo, hi = kind.domain
    x_min = args.x_min if args.x_min is not None else lo
    x_max = args.x_max if args.x_max is not None else hi
    if args.nx < 1 or args.ny < 1 or x_min >= x_max or args.y_min >= args.y_max:
        raise UsageError("error: empty density grid")
    xs = np.linspace(x_min, x_max, args.nx)
    ys = np.linspace(args.y_min, args.y_max, args.ny)
    text = density_grid_csv(predictor, xs, ys)
    params = {"dataset": kind.value, "x_min": x_min, "x_max": x_max,
              "y_min": args.y_min, "y_max": args.y_max,
              "nx": args.nx, "ny": args.ny, **pparams}
    _emit("density-grid", argv, params, text, args.out)


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "stability": _cmd_stability,
    "bias": _cmd_bias,
    "sparsify": _cmd_sparsify,
    "density-grid": _cmd_density_grid,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"{parser.format_usage()}error: a command is required")
        _COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
