"""Command-line interface: generate-data, train, evaluate, gradcheck, report.

Every RunConfig key can live in a plain-text config file (``key=value``
lines, ``#`` comments) passed with --config, and any key is overridable by
the CLI flag of the same name. The dataset root defaults to $QMC_DATA_DIR.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from qmconv.trainer import (
    DATASET_NAMES,
    RunConfig,
    evaluate,
    generate_data,
    gradcheck,
    report_resources,
    train,
)

_BOOL_KEYS = {"deterministic"}
_INT_KEYS = {"classes", "filter", "stride", "registers", "ancillas", "hidden",
             "batch", "epochs", "seed", "data_seed", "threads"}
_FLOAT_KEYS = {"lr"}


def parse_config_file(path) -> dict:
    """key=value lines with # comments; keys match the CLI flag names."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in {f.name for f in fields(RunConfig)}:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _BOOL_KEYS:
            values[key] = value.lower() in ("1", "true", "yes", "on")
        elif key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        else:
            values[key] = value
    return values


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--method", choices=["co", "pco", "pcot", "wev", "control"])
    parser.add_argument("--ansatz", choices=["u1", "u2"])
    parser.add_argument("--dataset", choices=list(DATASET_NAMES))
    parser.add_argument("--classes", type=int, help="CIFAR task size (2-10)")
    parser.add_argument("--filter", type=int, help="filter edge length F")
    parser.add_argument("--stride", type=int)
    parser.add_argument("--registers", type=int, help="working registers R (pco/pcot)")
    parser.add_argument("--ancillas", type=int, help="ancilla count A (pcot)")
    parser.add_argument("--hidden", type=int, help="hidden layer width")
    parser.add_argument("--batch", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--data-seed", dest="data_seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--deterministic", action="store_true", default=None)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--data-dir", dest="data_dir", help="dataset root")


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    config = RunConfig(**values)
    config.validate()
    return config


def cmd_generate_data(args) -> int:
    config = build_config(args)
    train_path, test_path = generate_data(config, args.out)
    print(f"wrote {train_path}\nwrote {test_path}")
    return 0


def cmd_train(args) -> int:
    config = build_config(args)
    result = train(config)
    final = result.metrics[-1]
    print(f"final test accuracy {final.test_acc:.4f}; model at {result.model_path}, "
          f"metrics at {result.csv_path}")
    return 0


def cmd_evaluate(args) -> int:
    config = build_config(args)
    accuracy, confusion = evaluate(args.model, config)
    print(f"accuracy {accuracy:.4f} over {int(confusion.sum())} samples")
    print("confusion matrix (rows = true class):")
    with np.printoptions(linewidth=200):
        print(confusion)
    return 0


def cmd_gradcheck(args) -> int:
    config = build_config(args)
    sweep = [float(s) for s in args.sweep.split(",")] if args.sweep else None
    report = gradcheck(config, flip_param=args.flip_param, sweep=sweep)
    return 0 if report["passed"] else 1


def cmd_report(args) -> int:
    config = build_config(args)
    info = report_resources(config)
    for key, value in info.items():
        print(f"{key}: {value}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qmconv",
        description="Multi-channel quantum convolution training harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write dataset container files")
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", help="train a model and write metrics CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="accuracy + confusion matrix of a saved model")
    _add_config_flags(p)
    p.add_argument("--model", required=True, help="path to a .qmm model file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck",
                       help="compare adjoint gradients against finite differences "
                            "(all quantum parameters, subsampled head weights)")
    _add_config_flags(p)
    p.add_argument("--sweep", help="comma-separated finite-difference steps")
    p.add_argument("--flip-param", dest="flip_param", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="circuit width/depth/gate counts")
    _add_config_flags(p)
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
