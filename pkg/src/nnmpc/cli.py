"""Command-line orchestration: gen, train, simulate, compare.

Thin argparse wrappers over the benchmark harness. File and config
problems exit with code 2 and a message naming the offending path;
successful runs write deterministic artifacts (CSV and JSON) into the
output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import bench, datapipe, nn
from .errors import (
    ArgumentError,
    DataError,
    ModelFormatError,
    ModelShapeError,
)
from .plant import MsdParams, msd_raw_log

USAGE_ERROR = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config overriding the benchmark defaults")
    parser.add_argument("--seed", type=int, default=0, help="seed for every random choice in the run")
    parser.add_argument("--out", type=Path, required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnmpc",
        description="Neural-network model-predictive control benchmark tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate the plant excitation dataset")
    _add_common(p_gen)
    p_gen.add_argument("--plant", choices=["msd"], default="msd")

    p_train = sub.add_parser("train", help="train a forward model from a dataset CSV")
    _add_common(p_train)
    p_train.add_argument("--data", type=Path, required=True, help="dataset CSV from 'gen'")

    p_sim = sub.add_parser("simulate", help="closed-loop tracking run")
    _add_common(p_sim)
    p_sim.add_argument("--plant", choices=["msd"], default="msd")
    p_sim.add_argument("--controller", choices=["mpc", "pid"], default="mpc")
    p_sim.add_argument(
        "--path",
        choices=["step", "infinity", "pringle", "line", "swirl"],
        default="step",
    )
    p_sim.add_argument("--model", type=Path, default=None, help="model JSON (needed for mpc)")

    p_cmp = sub.add_parser("compare", help="run several controllers on one reference")
    _add_common(p_cmp)
    p_cmp.add_argument("--plant", choices=["msd"], default="msd")
    p_cmp.add_argument("--controllers", default="pid,mpc", help="comma-separated list")
    p_cmp.add_argument("--path", choices=["step"], default="step")
    p_cmp.add_argument("--model", type=Path, default=None)
    return parser


def cmd_gen(args) -> int:
    config = bench.load_config(args.config)
    args.out.mkdir(parents=True, exist_ok=True)
    params = MsdParams(**config["plant"])
    hold = config["gen"].get("hold_dt")
    log = msd_raw_log(
        params,
        t_end=float(config["gen"]["t_end"]),
        dt=float(config["gen"]["dt"]),
        hold_dt=None if hold is None else float(hold),
    )
    dest = args.out / "dataset.csv"
    datapipe.write_raw_csv(dest, log)
    print(f"wrote {log.rows} rows to {dest}")
    return 0


def cmd_train(args) -> int:
    config = bench.load_config(args.config)
    if not args.data.exists():
        print(f"error: dataset file not found: {args.data}", file=sys.stderr)
        return USAGE_ERROR
    args.out.mkdir(parents=True, exist_ok=True)
    log = datapipe.read_raw_csv(args.data)
    result = bench.train_msd_model(log, config, seed=args.seed)
    model_path = args.out / "model.json"
    nn.save_model(result.model, model_path)
    summary = {
        "seed": args.seed,
        "params": nn.param_count(result.model),
        "final_train_loss": result.loss_history[-1] if result.loss_history else None,
        "fold_mses": [list(pair) for pair in result.fold_mses],
        "last_fold_test_mse": result.fold_mses[-1][1] if result.fold_mses else None,
    }
    (args.out / "train_report.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(f"wrote {model_path} ({summary['params']} parameters)")
    if summary["last_fold_test_mse"] is not None:
        print(f"last-fold test mse: {summary['last_fold_test_mse']:.3e}")
    return 0


def _load_model_or_fail(path: Path | None):
    if path is None:
        print("error: --model is required for the mpc controller", file=sys.stderr)
        return None
    if not path.exists():
        print(f"error: model file not found: {path}", file=sys.stderr)
        return None
    return nn.load_model(path)


def _simulate_one(config: dict, controller: str, model, out_dir: Path, seed: int) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    log = bench.run_msd(config, controller=controller, model=model)
    report = bench.build_report(log, config, model if controller == "mpc" else None, seed)
    bench.write_run_csv(out_dir / "run.csv", log)
    bench.write_report(out_dir / "report.json", report)
    return report


def cmd_simulate(args) -> int:
    config = bench.load_config(args.config)
    config["path"]["kind"] = args.path
    if args.path != "step":
        print(
            f"error: plant 'msd' is one-dimensional; only the step path applies, got {args.path!r}",
            file=sys.stderr,
        )
        return USAGE_ERROR
    model = None
    if args.controller == "mpc":
        model = _load_model_or_fail(args.model)
        if model is None:
            return USAGE_ERROR
    report = _simulate_one(config, args.controller, model, args.out, args.seed)
    print(f"{args.controller}: rmse {report['rmse']:.4g} m over {report['duration_s']:.3g} s")
    return 0


def cmd_compare(args) -> int:
    config = bench.load_config(args.config)
    controllers = [c.strip() for c in args.controllers.split(",") if c.strip()]
    if not controllers:
        print("error: --controllers list is empty", file=sys.stderr)
        return USAGE_ERROR
    model = None
    if "mpc" in controllers:
        model = _load_model_or_fail(args.model)
        if model is None:
            return USAGE_ERROR
    summary = {}
    for controller in controllers:
        if controller not in ("mpc", "pid"):
            print(f"error: unknown controller {controller!r}", file=sys.stderr)
            return USAGE_ERROR
        report = _simulate_one(
            config, controller, model if controller == "mpc" else None,
            args.out / controller, args.seed,
        )
        summary[controller] = report
        print(f"{controller}: rmse {report['rmse']:.4g} m")
    bench.write_report(args.out / "compare.json", summary)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": cmd_gen,
        "train": cmd_train,
        "simulate": cmd_simulate,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except (ModelFormatError, ModelShapeError, DataError, ArgumentError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
