"""Command line entry points.

Subcommands: gen-data, train, eval-disentangle, ssoftmax-sweep, report.
Training runs are driven by a flat ``key = value`` config file; the
``UQD_SEED`` environment variable, when set, overrides the configured seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .calibration import (DEFAULT_N_GRID, DEFAULT_TRIALS, LogitDistSpec,
                          emit_sweep_csv, sweep)
from .datasets import (SoftLabelData, ToyRegressionData,
                       gen_soft_label_classification, gen_toy_regression)
from .evaluate import (build_report, emit_disentangled_csv, emit_report_csv,
                       eval_classification_disentangled,
                       eval_regression_disentangled)
from .methods import (UqMethodConfig, config_digest, load_models, save_models)
from .rng import RngStream
from .training import LossConfig, TrainConfig, _TASK_DEFAULTS, train

__all__ = ["main", "parse_config_text", "build_train_config"]

_EVAL_SALT = 0xE7A1

# every accepted config key with its parser; "loss" and task/method are
# plain strings
_CONFIG_KEYS = {
    "task": str,
    "method": str,
    "loss": str,
    "beta": float,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "adam_beta1": float,
    "adam_beta2": float,
    "forward_passes": int,
    "ensemble_size": int,
    "dropout_p": float,
    "dropconnect_p": float,
    "softmax_samples": int,
    "seed": int,
}


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys fail."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}")
    return values


def build_train_config(values: dict, env: dict | None = None) -> TrainConfig:
    """Assemble a TrainConfig, applying per-task defaults and UQD_SEED."""
    env = os.environ if env is None else env
    values = dict(values)
    for required in ("task", "method", "loss"):
        if required not in values:
            raise ValueError(f"config is missing {required!r}")
    task = values.pop("task")
    if task not in _TASK_DEFAULTS:
        raise ValueError(f"unknown task {task!r}")
    loss = LossConfig(kind=values.pop("loss"), beta=values.pop("beta", None))
    uq_kwargs = {"kind": values.pop("method")}
    for key in ("forward_passes", "ensemble_size", "dropout_p",
                "dropconnect_p"):
        if key in values:
            uq_kwargs[key] = values.pop(key)
    uq = UqMethodConfig(**uq_kwargs)
    seed = values.pop("seed", 0)
    if "UQD_SEED" in env:
        seed = int(env["UQD_SEED"])
    default_epochs, default_batch = _TASK_DEFAULTS[task]
    return TrainConfig(task=task, loss=loss, uq=uq,
                       epochs=values.pop("epochs", default_epochs),
                       batch_size=values.pop("batch_size", default_batch),
                       learning_rate=values.pop("learning_rate", 0.001),
                       adam_beta1=values.pop("adam_beta1", 0.9),
                       adam_beta2=values.pop("adam_beta2", 0.999),
                       softmax_samples=values.pop("softmax_samples", 100),
                       seed=seed)


def _save_regression_npz(data: ToyRegressionData, path) -> None:
    np.savez(path, kind="regression", x_train=data.x_train,
             y_train=data.y_train, x_ood=data.x_ood, y_ood=data.y_ood,
             noise_std=data.noise_std)


def _save_classification_npz(data: SoftLabelData, path) -> None:
    np.savez(path, kind="classification", inputs=data.inputs,
             labels=data.labels, posteriors=data.posteriors,
             classes=data.classes, centers=data.centers,
             cluster_std=data.cluster_std, n_votes=data.n_votes)


def load_data_npz(path):
    with np.load(path) as z:
        kind = str(z["kind"])
        if kind == "regression":
            return ToyRegressionData(x_train=z["x_train"],
                                     y_train=z["y_train"],
                                     x_ood=z["x_ood"], y_ood=z["y_ood"],
                                     noise_std=float(z["noise_std"]))
        if kind == "classification":
            return SoftLabelData(inputs=z["inputs"], labels=z["labels"],
                                 posteriors=z["posteriors"],
                                 classes=z["classes"], centers=z["centers"],
                                 cluster_std=float(z["cluster_std"]),
                                 n_votes=int(z["n_votes"]))
    raise ValueError(f"unrecognized data kind {kind!r}")


def _method_config(manifest: dict, forward_passes: int) -> UqMethodConfig:
    return UqMethodConfig(kind=manifest["method"],
                          forward_passes=forward_passes,
                          ensemble_size=manifest["member_count"])


def _cmd_gen_data(args) -> int:
    if args.kind == "regression":
        data = gen_toy_regression(args.seed, n_train=args.n_train,
                                  n_ood=args.n_ood)
        _save_regression_npz(data, args.out)
    else:
        data = gen_soft_label_classification(args.n_points, args.seed)
        _save_classification_npz(data, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_train(args) -> int:
    text = Path(args.config).read_text()
    config = build_train_config(parse_config_text(text))
    data = load_data_npz(args.data)
    result = train(config, data)
    if config.uq.kind == "ensemble":
        seeds = [config.seed + i for i in range(len(result.models))]
    else:
        seeds = [config.seed]
    save_models(result.models, args.out_dir, seeds, config_digest(text))
    if result.loss_history:
        print(f"final loss {result.loss_history[-1]:.6g}")
    print(f"saved {len(result.models)} model file(s) to {args.out_dir}")
    return 0


def _cmd_eval_disentangle(args) -> int:
    members, manifest = load_models(args.model_dir)
    if manifest["task"] != "regression":
        raise SystemExit("eval-disentangle expects a regression model")
    config = _method_config(manifest, args.forward_passes)
    models = members if config.kind == "ensemble" else members[0]
    grid = np.arange(args.grid_start, args.grid_stop + 1e-9, args.grid_step)
    rng = RngStream(args.seed, _EVAL_SALT)
    curve = eval_regression_disentangled(models, config, grid, rng)
    emit_disentangled_csv(curve, args.out)
    print(f"wrote {args.out}")
    if args.figure is not None:
        from .figures import render_regression_figure

        data = load_data_npz(args.data) if args.data else None
        render_regression_figure(curve, args.figure, data)
        print(f"wrote {args.figure}")
    return 0


def _cmd_ssoftmax_sweep(args) -> int:
    means = [float(v) for v in args.means.split(",")]
    stds = [float(v) for v in args.stds.split(",")]
    spec = LogitDistSpec(means=means, stds=stds)
    n_values = (tuple(int(v) for v in args.n_values.split(","))
                if args.n_values else DEFAULT_N_GRID)
    rows = sweep(spec, n_values, args.trials, RngStream(args.seed, 0))
    emit_sweep_csv(rows, args.out)
    print(f"wrote {args.out}")
    if args.figure is not None:
        from .figures import render_sweep_figure

        render_sweep_figure(rows, args.figure)
        print(f"wrote {args.figure}")
    return 0


def _cmd_report(args) -> int:
    data = load_data_npz(args.data)
    if not isinstance(data, SoftLabelData):
        raise SystemExit("report expects classification data")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for model_dir in args.model_dir:
        members, manifest = load_models(model_dir)
        if manifest["task"] != "classification":
            raise SystemExit(f"{model_dir}: report expects classification "
                             "models")
        config = _method_config(manifest, args.forward_passes)
        models = members if config.kind == "ensemble" else members[0]
        rng = RngStream(args.seed, _EVAL_SALT).derive(len(results))
        results[manifest["method"]] = eval_classification_disentangled(
            models, config, data, rng)
    report = build_report(results, data)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    emit_report_csv(report, out_dir / "report.csv")
    from .figures import render_report_figure

    render_report_figure(report, out_dir / "report.png")
    for name in ("report.json", "report.csv", "report.png"):
        print(f"wrote {out_dir / name}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqd",
        description="train, evaluate and report disentangled uncertainty")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as .npz")
    p.add_argument("--kind", choices=("regression", "classification"),
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=1000)
    p.add_argument("--n-ood", type=int, default=200)
    p.add_argument("--n-points", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train per a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval-disentangle",
                       help="regression uncertainty curve along a grid")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--figure", default=None)
    p.add_argument("--data", default=None,
                   help="optional dataset .npz for the figure scatter")
    p.add_argument("--grid-start", type=float, default=0.0)
    p.add_argument("--grid-stop", type=float, default=15.0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--forward-passes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval_disentangle)

    p = sub.add_parser("ssoftmax-sweep",
                       help="sampling-softmax error vs sample count")
    p.add_argument("--means", required=True,
                   help="comma-separated logit means")
    p.add_argument("--stds", required=True,
                   help="comma-separated logit stds")
    p.add_argument("--n-values", default=None,
                   help="comma-separated sample counts")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--figure", default=None)
    p.set_defaults(func=_cmd_ssoftmax_sweep)

    p = sub.add_parser("report",
                       help="classification uncertainty panels and metrics")
    p.add_argument("--model-dir", action="append", required=True,
                   help="trained run directory; repeat for several methods")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--forward-passes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
