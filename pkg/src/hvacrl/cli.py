"""Command-line surface: dataset generation, model training, experiments.

Every subcommand takes --config/--seed/--out; on failure it prints a single
machine-readable `error: <kind>: <message>` line to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .agents import AgentCheckpointError
from .comfort import (
    DatasetError,
    GridSpec,
    generate_dataset,
    load_dataset,
    save_comfort_model,
    save_dataset,
    train_comfort_model,
)
from .envsim import WeatherError
from .harness import (
    CONFIG_KEYS,
    ConfigError,
    ExperimentError,
    compare_agents,
    load_experiment_config,
    parse_flat_config,
    run_experiment,
    sweep,
    typed_value,
)
from .nets import CheckpointError

_FAILURES = (
    ConfigError,
    ExperimentError,
    DatasetError,
    CheckpointError,
    AgentCheckpointError,
    WeatherError,
    ValueError,
    OSError,
)


def _load_flat(path) -> tuple[dict[str, str], Path]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing config file {path}")
    flat = parse_flat_config(path.read_text())
    for key in flat:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
    return flat, path.parent


def _resolve(base: Path, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else base / p


def _print_summary(summary) -> None:
    print(f"summary.final_avg100_reward = {summary.final_avg100_reward!r}")
    print(f"summary.mean_energy_kwh = {summary.mean_energy_kwh!r}")
    print(f"summary.mean_abs_comfort = {summary.mean_abs_comfort!r}")
    print(f"summary.within_band_fraction = {summary.within_band_fraction!r}")


def _cmd_gen_comfort_data(args) -> int:
    flat: dict[str, str] = {}
    if args.config:
        flat, _ = _load_flat(args.config)
    t_lo = typed_value(flat, "data.air_temp_min", 16.0)
    t_hi = typed_value(flat, "data.air_temp_max", 32.0)
    t_n = typed_value(flat, "data.air_temp_count", 50)
    rh_lo = typed_value(flat, "data.rh_min", 20.0)
    rh_hi = typed_value(flat, "data.rh_max", 80.0)
    rh_n = typed_value(flat, "data.rh_count", 40)
    noise = typed_value(flat, "data.noise_sigma", 0.0)
    seed = args.seed if args.seed is not None else typed_value(flat, "data.seed", 0)
    grid = GridSpec(
        air_temp=tuple(float(v) for v in np.linspace(t_lo, t_hi, t_n)),
        rel_humidity=tuple(float(v) for v in np.linspace(rh_lo, rh_hi, rh_n)),
    )
    samples = generate_dataset(grid, noise_sigma=noise, seed=seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(samples, out)
    print(f"wrote {len(samples)} comfort samples to {out}")
    return 0


def _cmd_train_comfort(args) -> int:
    flat, base = _load_flat(args.config)
    dataset_name = typed_value(flat, "comfort.dataset")
    if dataset_name is None:
        raise ConfigError("comfort.dataset is required")
    dataset_path = _resolve(base, dataset_name)
    if not dataset_path.exists():
        raise ConfigError(f"comfort.dataset references missing file {dataset_path}")
    samples = load_dataset(dataset_path)
    seed = args.seed if args.seed is not None else typed_value(flat, "comfort.seed", 0)
    result = train_comfort_model(
        samples,
        alpha1=typed_value(flat, "comfort.alpha1", 1.0),
        alpha2=typed_value(flat, "comfort.alpha2", 1e-4),
        epochs=typed_value(flat, "comfort.epochs", 2000),
        seed=seed,
        hidden=(
            typed_value(flat, "comfort.hidden1", 32),
            typed_value(flat, "comfort.hidden2", 32),
        ),
        learning_rate=typed_value(flat, "comfort.learning_rate", 0.01),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "comfort_model.txt"
    save_comfort_model(result.model, model_path)
    with open(out / "training_curve.csv", "w") as f:
        f.write("epoch,cost\n")
        for epoch, cost in enumerate(result.cost_curve, 1):
            f.write(f"{epoch},{cost!r}\n")
    print(f"wrote comfort model to {model_path}")
    print(f"heldout_mse = {result.heldout_mse!r} (best epoch {result.best_epoch})")
    return 0


def _cmd_train(args) -> int:
    config = load_experiment_config(args.config, seed=args.seed, output_dir=args.out)
    artifacts = run_experiment(config)
    print(f"metrics: {artifacts.metrics_path}")
    print(f"trajectory: {artifacts.trajectory_path}")
    print(f"checkpoint manifest: {artifacts.manifest_path}")
    _print_summary(artifacts.summary)
    return 0


def _cmd_eval(args) -> int:
    config = load_experiment_config(args.config, seed=args.seed, output_dir=args.out)
    if config.checkpoint is None:
        raise ConfigError("eval requires agent.checkpoint in the config")
    artifacts = run_experiment(replace(config, episodes=0))
    print(f"trajectory: {artifacts.trajectory_path}")
    _print_summary(artifacts.summary)
    return 0


def _cmd_sweep(args) -> int:
    flat, _ = _load_flat(args.config)
    param = typed_value(flat, "sweep.param")
    values = typed_value(flat, "sweep.values")
    if param is None or values is None:
        raise ConfigError("sweep requires sweep.param and sweep.values")
    config = load_experiment_config(args.config, seed=args.seed, output_dir=args.out)
    result = sweep(config, param, values)
    for line in result.failures:
        print(f"cell-error: {line}", file=sys.stderr)
    if all(math.isnan(r.mean_energy_kwh) for r in result.rows):
        print("error: ExperimentError: every sweep cell failed", file=sys.stderr)
        return 1
    print(f"table: {result.path}")
    print(result.path.read_text(), end="")
    return 0


def _cmd_compare(args) -> int:
    flat, _ = _load_flat(args.config)
    algos = typed_value(flat, "compare.algos")
    if algos is None:
        raise ConfigError("compare requires compare.algos")
    config = load_experiment_config(args.config, seed=args.seed, output_dir=args.out)
    result = compare_agents(config, algos)
    for line in result.failures:
        print(f"cell-error: {line}", file=sys.stderr)
    if all(math.isnan(s.final_avg100_reward) for s in result.algo_summaries):
        print("error: ExperimentError: every comparison cell failed", file=sys.stderr)
        return 1
    print(f"curves: {result.curves_path}")
    print(f"summaries: {result.summary_path}")
    print(result.summary_path.read_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hvacrl",
        description="Energy-aware HVAC set-point control: simulate, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    specs = [
        ("gen-comfort-data", _cmd_gen_comfort_data,
         "Generate a thermal-comfort dataset CSV from the physical model.",
         False, True),
        ("train-comfort", _cmd_train_comfort,
         "Fit the comfort predictor on a dataset CSV.", True, True),
        ("train", _cmd_train,
         "Train a control agent, then evaluate its frozen greedy policy.",
         True, False),
        ("eval", _cmd_eval,
         "Evaluate a saved agent checkpoint without training.", True, False),
        ("sweep", _cmd_sweep,
         "Run the experiment across a grid of one reward parameter.", True, False),
        ("compare", _cmd_compare,
         "Train several algorithms under identical environments and seeds.",
         True, False),
    ]
    for name, handler, help_text, config_required, out_required in specs:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=config_required,
                       help="flat section.key = value configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the run seed(s) from the config")
        p.add_argument("--out", required=out_required, default=None,
                       help="output path (directory, or file for gen-comfort-data)")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except _FAILURES as exc:
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
