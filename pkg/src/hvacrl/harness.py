"""Experiment orchestration: flat config files, train+evaluate runs, sweeps.

A run trains one agent on the simulated zone, then freezes the policy and
evaluates it greedily over a held-out horizon, writing plot-ready CSVs plus
a checkpoint.  Sweeps and agent comparisons are built from grids of such
runs sharing environment seeds, so cells differ only in the swept quantity.

Configuration files are flat text, one `section.key = value` per line,
with `#` comments.  Recognized keys:

  env.floor_area env.occupants env.computers env.air_change_rate
  env.thermal_capacitance env.envelope_resistance env.hvac_capacity
  env.cop env.slot_minutes env.slots_per_episode env.comfort_model
  weather.kind (synthetic|csv) weather.path weather.temp_mean
  weather.temp_amplitude weather.rh_mean weather.rh_amplitude
  weather.noise_sigma weather.seed weather.peak_hour
  reward.energy_weight reward.comfort_threshold
  agent.algo (ddpg|q_learning|sarsa|dqn) agent.checkpoint
  agent.gamma agent.tau agent.actor_lr agent.critic_lr agent.learning_rate
  agent.batch_size agent.replay_capacity agent.replay_min_fill
  agent.noise_theta agent.noise_sigma agent.noise_scale_initial
  agent.noise_scale_final agent.noise_decay_episodes
  agent.epsilon_initial agent.epsilon_final agent.epsilon_decay_episodes
  agent.temp_step agent.hum_step agent.temp_bin agent.hum_bin agent.hidden
  run.episodes run.seeds run.eval_episodes run.output_dir
  sweep.param sweep.values
  compare.algos
  comfort.dataset comfort.alpha1 comfort.alpha2 comfort.epochs
  comfort.hidden1 comfort.hidden2 comfort.learning_rate comfort.seed
  data.air_temp_min data.air_temp_max data.air_temp_count
  data.rh_min data.rh_max data.rh_count data.noise_sigma data.seed

Relative paths inside a config file are resolved against the file's own
directory, so an experiment directory can be moved wholesale.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .agents import (
    DdpgConfig,
    DqnConfig,
    MetricsRow,
    TabularConfig,
    episode_reset_seeds,
    load_agent,
    load_metrics_csv,
    save_agent,
    train_ddpg,
    train_dqn,
    train_tabular,
    write_metrics_csv,
)
from .comfort import ComfortModel, load_comfort_model
from .envsim import (
    TRAJECTORY_HEADER,
    RewardConfig,
    SyntheticWeather,
    WeatherSource,
    ZoneConfig,
    ZoneEnv,
    load_weather_csv,
    write_trajectory_csv,
)

ALGORITHMS = ("ddpg", "q_learning", "sarsa", "dqn")
SWEEP_PARAMS = ("comfort_threshold", "energy_weight")

SWEEP_HEADER = "value,mean_energy_kwh,mean_abs_comfort,final_avg100_reward"
CURVES_HEADER = "algo,seed,episode,avg100_reward"
COMPARE_HEADER = "algo,final_avg100_reward,mean_energy_kwh,mean_abs_comfort"

# Evaluation episodes draw reset seeds from a stream distinct from the
# training stream, so evaluation never replays training start states.
EVAL_SEED_STREAM = 16


class ConfigError(ValueError):
    """A configuration file or value is invalid."""


class ExperimentError(RuntimeError):
    """A run failed mid-flight (e.g. numerical divergence); see the marker file."""


# --------------------------------------------------------------------- results

@dataclass(frozen=True)
class RunSummary:
    """Headline numbers for one run, recomputable from its CSVs."""

    final_avg100_reward: float
    mean_energy_kwh: float
    mean_abs_comfort: float
    within_band_fraction: float


@dataclass(frozen=True)
class RunArtifacts:
    metrics_path: Path
    trajectory_path: Path
    manifest_path: Path
    summary: RunSummary


@dataclass(frozen=True)
class SweepRow:
    value: float
    mean_energy_kwh: float
    mean_abs_comfort: float
    final_avg100_reward: float


@dataclass(frozen=True)
class SweepResult:
    path: Path
    rows: tuple[SweepRow, ...]
    failures: tuple[str, ...]


@dataclass(frozen=True)
class CompareCell:
    algo: str
    seed: int
    metrics: tuple[MetricsRow, ...]
    summary: RunSummary


@dataclass(frozen=True)
class AlgoSummary:
    algo: str
    final_avg100_reward: float
    mean_energy_kwh: float
    mean_abs_comfort: float


@dataclass(frozen=True)
class CompareResult:
    curves_path: Path
    summary_path: Path
    cells: tuple[CompareCell, ...]
    algo_summaries: tuple[AlgoSummary, ...]
    failures: tuple[str, ...]


# ---------------------------------------------------------------- experiment

_AGENT_HYPER_TYPES: dict[str, Callable[[str], object]] = {
    "gamma": float,
    "tau": float,
    "actor_lr": float,
    "critic_lr": float,
    "learning_rate": float,
    "batch_size": int,
    "replay_capacity": int,
    "replay_min_fill": int,
    "noise_theta": float,
    "noise_sigma": float,
    "noise_scale_initial": float,
    "noise_scale_final": float,
    "noise_decay_episodes": int,
    "epsilon_initial": float,
    "epsilon_final": float,
    "epsilon_decay_episodes": int,
    "temp_step": float,
    "hum_step": float,
    "temp_bin": float,
    "hum_bin": float,
    "hidden": int,
}

_TRAINER_CONFIGS = {
    "ddpg": DdpgConfig,
    "q_learning": TabularConfig,
    "sarsa": TabularConfig,
    "dqn": DqnConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs: environment, reward, agent, seeds, output."""

    comfort: ComfortModel
    zone: ZoneConfig = field(default_factory=ZoneConfig)
    weather: WeatherSource = field(default_factory=SyntheticWeather)
    reward: RewardConfig = field(default_factory=RewardConfig)
    algo: str = "ddpg"
    agent: dict = field(default_factory=dict)
    episodes: int = 300
    seeds: tuple[int, ...] = (0,)
    eval_episodes: int = 100
    slots_per_episode: int = 48
    output_dir: Path = Path("runs")
    checkpoint: Path | None = None

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}; pick from {ALGORITHMS}")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for key in self.agent:
            if key not in _AGENT_HYPER_TYPES:
                raise ConfigError(f"unknown agent hyperparameter {key!r}")


def trainer_config(config: ExperimentConfig, seed: int):
    """Instantiate the per-algorithm trainer settings from the overrides."""
    cls = _TRAINER_CONFIGS[config.algo]
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in config.agent.items():
        if key not in names:
            raise ConfigError(
                f"agent.{key} does not apply to algorithm {config.algo!r}"
            )
        kwargs[key] = value
    return cls(episodes=config.episodes, seed=seed, **kwargs)


def applicable_overrides(overrides: dict, algo: str) -> dict:
    """Drop hyperparameters that the given algorithm's trainer does not take."""
    names = {f.name for f in dataclasses.fields(_TRAINER_CONFIGS[algo])}
    return {k: v for k, v in overrides.items() if k in names}


def build_env(config: ExperimentConfig) -> ZoneEnv:
    return ZoneEnv(
        zone=config.zone,
        reward_config=config.reward,
        weather=config.weather,
        slots_per_episode=config.slots_per_episode,
    )


def _train(env: ZoneEnv, config: ExperimentConfig, seed: int):
    tc = trainer_config(config, seed)
    if config.algo == "ddpg":
        return train_ddpg(env, config.comfort, tc)
    if config.algo == "dqn":
        return train_dqn(env, config.comfort, tc)
    return train_tabular(env, config.comfort, tc, config.algo)


def evaluate_policy(env, comfort, policy, episodes, seed, sink):
    """Greedy rollout of the frozen policy; appends trajectory rows to sink.

    Rows follow the trajectory CSV schema (slot, state, action, comfort,
    energy, reward).  Appending in place keeps partial output available to
    the caller if an episode diverges mid-rollout.
    """
    for ep_seed in episode_reset_seeds(seed, episodes, stream=EVAL_SEED_STREAM):
        state = env.reset(seed=ep_seed)
        terminal = False
        while not terminal:
            action = policy.greedy_action(state)
            result = env.step(action, comfort)
            sink.append(
                (
                    state.slot,
                    state.t_in,
                    state.h_in,
                    state.t_out,
                    state.h_out,
                    action.t_set,
                    action.h_set,
                    result.comfort,
                    result.energy_kwh,
                    result.reward,
                )
            )
            state = result.state
            terminal = result.terminal
    return sink


def _summarize(metrics, traj_rows, eval_episodes, comfort_threshold) -> RunSummary:
    # With no training episodes the "final" reward is the evaluation mean.
    if metrics:
        final = metrics[-1].avg100_reward
    else:
        final = sum(r[9] for r in traj_rows) / eval_episodes
    n = len(traj_rows)
    return RunSummary(
        final_avg100_reward=final,
        mean_energy_kwh=sum(r[8] for r in traj_rows) / n,
        mean_abs_comfort=sum(abs(r[7]) for r in traj_rows) / n,
        within_band_fraction=sum(abs(r[7]) <= comfort_threshold for r in traj_rows) / n,
    )


def _write_failure(path: Path, phase: str, exc: Exception) -> None:
    message = " ".join(str(exc).split())
    path.write_text(f"error: {phase}-failure: {message}\n")


def _write_summary(path: Path, summary: RunSummary, eval_episodes, threshold) -> None:
    lines = [
        f"summary.final_avg100_reward = {summary.final_avg100_reward!r}",
        f"summary.mean_energy_kwh = {summary.mean_energy_kwh!r}",
        f"summary.mean_abs_comfort = {summary.mean_abs_comfort!r}",
        f"summary.within_band_fraction = {summary.within_band_fraction!r}",
        f"summary.eval_episodes = {eval_episodes}",
        f"summary.comfort_threshold = {threshold!r}",
    ]
    path.write_text("\n".join(lines) + "\n")


def load_summary(path) -> tuple[RunSummary, int, float]:
    """Read back summary.txt: (summary, eval_episodes, comfort_threshold)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing summary file {path}")
    flat = parse_flat_config(path.read_text())
    try:
        summary = RunSummary(
            final_avg100_reward=float(flat["summary.final_avg100_reward"]),
            mean_energy_kwh=float(flat["summary.mean_energy_kwh"]),
            mean_abs_comfort=float(flat["summary.mean_abs_comfort"]),
            within_band_fraction=float(flat["summary.within_band_fraction"]),
        )
        return summary, int(flat["summary.eval_episodes"]), float(
            flat["summary.comfort_threshold"]
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed summary file {path}: {exc}") from exc


def load_trajectory_csv(path) -> list[tuple]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing trajectory file {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ConfigError(f"{path}: bad trajectory header")
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split(",")
        if len(parts) != 10:
            raise ConfigError(f"{path} line {lineno}: expected 10 fields")
        try:
            rows.append((int(parts[0]), *(float(p) for p in parts[1:])))
        except ValueError as exc:
            raise ConfigError(f"{path} line {lineno}: {exc}") from exc
    return rows


def run_experiment(config: ExperimentConfig, seed: int | None = None) -> RunArtifacts:
    """Train per config, then evaluate the frozen greedy policy; write artifacts.

    Artifacts land directly in config.output_dir: metrics.csv (training
    curve), trajectory.csv (evaluation slots), agent/ (checkpoint), and
    summary.txt.  A diverging run leaves whatever was completed plus a
    failure.txt marker, then raises ExperimentError.  Given the same config
    and seed, every byte written is identical across invocations.
    """
    if seed is None:
        seed = config.seeds[0]
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "metrics.csv"
    trajectory_path = out / "trajectory.csv"
    agent_dir = out / "agent"
    failure_path = out / "failure.txt"
    if failure_path.exists():
        failure_path.unlink()

    env = build_env(config)
    if config.checkpoint is not None:
        if config.episodes != 0:
            raise ConfigError(
                "training on top of a checkpoint is not supported; "
                "set run.episodes = 0 to evaluate it"
            )
        policy = load_agent(config.checkpoint)
        metrics: list[MetricsRow] = []
    else:
        try:
            policy, metrics = _train(env, config, seed)
        except (RuntimeError, ValueError, FloatingPointError, OverflowError) as exc:
            write_metrics_csv(metrics_path, [])
            _write_failure(failure_path, "training", exc)
            raise ExperimentError(f"training failed: {exc}") from exc

    write_metrics_csv(metrics_path, metrics)
    save_agent(policy, agent_dir)

    # Evaluation uses a fresh environment so its clock starts at slot zero:
    # every run sees the same weather window regardless of training length,
    # and evaluating a reloaded checkpoint reproduces the original bytes.
    eval_env = build_env(config)
    rows: list[tuple] = []
    try:
        evaluate_policy(eval_env, config.comfort, policy, config.eval_episodes, seed, rows)
    except (RuntimeError, ValueError, FloatingPointError, OverflowError) as exc:
        write_trajectory_csv(trajectory_path, rows)
        _write_failure(failure_path, "evaluation", exc)
        raise ExperimentError(f"evaluation failed: {exc}") from exc
    write_trajectory_csv(trajectory_path, rows)

    summary = _summarize(
        metrics, rows, config.eval_episodes, config.reward.comfort_threshold
    )
    _write_summary(
        out / "summary.txt", summary, config.eval_episodes,
        config.reward.comfort_threshold,
    )
    return RunArtifacts(metrics_path, trajectory_path, agent_dir / "manifest.txt", summary)


def recompute_summary(run_dir) -> RunSummary:
    """Rebuild the summary from a run directory's CSVs; must match summary.txt."""
    run_dir = Path(run_dir)
    metrics = load_metrics_csv(run_dir / "metrics.csv")
    rows = load_trajectory_csv(run_dir / "trajectory.csv")
    _, eval_episodes, threshold = load_summary(run_dir / "summary.txt")
    return _summarize(metrics, rows, eval_episodes, threshold)


# -------------------------------------------------------------------- sweeps

def sweep(config: ExperimentConfig, param: str, values: Sequence[float]) -> SweepResult:
    """One run per (value, seed); rows aggregate each value across seeds.

    A failing cell is recorded in .failures and excluded from its row's
    aggregate; sibling cells are unaffected.  A value whose every seed
    failed yields a NaN row.
    """
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; pick from {SWEEP_PARAMS}")
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two values")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows: list[SweepRow] = []
    failures: list[str] = []
    for i, value in enumerate(values):
        try:
            cell_reward = replace(config.reward, **{param: value})
        except ValueError as exc:
            failures.append(f"{param}={value}: {exc}")
            rows.append(SweepRow(float(value), math.nan, math.nan, math.nan))
            continue
        summaries = []
        for seed in config.seeds:
            cell = replace(
                config,
                reward=cell_reward,
                output_dir=out / f"{param}_{i}_seed{seed}",
            )
            try:
                summaries.append(run_experiment(cell, seed).summary)
            except (ExperimentError, ConfigError) as exc:
                failures.append(f"{param}={value} seed={seed}: {exc}")
        if summaries:
            rows.append(
                SweepRow(
                    value=float(value),
                    mean_energy_kwh=float(np.mean([s.mean_energy_kwh for s in summaries])),
                    mean_abs_comfort=float(np.mean([s.mean_abs_comfort for s in summaries])),
                    final_avg100_reward=float(
                        np.mean([s.final_avg100_reward for s in summaries])
                    ),
                )
            )
        else:
            rows.append(SweepRow(float(value), math.nan, math.nan, math.nan))

    path = out / "sweep.csv"
    with open(path, "w") as f:
        f.write(SWEEP_HEADER + "\n")
        for r in rows:
            f.write(
                f"{r.value!r},{r.mean_energy_kwh!r},{r.mean_abs_comfort!r},"
                f"{r.final_avg100_reward!r}\n"
            )
    return SweepResult(path, tuple(rows), tuple(failures))


def compare_agents(config: ExperimentConfig, algos: Sequence[str]) -> CompareResult:
    """Train each algorithm on identical environments and seeds, side by side.

    Hyperparameter overrides that an algorithm's trainer does not accept are
    dropped for that algorithm, so one config can drive a mixed comparison.
    Emits per-episode trailing-average curves and per-algorithm summaries
    aggregated over seeds.
    """
    if len(algos) < 2:
        raise ConfigError("a comparison needs at least two algorithms")
    for algo in algos:
        if algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}; pick from {ALGORITHMS}")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    cells: list[CompareCell] = []
    algo_summaries: list[AlgoSummary] = []
    failures: list[str] = []
    for i, algo in enumerate(algos):
        summaries = []
        for seed in config.seeds:
            cell = replace(
                config,
                algo=algo,
                agent=applicable_overrides(config.agent, algo),
                output_dir=out / f"{i}_{algo}_seed{seed}",
            )
            try:
                artifacts = run_experiment(cell, seed)
            except (ExperimentError, ConfigError) as exc:
                failures.append(f"{algo} seed={seed}: {exc}")
                continue
            metrics = tuple(load_metrics_csv(artifacts.metrics_path))
            cells.append(CompareCell(algo, seed, metrics, artifacts.summary))
            summaries.append(artifacts.summary)
        if summaries:
            algo_summaries.append(
                AlgoSummary(
                    algo=algo,
                    final_avg100_reward=float(
                        np.mean([s.final_avg100_reward for s in summaries])
                    ),
                    mean_energy_kwh=float(np.mean([s.mean_energy_kwh for s in summaries])),
                    mean_abs_comfort=float(
                        np.mean([s.mean_abs_comfort for s in summaries])
                    ),
                )
            )
        else:
            algo_summaries.append(AlgoSummary(algo, math.nan, math.nan, math.nan))

    curves_path = out / "compare_curves.csv"
    with open(curves_path, "w") as f:
        f.write(CURVES_HEADER + "\n")
        for cell in cells:
            for m in cell.metrics:
                f.write(f"{cell.algo},{cell.seed},{m.episode},{m.avg100_reward!r}\n")
    summary_path = out / "compare_summary.csv"
    with open(summary_path, "w") as f:
        f.write(COMPARE_HEADER + "\n")
        for s in algo_summaries:
            f.write(
                f"{s.algo},{s.final_avg100_reward!r},{s.mean_energy_kwh!r},"
                f"{s.mean_abs_comfort!r}\n"
            )
    return CompareResult(
        curves_path, summary_path, tuple(cells), tuple(algo_summaries), tuple(failures)
    )


# ------------------------------------------------------------- configuration

_KEY_PATTERN = re.compile(r"[a-z][a-z0-9_]*\.[a-z][a-z0-9_]*")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in text.split(","))


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p.strip()) for p in text.split(","))


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(","))


CONFIG_KEYS: dict[str, Callable[[str], object]] = {
    "env.floor_area": float,
    "env.occupants": int,
    "env.computers": int,
    "env.air_change_rate": float,
    "env.thermal_capacitance": float,
    "env.envelope_resistance": float,
    "env.hvac_capacity": float,
    "env.cop": float,
    "env.slot_minutes": float,
    "env.slots_per_episode": int,
    "env.comfort_model": str,
    "weather.kind": str,
    "weather.path": str,
    "weather.temp_mean": float,
    "weather.temp_amplitude": float,
    "weather.rh_mean": float,
    "weather.rh_amplitude": float,
    "weather.noise_sigma": float,
    "weather.seed": int,
    "weather.peak_hour": float,
    "reward.energy_weight": float,
    "reward.comfort_threshold": float,
    "agent.algo": str,
    "agent.checkpoint": str,
    "run.episodes": int,
    "run.seeds": _int_list,
    "run.eval_episodes": int,
    "run.output_dir": str,
    "sweep.param": str,
    "sweep.values": _float_list,
    "compare.algos": _str_list,
    "comfort.dataset": str,
    "comfort.alpha1": float,
    "comfort.alpha2": float,
    "comfort.epochs": int,
    "comfort.hidden1": int,
    "comfort.hidden2": int,
    "comfort.learning_rate": float,
    "comfort.seed": int,
    "data.air_temp_min": float,
    "data.air_temp_max": float,
    "data.air_temp_count": int,
    "data.rh_min": float,
    "data.rh_max": float,
    "data.rh_count": int,
    "data.noise_sigma": float,
    "data.seed": int,
}
CONFIG_KEYS.update({f"agent.{k}": v for k, v in _AGENT_HYPER_TYPES.items()})


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse `section.key = value` lines into a dict of raw string values."""
    flat: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_PATTERN.fullmatch(key):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        if key in flat:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        flat[key] = value
    return flat


def typed_value(flat: dict[str, str], key: str, default=None):
    """Fetch and convert one registry key, or return default when absent."""
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    if key not in flat:
        return default
    try:
        return CONFIG_KEYS[key](flat[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {flat[key]!r}: {exc}") from exc


def _section_kwargs(flat: dict[str, str], section: str, names: Sequence[str]) -> dict:
    out = {}
    for name in names:
        value = typed_value(flat, f"{section}.{name}")
        if value is not None:
            out[name] = value
    return out


def _resolve(base: Path, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() else base / path


def load_experiment_config(
    path,
    seed: int | None = None,
    output_dir=None,
) -> ExperimentConfig:
    """Load a run configuration file; CLI overrides replace seeds/output.

    Every key must be in the documented registry, and every referenced file
    (comfort model, weather CSV, agent checkpoint) must exist.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing config file {path}")
    base = path.parent
    flat = parse_flat_config(path.read_text())
    for key in flat:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")

    zone_fields = [f.name for f in dataclasses.fields(ZoneConfig)]
    try:
        zone = ZoneConfig(**_section_kwargs(flat, "env", zone_fields))
        reward = RewardConfig(
            **_section_kwargs(flat, "reward", ["energy_weight", "comfort_threshold"])
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    kind = typed_value(flat, "weather.kind", "synthetic")
    if kind == "synthetic":
        weather_fields = [
            "temp_mean", "temp_amplitude", "rh_mean", "rh_amplitude",
            "noise_sigma", "seed", "peak_hour",
        ]
        try:
            weather: WeatherSource = SyntheticWeather(
                **_section_kwargs(flat, "weather", weather_fields)
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif kind == "csv":
        csv_name = typed_value(flat, "weather.path")
        if csv_name is None:
            raise ConfigError("weather.kind = csv requires weather.path")
        csv_path = _resolve(base, csv_name)
        if not csv_path.exists():
            raise ConfigError(f"weather.path references missing file {csv_path}")
        weather = load_weather_csv(csv_path)
    else:
        raise ConfigError(f"weather.kind must be 'synthetic' or 'csv', not {kind!r}")

    model_name = typed_value(flat, "env.comfort_model")
    if model_name is None:
        raise ConfigError("env.comfort_model is required (path to a trained model)")
    model_path = _resolve(base, model_name)
    if not model_path.exists():
        raise ConfigError(f"env.comfort_model references missing file {model_path}")
    comfort = load_comfort_model(model_path)

    agent: dict = {}
    for name in _AGENT_HYPER_TYPES:
        value = typed_value(flat, f"agent.{name}")
        if value is not None:
            agent[name] = value

    checkpoint = None
    checkpoint_name = typed_value(flat, "agent.checkpoint")
    if checkpoint_name is not None:
        checkpoint = _resolve(base, checkpoint_name)
        if not checkpoint.exists():
            raise ConfigError(f"agent.checkpoint references missing directory {checkpoint}")

    seeds = typed_value(flat, "run.seeds", (0,))
    if seed is not None:
        seeds = (seed,)
    if output_dir is not None:
        out = Path(output_dir)
    else:
        out = _resolve(base, typed_value(flat, "run.output_dir", "runs"))

    return ExperimentConfig(
        comfort=comfort,
        zone=zone,
        weather=weather,
        reward=reward,
        algo=typed_value(flat, "agent.algo", "ddpg"),
        agent=agent,
        episodes=typed_value(flat, "run.episodes", 300),
        seeds=tuple(seeds),
        eval_episodes=typed_value(flat, "run.eval_episodes", 100),
        slots_per_episode=typed_value(flat, "env.slots_per_episode", 48),
        output_dir=out,
        checkpoint=checkpoint,
    )
