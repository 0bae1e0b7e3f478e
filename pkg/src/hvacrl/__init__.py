"""Energy-aware set-point control of a simulated HVAC zone.

The package is a small, fully deterministic pipeline:

- :mod:`hvacrl.nets` — a dense-network engine (forward, exact gradients,
  Adam, soft target blending, text checkpoints) on plain numpy.
- :mod:`hvacrl.comfort` — a physical thermal-comfort model, dataset
  generation, and a regularized neural predictor of comfort votes.
- :mod:`hvacrl.envsim` — a lumped-parameter zone simulator with weather,
  humidity, HVAC energy accounting, and an episodic control interface.
- :mod:`hvacrl.agents` — a continuous-action actor-critic controller plus
  tabular and Q-network baselines over an enumerated action table.
- :mod:`hvacrl.harness` — config files, train/evaluate runs, sweeps,
  comparisons, and the `hvacrl` command line (:mod:`hvacrl.cli`).
"""

from .agents import (
    AgentCheckpointError,
    DdpgAgent,
    DdpgConfig,
    DiscreteActionTable,
    DqnConfig,
    DqnPolicy,
    MetricsRow,
    OuNoise,
    QTable,
    ReplayBuffer,
    TabularConfig,
    TabularPolicy,
    Transition,
    act,
    build_action_table,
    ddpg_update,
    dqn_update,
    episode_reset_seeds,
    init_ddpg_agent,
    load_agent,
    load_metrics_csv,
    ou_sample,
    q_learning_step,
    replay_push,
    replay_sample,
    sarsa_step,
    save_agent,
    td_target,
    train_ddpg,
    train_dqn,
    train_tabular,
    write_metrics_csv,
)
from .comfort import (
    ComfortConvergenceError,
    ComfortDefaults,
    ComfortModel,
    ComfortSample,
    DatasetError,
    GridSpec,
    TrainResult,
    evaluate_mse,
    generate_dataset,
    load_comfort_model,
    load_dataset,
    pmv_oracle,
    predict_comfort,
    save_comfort_model,
    save_dataset,
    train_comfort_model,
)
from .envsim import (
    ControlAction,
    RewardConfig,
    StepResult,
    SyntheticWeather,
    ThermalState,
    WeatherError,
    WeatherSeries,
    ZoneConfig,
    ZoneEnv,
    load_weather_csv,
    reward,
    step_zone,
    weather_at,
    write_weather_csv,
)
from .harness import (
    CompareResult,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    RunArtifacts,
    RunSummary,
    SweepResult,
    compare_agents,
    load_experiment_config,
    parse_flat_config,
    recompute_summary,
    run_experiment,
    sweep,
)
from .nets import (
    CheckpointError,
    DenseNet,
    OptimState,
    ParamGradient,
    adam_init,
    adam_step,
    finite_diff_gradient,
    forward,
    forward_batch,
    gradient,
    gradient_batch,
    init_dense_net,
    load_dense_net,
    save_dense_net,
    soft_update,
)

__version__ = "0.1.0"
