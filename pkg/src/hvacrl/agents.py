"""Learning agents for the zone set-point control problem.

The main controller is a deterministic actor-critic with target networks
and uniform experience replay, exploring through a mean-reverting noise
process whose scale decays linearly across training.  Discrete-action
baselines (tabular Q-learning, SARSA, and a Q-network over an enumerated
action table) share the environment interface, metrics schema, and seeding
scheme so runs are directly comparable.

Every trained policy exposes greedy_action(state) -> ControlAction, and
every trainer emits one metrics row per episode:
episode,reward,avg100_reward,mean_abs_comfort,energy_kwh,noise_scale
(noise_scale doubles as the epsilon column for the epsilon-greedy agents).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .comfort import ComfortModel
from .envsim import (
    HUMIDITY_SETPOINT_RANGE,
    TEMP_SETPOINT_RANGE,
    ControlAction,
    ThermalState,
    ZoneEnv,
)
from .nets import (
    DenseNet,
    OptimState,
    adam_init,
    adam_step,
    forward,
    forward_batch,
    gradient_batch,
    init_dense_net,
    load_dense_net,
    save_dense_net,
    soft_update,
)

# Fixed affine scaling of the observed state onto roughly [-1, 1]
# (temperatures against the controllable band, humidities against [0,100]).
STATE_OFFSETS = np.array([25.0, 50.0, 25.0, 50.0])
STATE_SCALES = np.array([10.0, 50.0, 10.0, 50.0])

ACTION_OFFSETS = np.array(
    [sum(TEMP_SETPOINT_RANGE) / 2.0, sum(HUMIDITY_SETPOINT_RANGE) / 2.0]
)
ACTION_SCALES = np.array(
    [
        (TEMP_SETPOINT_RANGE[1] - TEMP_SETPOINT_RANGE[0]) / 2.0,
        (HUMIDITY_SETPOINT_RANGE[1] - HUMIDITY_SETPOINT_RANGE[0]) / 2.0,
    ]
)

METRICS_HEADER = "episode,reward,avg100_reward,mean_abs_comfort,energy_kwh,noise_scale"

# Sub-stream tags so one run seed yields independent generators.
_INIT_STREAM = 11
_REPLAY_STREAM = 12
_NOISE_STREAM = 13
_EPISODE_STREAM = 14
_EXPLORE_STREAM = 15


def scale_state(vec: np.ndarray) -> np.ndarray:
    return (np.asarray(vec, dtype=float) - STATE_OFFSETS) / STATE_SCALES


def norm_to_action(a_norm: np.ndarray) -> ControlAction:
    a = np.clip(np.asarray(a_norm, dtype=float), -1.0, 1.0)
    physical = ACTION_OFFSETS + ACTION_SCALES * a
    return ControlAction(float(physical[0]), float(physical[1]))


def action_to_norm(action: ControlAction) -> np.ndarray:
    return (np.array([action.t_set, action.h_set]) - ACTION_OFFSETS) / ACTION_SCALES


def episode_reset_seeds(
    seed: int, episodes: int, stream: int = _EPISODE_STREAM
) -> list[int]:
    """Per-episode environment seeds, identical across agents for a run seed.

    A caller wanting a second, independent sequence from the same run seed
    (e.g. held-out evaluation episodes) passes a different stream tag.
    """
    if episodes <= 0:
        return []
    state = np.random.SeedSequence([seed, stream]).generate_state(episodes)
    return [int(s) for s in state]


def linear_schedule(initial: float, final: float, decay_steps: int, step: int) -> float:
    if decay_steps <= 0:
        return final
    frac = min(1.0, step / decay_steps)
    return initial + (final - initial) * frac


# ------------------------------------------------------------------ noise

@dataclass
class OuNoise:
    """Mean-reverting exploration noise, one component per action dimension."""

    rng: np.random.Generator
    dim: int = 2
    theta: float = 0.15
    sigma: float = 0.2
    mu: float = 0.0
    scale: float = 0.7
    x: np.ndarray | None = None

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.sigma < 0 or self.scale < 0:
            raise ValueError("sigma and scale must be non-negative")
        if self.x is None:
            self.x = np.full(self.dim, self.mu, dtype=float)


def ou_sample(noise: OuNoise, dt: float) -> np.ndarray:
    """Advance x <- x + theta*(mu - x)*dt + sigma*sqrt(dt)*xi; return scale*x."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    drift = noise.theta * (noise.mu - noise.x) * dt
    if noise.sigma > 0:
        noise.x = noise.x + drift + noise.sigma * math.sqrt(dt) * noise.rng.standard_normal(
            noise.dim
        )
    else:
        noise.x = noise.x + drift
    return noise.scale * noise.x


# ------------------------------------------------------------------ replay

@dataclass(frozen=True)
class Transition:
    state: ThermalState
    action: ControlAction
    reward: float
    next_state: ThermalState
    terminal: bool = False

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise ValueError("transition reward must be finite")


class ReplayBuffer:
    """Fixed-capacity FIFO transition store with seeded uniform sampling."""

    def __init__(self, capacity: int, seed):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._write = 0
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._items)


def replay_push(buffer: ReplayBuffer, transition: Transition) -> None:
    if len(buffer._items) < buffer.capacity:
        buffer._items.append(transition)
    else:
        buffer._items[buffer._write] = transition  # overwrite the oldest
        buffer._write = (buffer._write + 1) % buffer.capacity


def replay_sample(buffer: ReplayBuffer, n: int) -> list[Transition]:
    """Uniform sample with replacement; any non-empty buffer serves any n."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if len(buffer._items) == 0:
        raise ValueError("cannot sample from an empty replay buffer")
    idx = buffer._rng.integers(0, len(buffer._items), size=n)
    return [buffer._items[i] for i in idx]


# ------------------------------------------------------------------ DDPG

@dataclass
class DdpgAgent:
    actor: DenseNet
    critic: DenseNet
    target_actor: DenseNet
    target_critic: DenseNet
    gamma: float = 0.99
    tau: float = 0.001

    def __post_init__(self):
        if self.actor.layer_sizes != self.target_actor.layer_sizes:
            raise ValueError("actor and target actor differ in shape")
        if self.critic.layer_sizes != self.target_critic.layer_sizes:
            raise ValueError("critic and target critic differ in shape")
        expected = self.actor.layer_sizes[0] + self.actor.layer_sizes[-1]
        if self.critic.layer_sizes[0] != expected:
            raise ValueError("critic input must be state dim + action dim")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")

    @property
    def state_dim(self) -> int:
        return self.actor.layer_sizes[0]

    def greedy_action(self, state: ThermalState) -> ControlAction:
        return act(self, state, noise=None, explore=False)


def init_ddpg_agent(
    rng: np.random.Generator,
    state_dim: int = 4,
    action_dim: int = 2,
    hidden: int = 128,
    gamma: float = 0.99,
    tau: float = 0.001,
) -> DdpgAgent:
    actor = init_dense_net(
        [state_dim, hidden, hidden, action_dim], ["tanh", "tanh", "tanh"], rng
    )
    critic = init_dense_net(
        [state_dim + action_dim, hidden, hidden, 1], ["tanh", "tanh", "linear"], rng
    )
    return DdpgAgent(actor, critic, actor.copy(), critic.copy(), gamma, tau)


def act(
    agent: DdpgAgent, state: ThermalState, noise: OuNoise | None, explore: bool
) -> ControlAction:
    """Actor's action, plus exploration noise (in normalized units) if exploring."""
    a = forward(agent.actor, scale_state(state.vector()))
    if explore:
        if noise is None:
            raise ValueError("exploration requires a noise process")
        a = a + ou_sample(noise, 1.0)
    return norm_to_action(a)


def td_target(agent: DdpgAgent, transition: Transition) -> float:
    """Bootstrapped value estimate from the target networks."""
    if transition.terminal:
        return transition.reward
    s2 = scale_state(transition.next_state.vector())
    a2 = forward(agent.target_actor, s2)
    q2 = forward(agent.target_critic, np.concatenate([s2, a2]))[0]
    return transition.reward + agent.gamma * float(q2)


def ddpg_update(
    agent: DdpgAgent,
    minibatch: Sequence[Transition],
    actor_opt: OptimState,
    critic_opt: OptimState,
) -> tuple[float, float]:
    """One critic regression step, one policy-ascent step, one target blend."""
    if len(minibatch) == 0:
        raise ValueError("empty minibatch")
    S = np.array([scale_state(t.state.vector()) for t in minibatch])
    A = np.array([action_to_norm(t.action) for t in minibatch])
    R = np.array([t.reward for t in minibatch])
    S2 = np.array([scale_state(t.next_state.vector()) for t in minibatch])
    mask = np.array([0.0 if t.terminal else 1.0 for t in minibatch])
    return ddpg_update_arrays(agent, S, A, R, S2, mask, actor_opt, critic_opt)


def ddpg_update_arrays(agent, S, A, R, S2, bootstrap_mask, actor_opt, critic_opt):
    """Array-level core of ddpg_update (states/actions already scaled to [-1,1])."""
    n = len(R)
    a2 = forward_batch(agent.target_actor, S2)
    q2 = forward_batch(agent.target_critic, np.hstack([S2, a2]))[:, 0]
    y = R + agent.gamma * bootstrap_mask * q2

    sa = np.hstack([S, A])
    err = forward_batch(agent.critic, sa)[:, 0] - y
    critic_loss = float(np.mean(err * err))
    if not math.isfinite(critic_loss):
        raise RuntimeError("non-finite critic loss; aborting run")
    critic_grad, _ = gradient_batch(agent.critic, sa, (2.0 * err / n)[:, None])
    adam_step(agent.critic, critic_grad, critic_opt)

    a_pi = forward_batch(agent.actor, S)
    sa_pi = np.hstack([S, a_pi])
    actor_objective = float(np.mean(forward_batch(agent.critic, sa_pi)[:, 0]))
    if not math.isfinite(actor_objective):
        raise RuntimeError("non-finite actor objective; aborting run")
    # d(mean Q)/d(action inputs), chained through the actor; negated to ascend
    _, dq_dinput = gradient_batch(agent.critic, sa_pi, np.full((n, 1), 1.0 / n))
    dq_da = dq_dinput[:, S.shape[1]:]
    actor_grad, _ = gradient_batch(agent.actor, S, -dq_da)
    adam_step(agent.actor, actor_grad, actor_opt)

    soft_update(agent.target_actor, agent.actor, agent.tau)
    soft_update(agent.target_critic, agent.critic, agent.tau)
    return critic_loss, actor_objective


@dataclass(frozen=True)
class MetricsRow:
    episode: int
    reward: float
    avg100_reward: float
    mean_abs_comfort: float
    energy_kwh: float
    noise_scale: float


def write_metrics_csv(path, rows: Sequence[MetricsRow]) -> None:
    with open(path, "w") as f:
        f.write(METRICS_HEADER + "\n")
        for r in rows:
            f.write(
                ",".join(
                    [str(r.episode)]
                    + [
                        repr(float(v))
                        for v in (
                            r.reward,
                            r.avg100_reward,
                            r.mean_abs_comfort,
                            r.energy_kwh,
                            r.noise_scale,
                        )
                    ]
                )
                + "\n"
            )


def load_metrics_csv(path) -> list[MetricsRow]:
    rows = []
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != METRICS_HEADER:
            raise ValueError(f"bad metrics header {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"bad metrics row {line!r}")
            rows.append(
                MetricsRow(
                    int(parts[0]),
                    *(float(p) for p in parts[1:]),
                )
            )
    return rows


@dataclass(frozen=True)
class DdpgConfig:
    episodes: int = 300
    seed: int = 0
    gamma: float = 0.99
    tau: float = 0.001
    actor_lr: float = 0.001
    critic_lr: float = 0.001
    batch_size: int = 128
    replay_capacity: int = 100_000
    replay_min_fill: int = 1000
    noise_theta: float = 0.15
    noise_sigma: float = 0.2
    noise_scale_initial: float = 0.7
    noise_scale_final: float = 0.1
    noise_decay_episodes: int | None = None  # None: decay across all episodes
    hidden: int = 128


def train_ddpg(
    env: ZoneEnv, comfort: ComfortModel, config: DdpgConfig
) -> tuple[DdpgAgent, list[MetricsRow]]:
    """Episode loop: explore, store, sample, update, blend targets.

    The exploration scale decays linearly from its initial to final value
    over the configured span of episodes; updates begin once the replay
    buffer holds the minimum fill.
    """
    agent = init_ddpg_agent(
        np.random.default_rng([config.seed, _INIT_STREAM]),
        gamma=config.gamma,
        tau=config.tau,
        hidden=config.hidden,
    )
    actor_opt = adam_init(agent.actor, config.actor_lr)
    critic_opt = adam_init(agent.critic, config.critic_lr)
    buffer = ReplayBuffer(config.replay_capacity, seed=[config.seed, _REPLAY_STREAM])
    noise = OuNoise(
        rng=np.random.default_rng([config.seed, _NOISE_STREAM]),
        theta=config.noise_theta,
        sigma=config.noise_sigma,
        scale=config.noise_scale_initial,
    )
    decay = config.noise_decay_episodes if config.noise_decay_episodes is not None else config.episodes
    seeds = episode_reset_seeds(config.seed, config.episodes)

    metrics: list[MetricsRow] = []
    rewards: list[float] = []
    for ep in range(config.episodes):
        noise.scale = linear_schedule(
            config.noise_scale_initial, config.noise_scale_final, decay, ep
        )
        state = env.reset(seed=seeds[ep])
        ep_reward = 0.0
        abs_comfort = 0.0
        energy = 0.0
        slots = 0
        terminal = False
        while not terminal:
            action = act(agent, state, noise, explore=True)
            result = env.step(action, comfort)
            replay_push(
                buffer,
                # episode ends are bookkeeping, not real terminals: keep bootstrapping
                Transition(state, action, result.reward, result.state, terminal=False),
            )
            if len(buffer) >= config.replay_min_fill:
                ddpg_update(
                    agent, replay_sample(buffer, config.batch_size), actor_opt, critic_opt
                )
            state = result.state
            ep_reward += result.reward
            abs_comfort += abs(result.comfort)
            energy += result.energy_kwh
            slots += 1
            terminal = result.terminal
        rewards.append(ep_reward)
        metrics.append(
            MetricsRow(
                episode=ep + 1,
                reward=ep_reward,
                avg100_reward=float(np.mean(rewards[-100:])),
                mean_abs_comfort=abs_comfort / slots,
                energy_kwh=energy,
                noise_scale=noise.scale,
            )
        )
    return agent, metrics


# ------------------------------------------------------------ discrete actions

@dataclass(frozen=True)
class DiscreteActionTable:
    """Temperature-major enumeration of set-point pairs."""

    actions: tuple[ControlAction, ...]
    temp_levels: tuple[float, ...]
    humidity_levels: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.actions)

    def index_of(self, action: ControlAction) -> int:
        return self.actions.index(action)


def build_action_table(
    temp_range: tuple[float, float] = TEMP_SETPOINT_RANGE,
    temp_step: float = 0.1,
    hum_range: tuple[float, float] = HUMIDITY_SETPOINT_RANGE,
    hum_step: float = 1.0,
) -> DiscreteActionTable:
    """Enumerate start + k*step levels on each axis, temperature-major.

    The temperature axis excludes its upper end (a whole number of steps
    tiles the range); the humidity axis includes both ends.  Steps must be
    positive and no larger than their span.
    """
    t_lo, t_hi = temp_range
    h_lo, h_hi = hum_range
    if temp_step <= 0 or hum_step <= 0:
        raise ValueError("steps must be positive")
    t_span, h_span = t_hi - t_lo, h_hi - h_lo
    if temp_step > t_span * (1 + 1e-12) or hum_step > h_span * (1 + 1e-12):
        raise ValueError("step larger than its range span")
    n_temp = math.ceil(t_span / temp_step - 1e-9)
    n_hum = math.floor(h_span / hum_step + 1e-9) + 1
    temp_levels = tuple(t_lo + k * temp_step for k in range(n_temp))
    hum_levels = tuple(h_lo + k * hum_step for k in range(n_hum))
    actions = tuple(
        ControlAction(t, h) for t in temp_levels for h in hum_levels
    )
    return DiscreteActionTable(actions, temp_levels, hum_levels)


def bin_state(state: ThermalState, temp_bin: float = 1.0, hum_bin: float = 5.0) -> tuple:
    """Coarse state key: temperatures to temp_bin degC, humidities to hum_bin %."""
    return (
        math.floor(state.t_in / temp_bin),
        math.floor(state.h_in / hum_bin),
        math.floor(state.t_out / temp_bin),
        math.floor(state.h_out / hum_bin),
    )


class QTable:
    """Sparse state-keyed action-value table (rows created on first touch)."""

    def __init__(self, n_actions: int):
        if n_actions < 1:
            raise ValueError("need at least one action")
        self.n_actions = n_actions
        self.rows: dict[tuple, np.ndarray] = {}

    def row(self, key: tuple) -> np.ndarray:
        r = self.rows.get(key)
        if r is None:
            r = self.rows[key] = np.zeros(self.n_actions)
        return r

    def greedy(self, key: tuple) -> int:
        return int(np.argmax(self.row(key)))


def q_learning_step(
    table: QTable, key: tuple, action: int, reward: float, next_key: tuple,
    alpha: float, gamma: float,
) -> None:
    row = table.row(key)
    target = reward + gamma * float(table.row(next_key).max())
    row[action] += alpha * (target - row[action])


def sarsa_step(
    table: QTable, key: tuple, action: int, reward: float, next_key: tuple,
    next_action: int, alpha: float, gamma: float,
) -> None:
    row = table.row(key)
    target = reward + gamma * float(table.row(next_key)[next_action])
    row[action] += alpha * (target - row[action])


@dataclass(frozen=True)
class TabularConfig:
    episodes: int = 300
    seed: int = 0
    gamma: float = 0.99
    learning_rate: float = 0.1
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.05
    epsilon_decay_episodes: int | None = None
    temp_step: float = 1.0
    hum_step: float = 5.0
    temp_bin: float = 1.0
    hum_bin: float = 5.0


@dataclass
class TabularPolicy:
    table: QTable
    actions: DiscreteActionTable
    temp_bin: float
    hum_bin: float

    def greedy_action(self, state: ThermalState) -> ControlAction:
        key = bin_state(state, self.temp_bin, self.hum_bin)
        return self.actions.actions[self.table.greedy(key)]


def train_tabular(
    env: ZoneEnv, comfort: ComfortModel, config: TabularConfig, algo: str
) -> tuple[TabularPolicy, list[MetricsRow]]:
    """One-step tabular TD control, on-policy (sarsa) or off-policy (q_learning)."""
    if algo not in ("q_learning", "sarsa"):
        raise ValueError(f"unknown tabular algorithm {algo!r}")
    actions = build_action_table(temp_step=config.temp_step, hum_step=config.hum_step)
    table = QTable(len(actions))
    rng = np.random.default_rng([config.seed, _EXPLORE_STREAM])
    decay = (
        config.epsilon_decay_episodes
        if config.epsilon_decay_episodes is not None
        else config.episodes
    )
    seeds = episode_reset_seeds(config.seed, config.episodes)

    def choose(key: tuple, epsilon: float) -> int:
        if rng.random() < epsilon:
            return int(rng.integers(len(actions)))
        return table.greedy(key)

    metrics: list[MetricsRow] = []
    rewards: list[float] = []
    for ep in range(config.episodes):
        epsilon = linear_schedule(
            config.epsilon_initial, config.epsilon_final, decay, ep
        )
        state = env.reset(seed=seeds[ep])
        key = bin_state(state, config.temp_bin, config.hum_bin)
        a_idx = choose(key, epsilon)
        ep_reward = 0.0
        abs_comfort = 0.0
        energy = 0.0
        slots = 0
        terminal = False
        while not terminal:
            result = env.step(actions.actions[a_idx], comfort)
            next_key = bin_state(result.state, config.temp_bin, config.hum_bin)
            next_idx = choose(next_key, epsilon)
            if algo == "q_learning":
                q_learning_step(
                    table, key, a_idx, result.reward, next_key,
                    config.learning_rate, config.gamma,
                )
            else:
                sarsa_step(
                    table, key, a_idx, result.reward, next_key, next_idx,
                    config.learning_rate, config.gamma,
                )
            key, a_idx = next_key, next_idx
            ep_reward += result.reward
            abs_comfort += abs(result.comfort)
            energy += result.energy_kwh
            slots += 1
            terminal = result.terminal
        rewards.append(ep_reward)
        metrics.append(
            MetricsRow(
                episode=ep + 1,
                reward=ep_reward,
                avg100_reward=float(np.mean(rewards[-100:])),
                mean_abs_comfort=abs_comfort / slots,
                energy_kwh=energy,
                noise_scale=epsilon,
            )
        )
    return TabularPolicy(table, actions, config.temp_bin, config.hum_bin), metrics


# ------------------------------------------------------------------ DQN

@dataclass(frozen=True)
class DqnConfig:
    episodes: int = 300
    seed: int = 0
    gamma: float = 0.99
    learning_rate: float = 0.001
    batch_size: int = 128
    replay_capacity: int = 100_000
    replay_min_fill: int = 1000
    tau: float = 0.001
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.05
    epsilon_decay_episodes: int | None = None
    temp_step: float = 1.0
    hum_step: float = 5.0
    hidden: int = 128


@dataclass
class DqnPolicy:
    net: DenseNet
    actions: DiscreteActionTable

    def greedy_action(self, state: ThermalState) -> ControlAction:
        q = forward(self.net, scale_state(state.vector()))
        return self.actions.actions[int(np.argmax(q))]


def dqn_update(
    net: DenseNet,
    target_net: DenseNet,
    minibatch: Sequence[Transition],
    action_index: dict[tuple[float, float], int],
    opt: OptimState,
    gamma: float,
    tau: float,
) -> float:
    """TD regression on the chosen action's value; target net softly blended."""
    n = len(minibatch)
    if n == 0:
        raise ValueError("empty minibatch")
    S = np.array([scale_state(t.state.vector()) for t in minibatch])
    S2 = np.array([scale_state(t.next_state.vector()) for t in minibatch])
    R = np.array([t.reward for t in minibatch])
    mask = np.array([0.0 if t.terminal else 1.0 for t in minibatch])
    idx = np.array(
        [action_index[(t.action.t_set, t.action.h_set)] for t in minibatch]
    )
    y = R + gamma * mask * forward_batch(target_net, S2).max(axis=1)
    pred = forward_batch(net, S)
    err = pred[np.arange(n), idx] - y
    loss = float(np.mean(err * err))
    if not math.isfinite(loss):
        raise RuntimeError("non-finite TD loss; aborting run")
    dLdY = np.zeros_like(pred)
    dLdY[np.arange(n), idx] = 2.0 * err / n
    grad, _ = gradient_batch(net, S, dLdY)
    adam_step(net, grad, opt)
    soft_update(target_net, net, tau)
    return loss


def train_dqn(
    env: ZoneEnv, comfort: ComfortModel, config: DqnConfig
) -> tuple[DqnPolicy, list[MetricsRow]]:
    """Epsilon-greedy TD learning over the enumerated action table."""
    actions = build_action_table(temp_step=config.temp_step, hum_step=config.hum_step)
    action_index = {
        (a.t_set, a.h_set): i for i, a in enumerate(actions.actions)
    }
    rng_init = np.random.default_rng([config.seed, _INIT_STREAM])
    net = init_dense_net(
        [4, config.hidden, config.hidden, len(actions)], ["tanh", "tanh", "linear"], rng_init
    )
    target_net = net.copy()
    opt = adam_init(net, config.learning_rate)
    buffer = ReplayBuffer(config.replay_capacity, seed=[config.seed, _REPLAY_STREAM])
    rng = np.random.default_rng([config.seed, _EXPLORE_STREAM])
    decay = (
        config.epsilon_decay_episodes
        if config.epsilon_decay_episodes is not None
        else config.episodes
    )
    seeds = episode_reset_seeds(config.seed, config.episodes)

    metrics: list[MetricsRow] = []
    rewards: list[float] = []
    for ep in range(config.episodes):
        epsilon = linear_schedule(
            config.epsilon_initial, config.epsilon_final, decay, ep
        )
        state = env.reset(seed=seeds[ep])
        ep_reward = 0.0
        abs_comfort = 0.0
        energy = 0.0
        slots = 0
        terminal = False
        while not terminal:
            if rng.random() < epsilon:
                a_idx = int(rng.integers(len(actions)))
            else:
                a_idx = int(np.argmax(forward(net, scale_state(state.vector()))))
            action = actions.actions[a_idx]
            result = env.step(action, comfort)
            replay_push(
                buffer, Transition(state, action, result.reward, result.state, terminal=False)
            )
            if len(buffer) >= config.replay_min_fill:
                dqn_update(
                    net,
                    target_net,
                    replay_sample(buffer, config.batch_size),
                    action_index,
                    opt,
                    config.gamma,
                    config.tau,
                )
            state = result.state
            ep_reward += result.reward
            abs_comfort += abs(result.comfort)
            energy += result.energy_kwh
            slots += 1
            terminal = result.terminal
        rewards.append(ep_reward)
        metrics.append(
            MetricsRow(
                episode=ep + 1,
                reward=ep_reward,
                avg100_reward=float(np.mean(rewards[-100:])),
                mean_abs_comfort=abs_comfort / slots,
                energy_kwh=energy,
                noise_scale=epsilon,
            )
        )
    return DqnPolicy(net, actions), metrics


# ------------------------------------------------------------- persistence

class AgentCheckpointError(ValueError):
    """Raised for missing, corrupt, or version-incompatible agent checkpoints."""


_MANIFEST_NAME = "manifest.txt"


def save_agent(obj, out_dir) -> None:
    """Write an agent checkpoint directory: manifest plus one file per network."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    if isinstance(obj, DdpgAgent):
        lines.append("hvac-agent v1 ddpg")
        lines.append(f"gamma {obj.gamma!r}")
        lines.append(f"tau {obj.tau!r}")
        for role in ("actor", "critic", "target_actor", "target_critic"):
            filename = f"{role}.txt"
            save_dense_net(getattr(obj, role), os.path.join(out_dir, filename))
            lines.append(f"network {role} {filename}")
    elif isinstance(obj, DqnPolicy):
        lines.append("hvac-agent v1 dqn")
        lines.append(_table_line(obj.actions))
        save_dense_net(obj.net, os.path.join(out_dir, "qnet.txt"))
        lines.append("network qnet qnet.txt")
    elif isinstance(obj, TabularPolicy):
        lines.append("hvac-agent v1 tabular")
        lines.append(_table_line(obj.actions))
        lines.append(f"bins {obj.temp_bin!r} {obj.hum_bin!r}")
        with open(os.path.join(out_dir, "qtable.txt"), "w") as f:
            for key in sorted(obj.table.rows):
                values = " ".join(f"{v:.16e}" for v in obj.table.rows[key])
                f.write(" ".join(str(k) for k in key) + " : " + values + "\n")
        lines.append("table qtable qtable.txt")
    else:
        raise AgentCheckpointError(f"cannot checkpoint object of type {type(obj).__name__}")
    with open(os.path.join(out_dir, _MANIFEST_NAME), "w") as f:
        f.write("\n".join(lines) + "\n")


def _table_line(table: DiscreteActionTable) -> str:
    t0, t1 = table.temp_levels[0], table.temp_levels[-1]
    h0, h1 = table.humidity_levels[0], table.humidity_levels[-1]
    t_step = table.temp_levels[1] - table.temp_levels[0] if len(table.temp_levels) > 1 else 1.0
    h_step = (
        table.humidity_levels[1] - table.humidity_levels[0]
        if len(table.humidity_levels) > 1
        else 1.0
    )
    return (
        f"action_table {len(table.temp_levels)} {len(table.humidity_levels)} "
        f"{t0!r} {t_step!r} {h0!r} {h_step!r}"
    )


def _parse_table_line(parts: list[str]) -> DiscreteActionTable:
    n_temp, n_hum = int(parts[1]), int(parts[2])
    t0, t_step, h0, h_step = (float(p) for p in parts[3:7])
    temp_levels = tuple(t0 + k * t_step for k in range(n_temp))
    hum_levels = tuple(h0 + k * h_step for k in range(n_hum))
    actions = tuple(ControlAction(t, h) for t in temp_levels for h in hum_levels)
    return DiscreteActionTable(actions, temp_levels, hum_levels)


def load_agent(out_dir):
    manifest = os.path.join(out_dir, _MANIFEST_NAME)
    if not os.path.exists(manifest):
        raise AgentCheckpointError(f"missing manifest: {manifest}")
    with open(manifest) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        raise AgentCheckpointError(f"empty manifest: {manifest}")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "hvac-agent":
        raise AgentCheckpointError(f"bad manifest header: {lines[0]!r}")
    if head[1] != "v1":
        raise AgentCheckpointError(f"unsupported checkpoint version {head[1]!r}")
    kind = head[2]

    nets: dict[str, DenseNet] = {}
    scalars: dict[str, float] = {}
    table = None
    bins = None
    qtable_file = None
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "network":
            path = os.path.join(out_dir, parts[2])
            if not os.path.exists(path):
                raise AgentCheckpointError(f"manifest references missing file: {parts[2]}")
            try:
                nets[parts[1]] = load_dense_net(path)
            except ValueError as exc:
                raise AgentCheckpointError(f"corrupt network file {parts[2]}: {exc}") from exc
        elif parts[0] == "action_table":
            table = _parse_table_line(parts)
        elif parts[0] == "bins":
            bins = (float(parts[1]), float(parts[2]))
        elif parts[0] == "table":
            qtable_file = parts[2]
        elif parts[0] in ("gamma", "tau"):
            scalars[parts[0]] = float(parts[1])
        else:
            raise AgentCheckpointError(f"unknown manifest entry: {line!r}")

    if kind == "ddpg":
        try:
            return DdpgAgent(
                nets["actor"],
                nets["critic"],
                nets["target_actor"],
                nets["target_critic"],
                gamma=scalars.get("gamma", 0.99),
                tau=scalars.get("tau", 0.001),
            )
        except KeyError as exc:
            raise AgentCheckpointError(f"manifest missing network role {exc}") from exc
    if kind == "dqn":
        if table is None or "qnet" not in nets:
            raise AgentCheckpointError("dqn manifest needs an action table and a qnet")
        return DqnPolicy(nets["qnet"], table)
    if kind == "tabular":
        if table is None or bins is None or qtable_file is None:
            raise AgentCheckpointError("tabular manifest needs a table, bins, and values")
        qt = QTable(len(table))
        path = os.path.join(out_dir, qtable_file)
        if not os.path.exists(path):
            raise AgentCheckpointError(f"manifest references missing file: {qtable_file}")
        with open(path) as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    key_part, value_part = line.split(":")
                    key = tuple(int(k) for k in key_part.split())
                    values = np.array([float(v) for v in value_part.split()])
                except ValueError:
                    raise AgentCheckpointError(
                        f"{qtable_file} line {lineno}: unparseable row"
                    ) from None
                if len(values) != len(table):
                    raise AgentCheckpointError(
                        f"{qtable_file} line {lineno}: expected {len(table)} values"
                    )
                qt.rows[key] = values
        return TabularPolicy(qt, table, bins[0], bins[1])
    raise AgentCheckpointError(f"unknown agent kind {kind!r}")
