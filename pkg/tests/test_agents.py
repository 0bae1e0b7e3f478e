import math

import numpy as np
import pytest

from helpers import constant_comfort_model, constant_weather
from hvacrl.agents import (
    AgentCheckpointError,
    DdpgAgent,
    DdpgConfig,
    DiscreteActionTable,
    DqnConfig,
    OuNoise,
    QTable,
    ReplayBuffer,
    TabularConfig,
    Transition,
    act,
    bin_state,
    build_action_table,
    ddpg_update,
    ddpg_update_arrays,
    dqn_update,
    episode_reset_seeds,
    init_ddpg_agent,
    linear_schedule,
    load_agent,
    load_metrics_csv,
    ou_sample,
    q_learning_step,
    replay_push,
    replay_sample,
    sarsa_step,
    save_agent,
    scale_state,
    td_target,
    train_ddpg,
    train_dqn,
    train_tabular,
    write_metrics_csv,
)
from hvacrl.comfort import ComfortModel
from hvacrl.envsim import ControlAction, ThermalState, ZoneConfig, ZoneEnv
from hvacrl.nets import DenseNet, adam_init, forward


def small_agent(seed=0, **kwargs):
    return init_ddpg_agent(np.random.default_rng(seed), hidden=8, **kwargs)


def some_state(t_in=26.0, h_in=60.0, t_out=30.0, h_out=80.0, slot=0):
    return ThermalState(t_in, h_in, t_out, h_out, slot)


def quick_env(slots=48):
    return ZoneEnv(weather=constant_weather(), slots_per_episode=slots)


def zeroed(net: DenseNet) -> DenseNet:
    out = net.copy()
    for w in out.weights:
        w[:] = 0.0
    for b in out.biases:
        b[:] = 0.0
    return out


# ---------------------------------------------------------------- OU noise

def test_ou_fixed_point_at_mean():
    noise = OuNoise(rng=np.random.default_rng(0), dim=2, sigma=0.0, mu=0.4, scale=0.5)
    noise.x = np.full(2, 0.4)
    for _ in range(10):
        assert np.allclose(ou_sample(noise, 1.0), 0.5 * 0.4, atol=0)


def test_ou_mean_reversion():
    noise = OuNoise(rng=np.random.default_rng(0), dim=1, sigma=0.0, mu=0.0, scale=1.0)
    noise.x = np.array([2.0])
    gaps = []
    for _ in range(20):
        ou_sample(noise, 1.0)
        gaps.append(abs(noise.x[0]))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_ou_stationary_spread():
    noise = OuNoise(rng=np.random.default_rng(7), dim=1, theta=0.15, sigma=0.2, scale=1.0)
    values = [ou_sample(noise, 1.0)[0] for _ in range(10_000)]
    observed = float(np.std(values[500:]))  # discard burn-in
    expected = 0.2 / math.sqrt(2 * 0.15)
    assert abs(observed - expected) / expected < 0.15


def test_ou_scale_multiplies_output():
    a = OuNoise(rng=np.random.default_rng(3), dim=1, scale=1.0)
    b = OuNoise(rng=np.random.default_rng(3), dim=1, scale=0.25)
    for _ in range(5):
        va = ou_sample(a, 1.0)[0]
        vb = ou_sample(b, 1.0)[0]
        assert vb == pytest.approx(0.25 * va, rel=1e-12)


def test_ou_rejects_bad_dt():
    noise = OuNoise(rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        ou_sample(noise, 0.0)


# ---------------------------------------------------------------- acting

def test_act_deterministic_without_exploration():
    agent = small_agent()
    s = some_state()
    assert act(agent, s, None, explore=False) == act(agent, s, None, explore=False)
    assert agent.greedy_action(s) == act(agent, s, None, explore=False)


def test_act_zero_scale_matches_greedy():
    agent = small_agent()
    s = some_state()
    noise = OuNoise(rng=np.random.default_rng(1), scale=0.0)
    assert act(agent, s, noise, explore=True) == act(agent, s, None, explore=False)


def test_act_always_within_bounds():
    agent = small_agent()
    noise = OuNoise(rng=np.random.default_rng(2), scale=5.0)  # exaggerated noise
    rng = np.random.default_rng(3)
    for _ in range(200):
        s = some_state(
            rng.uniform(10, 40), rng.uniform(0, 100), rng.uniform(10, 40), rng.uniform(0, 100)
        )
        a = act(agent, s, noise, explore=True)
        assert 15.0 <= a.t_set <= 35.0
        assert 0.0 <= a.h_set <= 100.0


def test_act_requires_noise_when_exploring():
    with pytest.raises(ValueError):
        act(small_agent(), some_state(), None, explore=True)


# ---------------------------------------------------------------- replay

def transition_with_reward(r, terminal=False):
    return Transition(some_state(), ControlAction(24.0, 60.0), r, some_state(t_in=25.0), terminal)


def test_replay_fifo_eviction():
    buf = ReplayBuffer(capacity=2, seed=0)
    a, b, c = (transition_with_reward(float(i)) for i in range(3))
    replay_push(buf, a)
    replay_push(buf, b)
    replay_push(buf, c)
    assert len(buf) == 2
    rewards = {t.reward for t in buf._items}
    assert rewards == {1.0, 2.0}


def test_replay_single_element_oversample():
    buf = ReplayBuffer(capacity=10, seed=0)
    t = transition_with_reward(5.0)
    replay_push(buf, t)
    batch = replay_sample(buf, 4)
    assert len(batch) == 4
    assert all(item is t for item in batch)


def test_replay_uniformity():
    buf = ReplayBuffer(capacity=10, seed=123)
    for i in range(10):
        replay_push(buf, transition_with_reward(float(i)))
    counts = np.zeros(10)
    for t in replay_sample(buf, 100_000):
        counts[int(t.reward)] += 1
    freqs = counts / 100_000
    assert np.all(freqs >= 0.08) and np.all(freqs <= 0.12)


def test_replay_empty_errors():
    buf = ReplayBuffer(capacity=4, seed=0)
    with pytest.raises(ValueError):
        replay_sample(buf, 1)
    replay_push(buf, transition_with_reward(0.0))
    with pytest.raises(ValueError):
        replay_sample(buf, 0)


def test_replay_deterministic_given_seed():
    def draw():
        buf = ReplayBuffer(capacity=8, seed=99)
        for i in range(8):
            replay_push(buf, transition_with_reward(float(i)))
        return [t.reward for t in replay_sample(buf, 32)]

    assert draw() == draw()


def test_transition_rejects_nonfinite_reward():
    with pytest.raises(ValueError):
        transition_with_reward(float("nan"))


# ---------------------------------------------------------------- TD target

def agent_with_constant_target_q(value, gamma=0.99):
    agent = small_agent(gamma=gamma)
    agent.target_critic = zeroed(agent.target_critic)
    agent.target_critic.biases[-1][0] = value
    return agent


def test_td_target_gamma_zero():
    agent = agent_with_constant_target_q(10.0, gamma=0.0)
    assert td_target(agent, transition_with_reward(1.25)) == 1.25


def test_td_target_terminal():
    agent = agent_with_constant_target_q(10.0)
    assert td_target(agent, transition_with_reward(-0.75, terminal=True)) == -0.75


def test_td_target_arithmetic():
    agent = agent_with_constant_target_q(10.0, gamma=0.99)
    assert td_target(agent, transition_with_reward(1.0)) == pytest.approx(10.9, abs=1e-12)


# ---------------------------------------------------------------- DDPG update

def test_update_zero_error_leaves_critic_unchanged():
    agent = small_agent()
    agent.critic = zeroed(agent.critic)
    agent.target_critic = zeroed(agent.target_critic)
    actor_opt = adam_init(agent.actor, 0.001)
    critic_opt = adam_init(agent.critic, 0.001)
    batch = [transition_with_reward(0.0, terminal=True) for _ in range(4)]
    before = agent.critic.copy()
    critic_loss, _ = ddpg_update(agent, batch, actor_opt, critic_opt)
    assert critic_loss == 0.0
    for w0, w1 in zip(before.weights, agent.critic.weights):
        assert np.array_equal(w0, w1)
    for b0, b1 in zip(before.biases, agent.critic.biases):
        assert np.array_equal(b0, b1)


def test_update_tau_zero_freezes_targets():
    agent = small_agent(tau=0.0)
    frozen_actor = agent.target_actor.copy()
    frozen_critic = agent.target_critic.copy()
    actor_opt = adam_init(agent.actor, 0.001)
    critic_opt = adam_init(agent.critic, 0.001)
    ddpg_update(agent, [transition_with_reward(1.0)] * 8, actor_opt, critic_opt)
    for w0, w1 in zip(frozen_actor.weights, agent.target_actor.weights):
        assert np.array_equal(w0, w1)
    for w0, w1 in zip(frozen_critic.weights, agent.target_critic.weights):
        assert np.array_equal(w0, w1)


def test_update_soft_blend_exact():
    agent = small_agent(tau=0.001)
    prev_target = [w.copy() for w in agent.target_critic.weights]
    actor_opt = adam_init(agent.actor, 0.001)
    critic_opt = adam_init(agent.critic, 0.001)
    ddpg_update(agent, [transition_with_reward(0.5)] * 8, actor_opt, critic_opt)
    for w_prev, w_online, w_target in zip(
        prev_target, agent.critic.weights, agent.target_critic.weights
    ):
        expected = 0.001 * w_online + (1.0 - 0.001) * w_prev
        diff = np.abs(w_target - expected)
        ulp = np.spacing(np.abs(expected))
        assert np.all(diff <= ulp)


def test_update_rejects_empty_batch():
    agent = small_agent()
    with pytest.raises(ValueError):
        ddpg_update(agent, [], adam_init(agent.actor, 1e-3), adam_init(agent.critic, 1e-3))


def test_ddpg_bandit_converges_to_optimum():
    # One constant state, one action dimension, reward -(a - 0.3)^2: the
    # greedy action should land near 0.3.
    rng = np.random.default_rng(42)
    agent = init_ddpg_agent(rng, state_dim=1, action_dim=1, hidden=32, gamma=0.9, tau=0.01)
    actor_opt = adam_init(agent.actor, 0.002)
    critic_opt = adam_init(agent.critic, 0.01)
    batch = 64
    S = np.zeros((batch, 1))
    for _ in range(2000):
        A = rng.uniform(-1.0, 1.0, size=(batch, 1))
        R = -((A[:, 0] - 0.3) ** 2)
        ddpg_update_arrays(
            agent, S, A, R, S, np.zeros(batch), actor_opt, critic_opt
        )
    greedy = forward(agent.actor, np.zeros(1))[0]
    assert abs(greedy - 0.3) < 0.05


# ---------------------------------------------------------------- DDPG training loop

def tiny_ddpg_config(episodes=3, seed=0):
    return DdpgConfig(
        episodes=episodes,
        seed=seed,
        batch_size=16,
        replay_min_fill=24,
        replay_capacity=500,
        hidden=16,
    )


def test_train_ddpg_zero_episodes():
    agent, metrics = train_ddpg(quick_env(), constant_comfort_model(), tiny_ddpg_config(0))
    assert metrics == []
    assert isinstance(agent, DdpgAgent)


def test_train_ddpg_deterministic():
    def run():
        _, metrics = train_ddpg(quick_env(), constant_comfort_model(), tiny_ddpg_config())
        return metrics

    assert run() == run()


def test_train_ddpg_metrics_shape():
    _, metrics = train_ddpg(quick_env(), constant_comfort_model(), tiny_ddpg_config(4, seed=5))
    assert [m.episode for m in metrics] == [1, 2, 3, 4]
    for m in metrics:
        assert m.energy_kwh >= 0.0
        assert m.mean_abs_comfort >= 0.0
    # trailing average over everything seen so far
    assert metrics[2].avg100_reward == pytest.approx(
        np.mean([metrics[0].reward, metrics[1].reward, metrics[2].reward])
    )
    # linear exploration decay from 0.7 toward 0.1
    assert metrics[0].noise_scale == pytest.approx(0.7)
    assert metrics[1].noise_scale == pytest.approx(0.7 + (0.1 - 0.7) / 4)


def test_metrics_csv_round_trip(tmp_path):
    _, metrics = train_ddpg(quick_env(), constant_comfort_model(), tiny_ddpg_config(2))
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, metrics)
    assert load_metrics_csv(path) == metrics
    assert (
        path.read_text().splitlines()[0]
        == "episode,reward,avg100_reward,mean_abs_comfort,energy_kwh,noise_scale"
    )


def test_episode_seed_derivation():
    assert episode_reset_seeds(1, 0) == []
    a = episode_reset_seeds(1, 5)
    assert a == episode_reset_seeds(1, 5)
    assert a[:3] == episode_reset_seeds(1, 3)
    assert episode_reset_seeds(2, 5) != a


def test_linear_schedule_endpoints():
    assert linear_schedule(0.7, 0.1, 300, 0) == pytest.approx(0.7)
    assert linear_schedule(0.7, 0.1, 300, 150) == pytest.approx(0.4)
    assert linear_schedule(0.7, 0.1, 300, 300) == pytest.approx(0.1)
    assert linear_schedule(0.7, 0.1, 300, 900) == pytest.approx(0.1)
    assert linear_schedule(1.0, 0.05, 0, 0) == 0.05


# ---------------------------------------------------------------- action table

def test_action_table_default_counts():
    table = build_action_table()
    assert len(table.temp_levels) == 200
    assert len(table.humidity_levels) == 101
    assert len(table) == 20_200


def test_action_table_temperature_major_order():
    table = build_action_table(temp_step=1.0, hum_step=5.0)
    assert len(table.temp_levels) == 20
    assert len(table.humidity_levels) == 21
    assert len(table) == 420
    assert table.actions[0] == ControlAction(15.0, 0.0)
    assert table.actions[1] == ControlAction(15.0, 5.0)
    assert table.actions[21] == ControlAction(16.0, 0.0)


def test_action_table_degenerate_and_errors():
    table = build_action_table(temp_step=20.0, hum_step=100.0)
    assert len(table.temp_levels) == 1
    assert len(table.humidity_levels) == 2  # both ends of the humidity span
    with pytest.raises(ValueError):
        build_action_table(temp_step=25.0)
    with pytest.raises(ValueError):
        build_action_table(hum_step=-1.0)


def test_action_table_entries_within_bounds():
    # ControlAction validates on construction, so building is the check
    table = build_action_table()
    assert max(t for t in table.temp_levels) < 35.0
    assert table.humidity_levels[-1] == 100.0


# ---------------------------------------------------------------- tabular

def test_bin_state_floors():
    key = bin_state(some_state(24.9, 74.9, 31.2, 80.0))
    assert key == (24, 14, 31, 16)


def test_q_learning_bandit():
    table = QTable(2)
    s = (0,)
    for i in range(1000):
        a = i % 2
        q_learning_step(table, s, a, float(a), s, alpha=0.1, gamma=0.0)
    assert abs(table.row(s)[1] - 1.0) < 0.05
    assert abs(table.row(s)[0] - 0.0) < 0.05
    assert table.greedy(s) == 1


def test_sarsa_bandit():
    table = QTable(2)
    s = (0,)
    for i in range(1000):
        a = i % 2
        sarsa_step(table, s, a, float(a), s, next_action=(i + 1) % 2, alpha=0.1, gamma=0.0)
    assert abs(table.row(s)[1] - 1.0) < 0.05


def test_zero_learning_rate_never_updates():
    table = QTable(3)
    q_learning_step(table, (1,), 0, 5.0, (2,), alpha=0.0, gamma=0.9)
    sarsa_step(table, (1,), 1, 5.0, (2,), 0, alpha=0.0, gamma=0.9)
    assert np.all(table.row((1,)) == 0.0)


def test_train_tabular_zero_lr_keeps_table_empty_of_value():
    config = TabularConfig(episodes=2, learning_rate=0.0)
    policy, _ = train_tabular(quick_env(), constant_comfort_model(), config, "q_learning")
    assert all(np.all(row == 0.0) for row in policy.table.rows.values())


def test_train_tabular_deterministic():
    config = TabularConfig(episodes=3, seed=4)

    def run(algo):
        return train_tabular(quick_env(), constant_comfort_model(), config, algo)[1]

    assert run("q_learning") == run("q_learning")
    assert run("sarsa") == run("sarsa")


def test_train_tabular_rejects_unknown_algo():
    with pytest.raises(ValueError):
        train_tabular(quick_env(), constant_comfort_model(), TabularConfig(episodes=1), "dyna")


def test_tabular_policy_actions_valid():
    config = TabularConfig(episodes=2, seed=1)
    policy, _ = train_tabular(quick_env(), constant_comfort_model(), config, "sarsa")
    a = policy.greedy_action(some_state())
    assert 15.0 <= a.t_set <= 35.0
    assert 0.0 <= a.h_set <= 100.0


# ---------------------------------------------------------------- DQN

class RecordingEnv(ZoneEnv):
    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.actions_seen = []

    def step(self, action, comfort):
        self.actions_seen.append(action)
        return super().step(action, comfort)


def test_dqn_pure_exploration_covers_table():
    env = RecordingEnv(weather=constant_weather())
    config = DqnConfig(
        episodes=11,
        seed=3,
        epsilon_initial=1.0,
        epsilon_final=1.0,
        temp_step=5.0,
        hum_step=25.0,
        replay_min_fill=10_000_000,  # never update; this probes exploration only
    )
    train_dqn(env, constant_comfort_model(), config)
    table = build_action_table(temp_step=5.0, hum_step=25.0)
    counts = {a: 0 for a in table.actions}
    for a in env.actions_seen:
        counts[a] += 1
    total = len(env.actions_seen)
    uniform = total / len(table)
    assert total == 11 * 48
    for a, c in counts.items():
        assert uniform / 3 <= c <= uniform * 3, (a, c)


def test_dqn_gamma_zero_regression_loss_decreases():
    table = build_action_table(temp_step=5.0, hum_step=25.0)
    action_index = {(a.t_set, a.h_set): i for i, a in enumerate(table.actions)}
    rng = np.random.default_rng(0)
    from hvacrl.nets import init_dense_net

    net = init_dense_net([4, 16, 16, len(table)], ["tanh", "tanh", "linear"], rng)
    target = net.copy()
    opt = adam_init(net, 0.01)
    batch = [
        Transition(
            some_state(20.0 + i, 40.0 + i, 28.0, 70.0),
            table.actions[i],
            float(i % 5) - 2.0,
            some_state(21.0 + i, 41.0 + i, 28.0, 70.0),
        )
        for i in range(10)
    ]
    first = dqn_update(net, target, batch, action_index, opt, gamma=0.0, tau=0.0)
    last = None
    for _ in range(60):
        last = dqn_update(net, target, batch, action_index, opt, gamma=0.0, tau=0.0)
    assert last < first


def test_train_dqn_deterministic():
    config = DqnConfig(
        episodes=2,
        seed=9,
        batch_size=8,
        replay_min_fill=16,
        hidden=16,
        temp_step=5.0,
        hum_step=25.0,
    )

    def run():
        return train_dqn(quick_env(), constant_comfort_model(), config)[1]

    assert run() == run()


def test_dqn_policy_greedy_is_pure():
    config = DqnConfig(
        episodes=1, seed=2, replay_min_fill=10_000, temp_step=5.0, hum_step=25.0, hidden=16
    )
    policy, _ = train_dqn(quick_env(), constant_comfort_model(), config)
    s = some_state()
    assert policy.greedy_action(s) == policy.greedy_action(s)


# ---------------------------------------------------------------- checkpoints

def test_ddpg_checkpoint_round_trip(tmp_path):
    agent, _ = train_ddpg(quick_env(), constant_comfort_model(), tiny_ddpg_config(2))
    save_agent(agent, tmp_path / "agent")
    restored = load_agent(tmp_path / "agent")
    rng = np.random.default_rng(17)
    for _ in range(100):
        s = some_state(
            rng.uniform(15, 35), rng.uniform(10, 95), rng.uniform(20, 38), rng.uniform(40, 95)
        )
        assert restored.greedy_action(s) == agent.greedy_action(s)
    assert restored.gamma == agent.gamma
    assert restored.tau == agent.tau


def test_tabular_checkpoint_round_trip(tmp_path):
    policy, _ = train_tabular(
        quick_env(), constant_comfort_model(), TabularConfig(episodes=2, seed=8), "q_learning"
    )
    save_agent(policy, tmp_path / "tab")
    restored = load_agent(tmp_path / "tab")
    assert set(restored.table.rows) == set(policy.table.rows)
    for key, row in policy.table.rows.items():
        assert np.array_equal(restored.table.rows[key], row)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        s = some_state(rng.uniform(15, 35), rng.uniform(10, 95), 30.0, 80.0)
        assert restored.greedy_action(s) == policy.greedy_action(s)


def test_dqn_checkpoint_round_trip(tmp_path):
    config = DqnConfig(
        episodes=1, seed=5, replay_min_fill=30, batch_size=8, hidden=16,
        temp_step=5.0, hum_step=25.0,
    )
    policy, _ = train_dqn(quick_env(), constant_comfort_model(), config)
    save_agent(policy, tmp_path / "dqn")
    restored = load_agent(tmp_path / "dqn")
    for seed in range(20):
        rng = np.random.default_rng(seed)
        s = some_state(rng.uniform(15, 35), rng.uniform(10, 95), 30.0, 80.0)
        assert restored.greedy_action(s) == policy.greedy_action(s)


def test_checkpoint_missing_network_file(tmp_path):
    agent = small_agent()
    save_agent(agent, tmp_path / "agent")
    (tmp_path / "agent" / "actor.txt").unlink()
    with pytest.raises(AgentCheckpointError, match="actor.txt"):
        load_agent(tmp_path / "agent")


def test_checkpoint_corrupt_network_file(tmp_path):
    agent = small_agent()
    save_agent(agent, tmp_path / "agent")
    path = tmp_path / "agent" / "critic.txt"
    path.write_text(path.read_text()[:100])
    with pytest.raises(AgentCheckpointError, match="critic.txt"):
        load_agent(tmp_path / "agent")


def test_checkpoint_bad_manifest(tmp_path):
    d = tmp_path / "agent"
    d.mkdir()
    with pytest.raises(AgentCheckpointError):
        load_agent(d)
    (d / "manifest.txt").write_text("hvac-agent v2 ddpg\n")
    with pytest.raises(AgentCheckpointError):
        load_agent(d)
    (d / "manifest.txt").write_text("something-else v1 ddpg\n")
    with pytest.raises(AgentCheckpointError):
        load_agent(d)
