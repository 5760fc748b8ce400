import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from evdqn.agent import (
    ReplayMemory,
    Transition,
    compute_targets,
    decay_epsilon,
    encode_state,
    feature_length,
    greedy_rollout,
    network_config_for,
    push,
    sample_batch,
    select_action,
    train,
)
from evdqn.domain import DRProgram, Hyperparams, make_stations
from evdqn.environment import Environment
from evdqn.errors import ConfigError, InsufficientData
from evdqn.neuralnet import NetworkConfig, init_network

from conftest import leaf, small_env


def tr(i, reward=0.0, done=False, nxt=None):
    f = np.array([float(i)])
    return Transition(f, i, reward, f if nxt is None else nxt, done)


# -- replay memory -------------------------------------------------------------

def test_fifo_eviction_example():
    m = ReplayMemory(3)
    for i in range(5):
        push(m, tr(i))
    assert len(m) == 3
    assert [t.action for t in m.contents()] == [2, 3, 4]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(0, 60))
def test_fifo_keeps_last_capacity_items(capacity, n):
    m = ReplayMemory(capacity)
    for i in range(n):
        m.push(tr(i))
    assert [t.action for t in m.contents()] == list(range(max(0, n - capacity), n))


def test_sample_requires_more_than_batch():
    m = ReplayMemory(10)
    for i in range(4):
        m.push(tr(i))
    with pytest.raises(InsufficientData):
        sample_batch(m, 4, np.random.default_rng(0))
    assert len(sample_batch(m, 3, np.random.default_rng(0))) == 3


def test_sample_without_replacement_and_uniform():
    m = ReplayMemory(20)
    for i in range(20):
        m.push(tr(i))
    rng = np.random.default_rng(1)
    counts = np.zeros(20)
    for _ in range(4000):
        batch = m.sample(5, rng)
        ids = [t.action for t in batch]
        assert len(set(ids)) == 5
        counts[ids] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


def test_capacity_validation():
    with pytest.raises(ConfigError):
        ReplayMemory(0)


# -- features ------------------------------------------------------------------

def test_feature_length_full_size():
    assert feature_length(6, 30, 5) == 97


def test_encode_state_layout(toy_env):
    s = toy_env.reset()
    f = encode_state(s, toy_env)
    assert f.shape == (feature_length(2, 4, 3),)
    assert np.all((f >= 0) & (f <= 1))
    assert f[-2] == 1.0 and f[-1] == 1.0  # all cells free, all EVs waiting
    legal = toy_env.legal_actions(s)
    s2 = toy_env.step(s, toy_env.decode(legal[0])).next_state
    f2 = encode_state(s2, toy_env)
    assert f2[-2] == pytest.approx(5 / 6) and f2[-1] == pytest.approx(0.75)


# -- action selection ------------------------------------------------------------

def test_greedy_picks_argmax_lowest_on_ties():
    p = init_network(NetworkConfig(2, 4, (), 0.0, ()), 0)
    p.weights[0][:] = 0.0
    p.biases[0][:] = [1.0, 3.0, 3.0, 2.0]
    assert select_action(p, np.zeros(2), 0.0, np.random.default_rng(0)) == 1


def test_epsilon_one_is_uniform():
    p = init_network(NetworkConfig(2, 12, (), 0.0, ()), 0)
    rng = np.random.default_rng(5)
    picks = [select_action(p, np.zeros(2), 1.0, rng) for _ in range(12000)]
    counts = np.bincount(picks, minlength=12)
    assert stats.chisquare(counts).pvalue > 1e-3


# -- Bellman targets -------------------------------------------------------------

def _const_net(value, n_out=3):
    p = init_network(NetworkConfig(1, n_out, (), 0.0, ()), 0)
    p.weights[0][:] = 0.0
    p.biases[0][:] = value
    return p


def test_targets_example():
    # r=-10, gamma=0.5, max TQ(s')=4 -> -8; terminal -> r
    tq = _const_net([1.0, 4.0, 2.0])
    batch = [tr(0, -10.0, False), tr(1, -10.0, True)]
    np.testing.assert_allclose(compute_targets(batch, 0.5, tq), [-8.0, -10.0])


def test_targets_value_scale_and_gamma_zero():
    tq = _const_net([4.0, 0.0, 0.0])
    batch = [tr(0, -1000.0)]
    np.testing.assert_allclose(compute_targets(batch, 0.5, tq, 1000.0), [1.0])
    np.testing.assert_allclose(compute_targets(batch, 0.0, tq), [-1000.0])


# -- epsilon -----------------------------------------------------------------------

def test_epsilon_decay_and_floor():
    assert decay_epsilon(1.0, 0.5) == 0.5
    assert decay_epsilon(0.011, 0.5) == 0.01
    eps = 1.0
    for _ in range(20):  # 0.9**20 < 0.3
        eps = decay_epsilon(eps, 0.9, 0.3)
    assert eps == 0.3


@settings(max_examples=100)
@given(st.floats(0.0, 1.0), st.floats(0.01, 0.999999))
def test_epsilon_monotone_and_bounded(eps, decay):
    nxt = decay_epsilon(eps, decay)
    assert nxt >= 0.01
    assert nxt <= max(eps, 0.01)


# -- training -----------------------------------------------------------------------

def _tiny():
    env = small_env(target=(10.0, 20.0, 15.0))
    hp = Hyperparams.toy(epochs=60, batch_size=8, memory_size=200, rng_seed=3)
    cfg = network_config_for(env, hidden=(16,), dropout_rate=0.5, dropout_after=(0,))
    return env, hp, cfg


def test_train_is_deterministic():
    env, hp, cfg = _tiny()
    q1, h1 = train(env, hp, cfg)
    q2, h2 = train(env, hp, cfg)
    assert q1.equals(q2) and h1.equals(h2)
    assert len(h1) == 60 and h1.losses


def test_train_history_bookkeeping():
    env, hp, cfg = _tiny()
    _, h = train(env, hp, cfg, oracle_distance=0.0)
    assert h.epsilons[0] == 1.0
    assert h.epsilons[1] == pytest.approx(hp.epsilon_decay)
    assert all(e >= hp.epsilon_min for e in h.epsilons)
    assert all(isinstance(o, bool) for o in h.optimal)
    assert all(s <= 10 * env.n_evs for s in h.steps)
    assert math.isnan(h.episode_losses[0])  # memory not yet larger than batch


def test_train_zero_epochs_returns_initial_network():
    env, hp, cfg = _tiny()
    hp0 = Hyperparams.toy(epochs=0, batch_size=8, memory_size=200, rng_seed=3)
    q, h = train(env, hp0, cfg)
    assert len(h) == 0 and q.equals(init_network(cfg, 3))


def test_train_rejects_mismatched_network():
    env, hp, _ = _tiny()
    with pytest.raises(ConfigError):
        train(env, hp, NetworkConfig(5, env.n_actions, (4,), 0.0, ()))


def test_greedy_rollout_respects_cap_and_ledger(toy_env):
    q = init_network(network_config_for(toy_env, hidden=(8,), dropout_after=()), 0)
    r = greedy_rollout(q, toy_env, max_steps=3)
    np.testing.assert_allclose(r.ledger.per_slot, r.state.per_slot)
    np.testing.assert_allclose(r.ledger.remaining, toy_env.program.target - r.state.per_slot)


def test_greedy_rollout_empty_fleet():
    env = Environment(DRProgram([5.0, 5.0]), [], make_stations(2), Hyperparams())
    q = init_network(NetworkConfig(1, 1, (), 0.0, ()), 0)
    r = greedy_rollout(q, env)
    assert r.reward == 0.0 and not r.state.cells.any()


def test_zero_network_always_picks_action_zero(toy_env):
    q = init_network(network_config_for(toy_env, hidden=(8,), dropout_after=()), 0)
    for W, b in zip(q.weights, q.biases):
        W[:] = 0.0
        b[:] = 0.0
    r = greedy_rollout(q, toy_env)
    # action 0 places EV 1 at (station 0, slot 0); repeating it is a C4 conflict
    assert r.state.cells[0, 0] == 1
    assert r.state.conflict == toy_env.decode(0)
    assert r.reward == pytest.approx(-100 * (toy_env.program.target.sum() - 9.9) + toy_env.hp.max_penalty)
