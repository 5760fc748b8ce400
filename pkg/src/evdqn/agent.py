"""Deep Q-learning over the scheduling environment.

The loop follows the usual DQN recipe: epsilon-greedy action selection, a
bounded FIFO replay memory sampled uniformly, Bellman targets from a
periodically synchronised target network, and one plain SGD step per
environment step once the memory holds more than ``batch_size`` transitions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .domain import Hyperparams, ScheduleState
from .environment import EnergyLedger, Environment
from .errors import ConfigError, InsufficientData
from .neuralnet import (
    NetworkConfig,
    NetworkParams,
    backward_sgd_step,
    copy_weights,
    forward,
    init_network,
)

log = logging.getLogger(__name__)

EPSILON_FLOOR = 0.01
LIVENESS_FACTOR = 10


@dataclass(frozen=True)
class Transition:
    state_features: np.ndarray
    action: int
    reward: float
    next_state_features: np.ndarray
    done: bool


class ReplayMemory:
    """Bounded FIFO of transitions; pushing past capacity drops the oldest."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"replay memory capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._head = 0  # index of the oldest entry once full

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._head] = t
            self._head = (self._head + 1) % self.capacity

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        return self._items[self._head:] + self._items[: self._head]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if len(self._items) <= batch_size:
            raise InsufficientData(
                f"memory holds {len(self._items)} transitions, need more than {batch_size}"
            )
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]


def push(memory: ReplayMemory, t: Transition) -> None:
    memory.push(t)


def sample_batch(memory: ReplayMemory, batch_size: int, rng: np.random.Generator) -> list[Transition]:
    return memory.sample(batch_size, rng)


def feature_length(n_stations: int, n_evs: int, horizon: int) -> int:
    return n_stations * horizon + 2 * n_evs + horizon + 2


def encode_state(state: ScheduleState, env: Environment) -> np.ndarray:
    """Fixed-length feature vector, every entry in [0, 1].

    Layout: cell ids / |EV| (station-major), EV SoCs, EV capacities / max
    capacity, remaining energy per slot / max target, fraction of free cells,
    fraction of EVs still waiting.
    """
    n_evs = env.n_evs
    cells = state.cells.reshape(-1).astype(float)
    if n_evs:
        cells = cells / n_evs
        soc = np.array([ev.soc for ev in env.fleet])
        cap = np.array([ev.capacity for ev in env.fleet])
        cap = cap / cap.max()
    else:
        soc = cap = np.zeros(0)
    target = env.program.target
    scale = target.max() if target.max() > 0 else 1.0
    remaining = np.clip((target - state.per_slot) / scale, 0.0, 1.0)
    occupied = int(np.count_nonzero(state.cells))
    free = 1.0 - occupied / state.cells.size
    waiting = (n_evs - occupied) / n_evs if n_evs else 0.0
    return np.concatenate([cells, soc, cap, remaining, [free, max(waiting, 0.0)]])


def select_action(qnet: NetworkParams, features, epsilon: float, rng: np.random.Generator) -> int:
    if rng.random() < epsilon:
        return int(rng.integers(qnet.config.output_size))
    # np.argmax returns the first maximum: ties go to the lowest index
    return int(np.argmax(forward(qnet, features)))


def compute_targets(
    batch: Sequence[Transition],
    gamma: float,
    tqnet: NetworkParams,
    value_scale: float = 1.0,
) -> np.ndarray:
    """Bellman targets ``r + gamma * max_a' TQ(s', a')``, or ``r`` on terminal steps.

    Network outputs are in units of ``value_scale`` reward points, so rewards
    are divided by it before being combined with the target network's values.
    """
    rewards = np.array([t.reward for t in batch], dtype=float) / value_scale
    done = np.array([t.done for t in batch], dtype=bool)
    if gamma == 0.0 or done.all():
        return rewards
    nxt = np.stack([t.next_state_features for t in batch])
    best = forward(tqnet, nxt).max(axis=1)
    return np.where(done, rewards, rewards + gamma * best)


def decay_epsilon(epsilon: float, decay: float, floor: float = EPSILON_FLOOR) -> float:
    return max(floor, epsilon * decay)


@dataclass
class TrainingHistory:
    episode_rewards: list[float] = field(default_factory=list)
    episode_losses: list[float] = field(default_factory=list)  # mean per episode, nan if no step
    epsilons: list[float] = field(default_factory=list)
    optimal: list[Optional[bool]] = field(default_factory=list)
    distances: list[float] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)  # one per SGD step

    def __len__(self) -> int:
        return len(self.episode_rewards)

    def equals(self, other: "TrainingHistory") -> bool:
        def same(a, b):
            return np.array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float), equal_nan=True)

        return (
            same(self.episode_rewards, other.episode_rewards)
            and same(self.episode_losses, other.episode_losses)
            and same(self.epsilons, other.epsilons)
            and same(self.losses, other.losses)
            and self.optimal == other.optimal
        )


def network_config_for(env: Environment, **kwargs) -> NetworkConfig:
    return NetworkConfig(
        input_size=feature_length(env.n_stations, env.n_evs, env.horizon),
        output_size=env.n_actions,
        **kwargs,
    )


def _validate(env: Environment, netcfg: NetworkConfig):
    want_in = feature_length(env.n_stations, env.n_evs, env.horizon)
    if netcfg.input_size != want_in:
        raise ConfigError(f"network input_size {netcfg.input_size} != feature length {want_in}")
    if netcfg.output_size != env.n_actions:
        raise ConfigError(f"network output_size {netcfg.output_size} != action space {env.n_actions}")


def train(
    env: Environment,
    hp: Hyperparams,
    netcfg: NetworkConfig,
    oracle_distance: Optional[float] = None,
    on_episode: Optional[Callable[[int, TrainingHistory], None]] = None,
) -> tuple[NetworkParams, TrainingHistory]:
    """Run ``hp.epochs`` episodes of deep Q-learning; return the Q-network and history.

    ``oracle_distance`` (the brute-force minimum, when known) fills the
    per-episode optimal-allocation flags; otherwise they are None.
    """
    _validate(env, netcfg)
    if hp.epochs > 0:
        env.reset()  # surfaces empty fleet / stations before any work
    rng = np.random.default_rng(hp.rng_seed)
    qnet = init_network(netcfg, hp.rng_seed)
    tqnet = copy_weights(qnet)
    memory = ReplayMemory(hp.memory_size)
    history = TrainingHistory()
    epsilon = hp.epsilon_initial
    cap = LIVENESS_FACTOR * max(env.n_evs, 1)

    for episode in range(1, hp.epochs + 1):
        state = env.reset()
        features = encode_state(state, env)
        total, steps, ep_losses = 0.0, 0, []
        while True:
            action = select_action(qnet, features, epsilon, rng)
            out = env.step(state, env.decode(action))
            next_features = encode_state(out.next_state, env)
            memory.push(Transition(features, action, out.reward, next_features, out.done))
            total += out.reward
            steps += 1

            if len(memory) > hp.batch_size:
                batch = memory.sample(hp.batch_size, rng)
                targets = compute_targets(batch, hp.gamma, tqnet, hp.value_scale)
                X = np.stack([t.state_features for t in batch])
                acts = np.array([t.action for t in batch])
                qnet, loss = backward_sgd_step(qnet, (X, targets, acts), hp.learning_rate, rng)
                ep_losses.append(loss)

            state, features = out.next_state, next_features
            if out.done or steps >= cap:
                break

        if episode % hp.target_sync_every == 0:
            tqnet = copy_weights(qnet)

        dist = env.distance(state)
        history.episode_rewards.append(total)
        history.episode_losses.append(float(np.mean(ep_losses)) if ep_losses else math.nan)
        history.losses.extend(ep_losses)
        history.epsilons.append(epsilon)
        history.distances.append(dist)
        history.steps.append(steps)
        history.optimal.append(
            None if oracle_distance is None else bool(dist <= oracle_distance + 1e-9)
        )
        epsilon = decay_epsilon(epsilon, hp.epsilon_decay, hp.epsilon_min)
        if on_episode is not None:
            on_episode(episode, history)

    return qnet, history


class Rollout(NamedTuple):
    state: ScheduleState
    reward: float
    ledger: EnergyLedger


def greedy_rollout(qnet: NetworkParams, env: Environment, max_steps: Optional[int] = None) -> Rollout:
    """Run one episode with epsilon = 0; reward is the sum of step rewards."""
    state = env.empty_state()
    total = 0.0
    if not env.fleet or not env.stations:
        return Rollout(state, total, env.ledger(state))
    cap = max_steps if max_steps is not None else LIVENESS_FACTOR * env.n_evs
    steps = 0
    while True:
        action = int(np.argmax(forward(qnet, encode_state(state, env))))
        out = env.step(state, env.decode(action))
        total += out.reward
        state = out.next_state
        steps += 1
        if out.done:
            break
        if steps >= cap:
            log.warning("greedy rollout stopped after %d steps without terminating", steps)
            break
    return Rollout(state, total, env.ledger(state))
