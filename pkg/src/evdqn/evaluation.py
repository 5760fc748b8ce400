"""Metrics for learned schedules and an exhaustive oracle for small instances."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agent import greedy_rollout
from .domain import ScheduleState
from .environment import ENERGY_TOL, Environment, l1_distance
from .errors import CapacityError, UndefinedCorrelationError
from .neuralnet import NetworkParams

ORACLE_LIMIT = 10**7


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant curve")
    r = float(np.dot(dx, dy)) / (math.sqrt(sxx) * math.sqrt(syy))
    return max(-1.0, min(1.0, r))


def deviation_report(target, achieved) -> tuple[np.ndarray, float]:
    target = np.asarray(target, dtype=float).reshape(-1)
    achieved = np.asarray(achieved, dtype=float).reshape(-1)
    if target.size != achieved.size:
        raise ValueError(f"length mismatch: {target.size} vs {achieved.size}")
    if np.any(achieved < 0) or np.any(target < 0):
        raise ValueError("energies are magnitudes and must be >= 0")
    dev = np.abs(target - achieved)
    return dev, float(dev.max()) if dev.size else 0.0


def schedule_count(env: Environment) -> int:
    """Number of partial injective placements of the eligible EVs into the N x T cells."""
    cells = env.n_stations * env.horizon
    k_max = int(env.eligible.sum())
    total = 0
    for k in range(min(k_max, cells) + 1):
        total += math.comb(k_max, k) * math.perm(cells, k)
        if total > ORACLE_LIMIT:
            break
    return total


def _require_tractable(env: Environment):
    count = schedule_count(env)
    if count > ORACLE_LIMIT:
        raise CapacityError(f"instance has more than {ORACLE_LIMIT} candidate schedules")


def oracle_optima(env: Environment, tol: float = 1e-9) -> tuple[list[ScheduleState], float]:
    """Every legal schedule (C1-C5, one cell per EV, EVs may stay out) at minimal L1 distance.

    Returned schedules are sorted by their flattened matrix, so the first one
    is the lexicographically smallest optimum.
    """
    _require_tractable(env)
    n, horizon = env.n_stations, env.horizon
    target = env.program.target
    energy = env.energy_table
    eligible = env.eligible
    cells = np.zeros((n, horizon), dtype=np.int64)
    per_slot = np.zeros(horizon)
    best = [math.inf]
    found: list[tuple[np.ndarray, np.ndarray]] = []

    def visit(j: int):
        if j == env.n_evs:
            d = l1_distance(target, per_slot)
            if d < best[0] - tol:
                best[0] = d
                found.clear()
            if d <= best[0] + tol:
                found.append((cells.copy(), per_slot.copy()))
            return
        visit(j + 1)  # EV j+1 left unassigned
        if not eligible[j]:
            return
        for i in range(n):
            e = energy[i, j]
            for t in range(horizon):
                if cells[i, t] != 0 or per_slot[t] + e > target[t] + ENERGY_TOL:
                    continue
                cells[i, t] = j + 1
                per_slot[t] += e
                visit(j + 1)
                per_slot[t] -= e
                cells[i, t] = 0

    visit(0)
    found.sort(key=lambda cp: tuple(cp[0].reshape(-1)))
    states = [ScheduleState(c, p) for c, p in found]
    return states, float(best[0])


def brute_force_oracle(env: Environment) -> tuple[ScheduleState, float]:
    states, dist = oracle_optima(env)
    return states[0], dist


def suboptimal_count(state: ScheduleState, optima: list[ScheduleState], n_evs: int) -> int:
    """Fewest EVs whose placement differs from some optimal schedule."""
    best = n_evs
    pos = {ev: state.position_of(ev) for ev in range(1, n_evs + 1)}
    for opt in optima:
        diff = sum(pos[ev] != opt.position_of(ev) for ev in pos)
        best = min(best, diff)
        if best == 0:
            break
    return best


def allocation_stats(
    qnet: NetworkParams,
    env: Environment,
    episodes: int,
    rng: Optional[np.random.Generator] = None,
    optima: Optional[list[ScheduleState]] = None,
) -> dict[int, float]:
    """Histogram: number of suboptimally placed EVs -> fraction of episodes."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if optima is None:
        optima, _ = oracle_optima(env)
    counts = Counter()
    for _ in range(episodes):
        roll = greedy_rollout(qnet, env)
        counts[suboptimal_count(roll.state, optima, env.n_evs)] += 1
    return {k: counts[k] / episodes for k in sorted(counts)}


@dataclass
class EvalReport:
    pearson: float
    per_slot_deviation: np.ndarray
    max_deviation: float
    allocation_histogram: Optional[dict[int, float]]
    baseline_pearson: float
    episode_rewards: list[float]
    target: np.ndarray = field(default_factory=lambda: np.zeros(0))
    achieved: np.ndarray = field(default_factory=lambda: np.zeros(0))
    baseline: np.ndarray = field(default_factory=lambda: np.zeros(0))
    distance: float = math.nan
    baseline_distance: float = math.nan
    oracle_distance: Optional[float] = None

    def records(self) -> dict[str, str]:
        """Flat key -> text mapping, one entry per line of the report file."""
        out = {
            "pearson": repr(self.pearson),
            "baseline_pearson": repr(self.baseline_pearson),
            "max_deviation_kwh": repr(self.max_deviation),
            "per_slot_deviation_kwh": " ".join(repr(float(v)) for v in self.per_slot_deviation),
            "distance_kwh": repr(self.distance),
            "baseline_distance_kwh": repr(self.baseline_distance),
            "oracle_distance_kwh": "" if self.oracle_distance is None else repr(self.oracle_distance),
            "mean_episode_reward": repr(float(np.mean(self.episode_rewards))) if self.episode_rewards else "nan",
            "episodes": str(len(self.episode_rewards)),
        }
        if self.allocation_histogram is not None:
            for k, frac in self.allocation_histogram.items():
                out[f"suboptimal_{k}_fraction"] = repr(frac)
        return out


def _safe_pearson(x, y) -> float:
    try:
        return pearson(x, y)
    except UndefinedCorrelationError:
        return math.nan


def evaluate(
    qnet: NetworkParams,
    env: Environment,
    episodes: int = 1,
    rng: Optional[np.random.Generator] = None,
) -> EvalReport:
    """Greedy rollouts against the target, the FCFS baseline and (if tractable) the oracle.

    Pearson values are NaN when either curve is constant.
    """
    rollouts = [greedy_rollout(qnet, env) for _ in range(max(episodes, 1))]
    final = rollouts[-1]
    target = np.array(env.program.target)
    achieved = np.array(final.ledger.per_slot)
    baseline_state = env.baseline_schedule(rng)
    baseline = np.array(baseline_state.per_slot)
    dev, max_dev = deviation_report(target, achieved)

    histogram = None
    oracle_distance = None
    if env.fleet and schedule_count(env) <= ORACLE_LIMIT:
        optima, oracle_distance = oracle_optima(env)
        counts = Counter(suboptimal_count(r.state, optima, env.n_evs) for r in rollouts)
        histogram = {k: counts[k] / len(rollouts) for k in sorted(counts)}

    return EvalReport(
        pearson=_safe_pearson(target, achieved),
        per_slot_deviation=dev,
        max_deviation=max_dev,
        allocation_histogram=histogram,
        baseline_pearson=_safe_pearson(target, baseline),
        episode_rewards=[r.reward for r in rollouts],
        target=target,
        achieved=achieved,
        baseline=baseline,
        distance=l1_distance(target, achieved),
        baseline_distance=l1_distance(target, baseline),
        oracle_distance=oracle_distance,
    )
