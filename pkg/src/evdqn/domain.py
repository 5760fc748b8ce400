"""Value types shared across the scheduler: fleet, stations, DR program,
schedule state, actions and hyperparameters."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError


class Kind(enum.Enum):
    C = "C"
    D = "D"


class Scenario(enum.Enum):
    CHARGE = "charge"
    DISCHARGE = "discharge"

    @property
    def kind(self) -> Kind:
        return Kind.C if self is Scenario.CHARGE else Kind.D

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        key = text.strip().lower()
        for s in cls:
            if s.value == key or s.name.lower() == key:
                return s
        raise ConfigError(f"unknown scenario {text!r}")


@dataclass(frozen=True)
class ElectricVehicle:
    id: int
    model_name: str
    max_power: float
    capacity: float
    connector_type: str = "Type2"
    soc: float = 0.5

    def __post_init__(self):
        if self.id < 1:
            raise ConfigError(f"EV id must be >= 1, got {self.id}")
        if not 0.0 <= self.soc <= 1.0:
            raise ConfigError(f"EV {self.id}: soc {self.soc} outside [0, 1]")
        if self.max_power <= 0 or self.capacity <= 0:
            raise ConfigError(f"EV {self.id}: power and capacity must be positive")

    @property
    def stored_energy(self) -> float:
        return self.soc * self.capacity


@dataclass(frozen=True)
class ChargingStation:
    id: int
    max_power: float = 22.0

    def __post_init__(self):
        if self.id < 0:
            raise ConfigError(f"station id must be >= 0, got {self.id}")
        if self.max_power <= 0:
            raise ConfigError(f"station {self.id}: max_power must be positive")


def make_stations(count: int, max_power: float = 22.0) -> list[ChargingStation]:
    return [ChargingStation(i, max_power) for i in range(count)]


@dataclass(frozen=True, eq=False)
class DRProgram:
    """Demand-response request: per-slot target energy (kWh) over ``horizon`` slots."""

    target: np.ndarray
    scenario: Scenario = Scenario.CHARGE
    slot_duration: float = 1.0

    def __post_init__(self):
        target = np.array(self.target, dtype=float).reshape(-1)
        if target.size < 1:
            raise ConfigError("DR program needs at least one timeslot")
        if np.any(target < 0) or not np.all(np.isfinite(target)):
            raise ConfigError("target energies must be finite and >= 0")
        if self.slot_duration <= 0:
            raise ConfigError("slot_duration must be positive")
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    @property
    def horizon(self) -> int:
        return int(self.target.size)

    def __eq__(self, other):
        if not isinstance(other, DRProgram):
            return NotImplemented
        return (
            self.scenario == other.scenario
            and self.slot_duration == other.slot_duration
            and np.array_equal(self.target, other.target)
        )


@dataclass(frozen=True)
class Action:
    station: int
    ev_id: int
    timeslot: int
    kind: Kind


@dataclass(frozen=True, eq=False)
class ScheduleState:
    """N x T matrix of EV ids (0 = empty) plus the per-slot energy moved so far.

    ``conflict`` records the action that tried to put a second EV into an
    occupied cell (or a placed EV into a second cell); a state carrying one is
    terminal. The matrix itself only ever holds the legal assignments.
    """

    cells: np.ndarray
    per_slot: np.ndarray
    conflict: Optional[Action] = None

    def __post_init__(self):
        self.cells.setflags(write=False)
        self.per_slot.setflags(write=False)

    @classmethod
    def empty(cls, n_stations: int, horizon: int) -> "ScheduleState":
        return cls(np.zeros((n_stations, horizon), dtype=np.int64), np.zeros(horizon))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def assigned_ids(self) -> set[int]:
        return set(int(v) for v in self.cells[self.cells != 0])

    def position_of(self, ev_id: int) -> Optional[tuple[int, int]]:
        hits = np.argwhere(self.cells == ev_id)
        if len(hits) == 0:
            return None
        return int(hits[0, 0]), int(hits[0, 1])

    def __eq__(self, other):
        if not isinstance(other, ScheduleState):
            return NotImplemented
        return (
            np.array_equal(self.cells, other.cells)
            and np.array_equal(self.per_slot, other.per_slot)
            and self.conflict == other.conflict
        )


@dataclass(frozen=True)
class Hyperparams:
    # defaults are the best tuned full-size configuration; see toy() for desk-scale runs
    epochs: int = 160_000
    memory_size: int = 700_000
    batch_size: int = 50_000
    epsilon_initial: float = 1.0
    epsilon_decay: float = 0.99996
    epsilon_min: float = 0.01
    learning_rate: float = 0.001
    gamma: float = 0.99
    target_sync_every: int = 10
    max_penalty: float = -1e5
    soc_min: float = 0.20
    soc_max: float = 0.90
    soc_margin: float = 0.05
    # Q-network regresses returns divided by this; keeps clipped SGD targets O(100)
    value_scale: float = 1000.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.memory_size < 1:
            raise ConfigError("memory_size must be >= 1")
        if not 1 <= self.batch_size <= self.memory_size:
            raise ConfigError(
                f"batch_size {self.batch_size} must lie in [1, memory_size={self.memory_size}]"
            )
        if not 0.0 < self.epsilon_decay < 1.0:
            raise ConfigError("epsilon_decay must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.target_sync_every < 1:
            raise ConfigError("target_sync_every must be >= 1")
        if self.max_penalty >= 0:
            raise ConfigError("max_penalty must be negative")
        if not 0.0 <= self.soc_min < self.soc_max <= 1.0:
            raise ConfigError("need 0 <= soc_min < soc_max <= 1")
        if self.soc_margin < 0:
            raise ConfigError("soc_margin must be >= 0")
        if self.value_scale <= 0:
            raise ConfigError("value_scale must be positive")

    @classmethod
    def toy(cls, **overrides) -> "Hyperparams":
        base = dict(
            epochs=5000,
            memory_size=5000,
            batch_size=32,
            epsilon_decay=0.999,
            learning_rate=0.001,
            gamma=0.99,
        )
        base.update(overrides)
        return cls(**base)


def action_space_size(n_stations: int, n_evs: int, horizon: int) -> int:
    return 2 * n_stations * n_evs * horizon


def action_index(a: Action, n_stations: int, n_evs: int, horizon: int) -> int:
    """Flatten an action as ``((station*n_evs + ev_id-1)*horizon + slot)*2 + kind``."""
    if not 0 <= a.station < n_stations:
        raise IndexError(f"station {a.station} outside [0, {n_stations})")
    if not 1 <= a.ev_id <= n_evs:
        raise IndexError(f"ev_id {a.ev_id} outside [1, {n_evs}]")
    if not 0 <= a.timeslot < horizon:
        raise IndexError(f"timeslot {a.timeslot} outside [0, {horizon})")
    kind_bit = 1 if a.kind is Kind.D else 0
    return ((a.station * n_evs + (a.ev_id - 1)) * horizon + a.timeslot) * 2 + kind_bit


def action_from_index(i: int, n_stations: int, n_evs: int, horizon: int) -> Action:
    size = action_space_size(n_stations, n_evs, horizon)
    if not 0 <= i < size:
        raise IndexError(f"action index {i} outside [0, {size})")
    i, kind_bit = divmod(int(i), 2)
    i, slot = divmod(i, horizon)
    station, ev = divmod(i, n_evs)
    return Action(station, ev + 1, slot, Kind.D if kind_bit else Kind.C)


def fleet_ids_contiguous(fleet: Sequence[ElectricVehicle]) -> bool:
    return sorted(ev.id for ev in fleet) == list(range(1, len(fleet) + 1))
