"""Scheduling MDP: constraint checks, energy accounting, reward and termination."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import (
    Action,
    ChargingStation,
    DRProgram,
    ElectricVehicle,
    Hyperparams,
    Kind,
    ScheduleState,
    action_from_index,
    action_space_size,
    fleet_ids_contiguous,
)
from .errors import ConfigError, DataError, EligibilityError

REWARD_SCALE = 100.0
# absolute slack on the C5 comparison so float sums equal to the target pass
ENERGY_TOL = 1e-9
# SoC thresholds are sums like 0.2 + 0.05; compare with a little slack
SOC_TOL = 1e-12


class Violation(enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"


@dataclass(frozen=True)
class EnergyLedger:
    per_slot: np.ndarray
    remaining: np.ndarray


@dataclass(frozen=True)
class StepOutcome:
    next_state: ScheduleState
    reward: float
    done: bool
    violation: Optional[Violation] = None


def is_chargeable(ev: ElectricVehicle, hp: Hyperparams) -> bool:
    return ev.soc <= hp.soc_max - hp.soc_margin + SOC_TOL


def is_dischargeable(ev: ElectricVehicle, hp: Hyperparams) -> bool:
    return ev.soc >= hp.soc_min + hp.soc_margin - SOC_TOL


def is_eligible(ev: ElectricVehicle, kind: Kind, hp: Hyperparams) -> bool:
    return is_chargeable(ev, hp) if kind is Kind.C else is_dischargeable(ev, hp)


def assignment_energy(
    ev: ElectricVehicle,
    station: ChargingStation,
    program: DRProgram,
    kind: Kind,
    hp: Hyperparams = Hyperparams(),
) -> float:
    """Energy (kWh) moved by one slot of ``ev`` at ``station``.

    Bounded by the weaker of the two power limits over one slot, and by the
    SoC headroom (charge) or the energy above the SoC floor (discharge).
    """
    if not is_eligible(ev, kind, hp):
        raise EligibilityError(
            f"EV {ev.id} with soc {ev.soc} is not eligible for {kind.value}"
        )
    power_limited = min(ev.max_power, station.max_power) * program.slot_duration
    if kind is Kind.C:
        headroom = (hp.soc_max - ev.soc) * ev.capacity
    else:
        headroom = (ev.soc - hp.soc_min) * ev.capacity
    return max(0.0, min(power_limited, headroom))


def l1_distance(target: np.ndarray, per_slot: np.ndarray) -> float:
    return float(np.abs(np.asarray(target) - np.asarray(per_slot)).sum())


@dataclass(frozen=True, eq=False)
class Environment:
    """One DR scheduling problem: a program, a fleet and a set of stations.

    All methods are pure in (state, action); the instance only caches the
    per-(station, EV) energy table for the program's scenario.
    """

    program: DRProgram
    fleet: tuple[ElectricVehicle, ...]
    stations: tuple[ChargingStation, ...]
    hp: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        object.__setattr__(self, "fleet", tuple(self.fleet))
        object.__setattr__(self, "stations", tuple(self.stations))
        if self.fleet and not fleet_ids_contiguous(self.fleet):
            raise ConfigError("fleet ids must be exactly 1..|EV|")
        if sorted(s.id for s in self.stations) != list(range(len(self.stations))):
            raise ConfigError("station ids must be exactly 0..N-1")
        fleet = tuple(sorted(self.fleet, key=lambda ev: ev.id))
        stations = tuple(sorted(self.stations, key=lambda s: s.id))
        object.__setattr__(self, "fleet", fleet)
        object.__setattr__(self, "stations", stations)

        kind = self.program.scenario.kind
        eligible = np.array([is_eligible(ev, kind, self.hp) for ev in fleet], dtype=bool)
        energy = np.zeros((len(stations), len(fleet)))
        for i, st in enumerate(stations):
            for j, ev in enumerate(fleet):
                if eligible[j]:
                    energy[i, j] = assignment_energy(ev, st, self.program, kind, self.hp)
        energy.setflags(write=False)
        eligible.setflags(write=False)
        object.__setattr__(self, "_eligible", eligible)
        object.__setattr__(self, "_energy", energy)

    # -- sizes -------------------------------------------------------------
    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_evs(self) -> int:
        return len(self.fleet)

    @property
    def horizon(self) -> int:
        return self.program.horizon

    @property
    def n_actions(self) -> int:
        return action_space_size(self.n_stations, self.n_evs, self.horizon)

    @property
    def energy_table(self) -> np.ndarray:
        """(N, |EV|) energy per assignment in the program's scenario; 0 if ineligible."""
        return self._energy

    @property
    def eligible(self) -> np.ndarray:
        return self._eligible

    def ev(self, ev_id: int) -> ElectricVehicle:
        if not 1 <= ev_id <= self.n_evs:
            raise DataError(f"unknown EV id {ev_id}")
        return self.fleet[ev_id - 1]

    def decode(self, index: int) -> Action:
        return action_from_index(index, self.n_stations, self.n_evs, self.horizon)

    # -- MDP -----------------------------------------------------------------
    def empty_state(self) -> ScheduleState:
        return ScheduleState.empty(self.n_stations, self.horizon)

    def reset(self) -> ScheduleState:
        if not self.fleet:
            raise ConfigError("cannot reset: fleet is empty")
        if not self.stations:
            raise ConfigError("cannot reset: no charging stations")
        return self.empty_state()

    def _check_indices(self, a: Action):
        if not 0 <= a.station < self.n_stations:
            raise IndexError(f"station {a.station} outside [0, {self.n_stations})")
        if not 1 <= a.ev_id <= self.n_evs:
            raise IndexError(f"ev_id {a.ev_id} outside [1, {self.n_evs}]")
        if not 0 <= a.timeslot < self.horizon:
            raise IndexError(f"timeslot {a.timeslot} outside [0, {self.horizon})")
        if not isinstance(a.kind, Kind):
            raise IndexError(f"kind {a.kind!r} is not C or D")

    def check_constraints(self, state: ScheduleState, a: Action) -> Optional[Violation]:
        """Lowest-numbered violated constraint for ``a`` in ``state``, or None."""
        self._check_indices(a)
        if a.kind is not self.program.scenario.kind:
            return Violation.C1
        ev = self.fleet[a.ev_id - 1]
        if a.kind is Kind.C and not is_chargeable(ev, self.hp):
            return Violation.C2
        if a.kind is Kind.D and not is_dischargeable(ev, self.hp):
            return Violation.C3
        if state.cells[a.station, a.timeslot] != 0 or (state.cells == a.ev_id).any():
            return Violation.C4
        e = self._energy[a.station, a.ev_id - 1]
        if state.per_slot[a.timeslot] + e > self.program.target[a.timeslot] + ENERGY_TOL:
            return Violation.C5
        return None

    def reward(self, state: ScheduleState, violation: Optional[Violation] = None) -> float:
        if violation is not None:
            return float(self.hp.max_penalty)
        return -REWARD_SCALE * l1_distance(self.program.target, state.per_slot)

    def step(self, state: ScheduleState, a: Action) -> StepOutcome:
        violation = self.check_constraints(state, a)
        if violation is Violation.C4:
            nxt = ScheduleState(state.cells.copy(), state.per_slot.copy(), conflict=a)
            return StepOutcome(nxt, float(self.hp.max_penalty), True, violation)
        if violation is not None:
            return StepOutcome(state, float(self.hp.max_penalty), False, violation)

        cells = state.cells.copy()
        cells[a.station, a.timeslot] = a.ev_id
        per_slot = state.per_slot.copy()
        per_slot[a.timeslot] += self._energy[a.station, a.ev_id - 1]
        nxt = ScheduleState(cells, per_slot)
        return StepOutcome(nxt, self.reward(nxt), self.episode_done(nxt), None)

    def episode_done(self, state: ScheduleState) -> bool:
        """Terminal on a recorded conflict, once every EV is placed, or once
        no unplaced EV fits any free cell without breaking C1-C5."""
        if state.conflict is not None:
            return True
        if not self.fleet:
            return False
        if int(np.count_nonzero(state.cells)) >= self.n_evs:
            return True
        return not self.has_legal_action(state)

    def has_legal_action(self, state: ScheduleState) -> bool:
        unplaced = self._eligible.copy()
        placed = state.cells[state.cells != 0]
        unplaced[placed - 1] = False
        if not unplaced.any():
            return False
        slack = self.program.target - state.per_slot + ENERGY_TOL  # (T,)
        fits = self._energy[:, unplaced][:, :, None] <= slack[None, None, :]  # (N, E', T)
        free = (state.cells == 0)[:, None, :]
        return bool((fits & free).any())

    # -- accounting ----------------------------------------------------------
    def energy_of_state(self, state: ScheduleState) -> EnergyLedger:
        """Recompute the per-slot ledger from the matrix alone."""
        per_slot = np.zeros(self.horizon)
        for i, t in zip(*np.nonzero(state.cells)):
            ev_id = int(state.cells[i, t])
            if not 1 <= ev_id <= self.n_evs:
                raise DataError(f"cell ({i}, {t}) references unknown EV id {ev_id}")
            ev = self.fleet[ev_id - 1]
            kind = self.program.scenario.kind
            per_slot[t] += assignment_energy(ev, self.stations[i], self.program, kind, self.hp)
        return EnergyLedger(per_slot, self.program.target - per_slot)

    def ledger(self, state: ScheduleState) -> EnergyLedger:
        """Ledger from the incrementally maintained per-slot sums."""
        per_slot = np.array(state.per_slot)
        return EnergyLedger(per_slot, self.program.target - per_slot)

    def distance(self, state: ScheduleState) -> float:
        return l1_distance(self.program.target, state.per_slot)

    def legal_mask(self, state: ScheduleState) -> np.ndarray:
        """Boolean vector over the flat action space: True where C1-C5 all hold."""
        mask = np.zeros((self.n_stations, self.n_evs, self.horizon, 2), dtype=bool)
        if state.conflict is None and self.n_evs and self.n_stations:
            waiting = self._eligible.copy()
            placed = state.cells[state.cells != 0]
            waiting[placed - 1] = False
            slack = self.program.target - state.per_slot + ENERGY_TOL
            fits = self._energy[:, :, None] <= slack[None, None, :]
            free = (state.cells == 0)[:, None, :]
            kind_bit = 1 if self.program.scenario.kind is Kind.D else 0
            mask[..., kind_bit] = fits & free & waiting[None, :, None]
        return mask.reshape(-1)

    def legal_actions(self, state: ScheduleState) -> list[int]:
        """Flat indices of every action that passes C1-C5 in ``state``."""
        return np.flatnonzero(self.legal_mask(state)).tolist()

    def baseline_schedule(self, rng=None) -> ScheduleState:
        """First-come-first-served placement ignoring the target (C5).

        EVs in fleet order take the earliest free (slot, station) cell if
        SoC-eligible for the scenario; ``rng`` is accepted for interface
        symmetry and unused since the rule is deterministic.
        """
        return baseline_schedule(self.fleet, self.stations, self.program, self.hp)


def baseline_schedule(
    fleet: Sequence[ElectricVehicle],
    stations: Sequence[ChargingStation],
    program: DRProgram,
    hp: Hyperparams = Hyperparams(),
    rng=None,
) -> ScheduleState:
    n, horizon = len(stations), program.horizon
    cells = np.zeros((n, horizon), dtype=np.int64)
    per_slot = np.zeros(horizon)
    kind = program.scenario.kind
    free = [(t, i) for t in range(horizon) for i in range(n)]
    for ev in fleet:
        if not free or not is_eligible(ev, kind, hp):
            continue
        t, i = free.pop(0)
        cells[i, t] = ev.id
        per_slot[t] += assignment_energy(ev, stations[i], program, kind, hp)
    return ScheduleState(cells, per_slot)
