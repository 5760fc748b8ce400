"""EV models from the evaluation fleet, fleet/target generators and the toy instance."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .domain import (
    ChargingStation,
    DRProgram,
    ElectricVehicle,
    Hyperparams,
    Scenario,
    make_stations,
)
from .environment import Environment, assignment_energy, is_eligible
from .errors import ConfigError

# (model name, max power kW, capacity kWh)
EV_MODELS: tuple[tuple[str, float, float], ...] = (
    ("Renault ZOE 22", 22.0, 22.0),
    ("Renault ZOE 41", 22.0, 41.0),
    ("Nissan LEAF 24", 7.0, 24.0),
)
DEFAULT_CONNECTOR = "Type2"


def gen_fleet(
    count: int,
    mix: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    rng: Optional[np.random.Generator] = None,
    soc_range: tuple[float, float] = (0.1, 0.9),
) -> list[ElectricVehicle]:
    """Draw ``count`` EVs from the three fleet models in proportion ``mix``.

    SoC is uniform over ``soc_range``.  Models are assigned by rounding the
    cumulative mix so every model with a positive share of at least one EV
    appears, then shuffled.
    """
    if count < 1:
        raise ConfigError("fleet size must be >= 1")
    mix = np.asarray(mix, dtype=float)
    if mix.shape != (len(EV_MODELS),) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
        raise ConfigError(f"mix must be {len(EV_MODELS)} non-negative fractions summing to 1, got {mix.tolist()}")
    rng = rng if rng is not None else np.random.default_rng()
    bounds = np.rint(np.cumsum(mix) * count).astype(int)
    models = np.repeat(np.arange(len(EV_MODELS)), np.diff(np.concatenate([[0], bounds])))
    rng.shuffle(models)
    socs = rng.uniform(*soc_range, size=count)
    fleet = []
    for i, (m, soc) in enumerate(zip(models, socs)):
        name, power, cap = EV_MODELS[m]
        fleet.append(ElectricVehicle(i + 1, name, power, cap, DEFAULT_CONNECTOR, round(float(soc), 4)))
    return fleet


def deliverable_energy(
    fleet: Sequence[ElectricVehicle],
    stations: Sequence[ChargingStation],
    scenario: Scenario,
    hp: Hyperparams = Hyperparams(),
    slot_duration: float = 1.0,
) -> float:
    """Energy the fleet could move if every eligible EV got one slot at the best station."""
    probe = DRProgram(np.ones(1), scenario, slot_duration)
    total = 0.0
    for ev in fleet:
        if is_eligible(ev, scenario.kind, hp):
            total += max(assignment_energy(ev, st, probe, scenario.kind, hp) for st in stations)
    return total


def shaped_target(total: float, weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise ConfigError("target weights must be non-negative with a positive sum")
    return total * w / w.sum()


def synthetic_target(
    total: float,
    horizon: int,
    rng: np.random.Generator,
    pieces: Optional[int] = None,
) -> np.ndarray:
    """Piecewise-constant profile over ``horizon`` slots summing to ``total``.

    The horizon is cut into ``pieces`` contiguous blocks (default: about one per
    two slots), each with a level drawn uniformly from [0.5, 1.5].
    """
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    pieces = pieces or max(1, (horizon + 1) // 2)
    pieces = min(pieces, horizon)
    cuts = np.sort(rng.choice(np.arange(1, horizon), size=pieces - 1, replace=False)) if pieces > 1 else []
    levels = rng.uniform(0.5, 1.5, size=pieces)
    weights = np.empty(horizon)
    for level, block in zip(levels, np.split(np.arange(horizon), cuts)):
        weights[block] = level
    return shaped_target(total, weights)


# Toy instance: 2 stations, 3 one-hour slots, the three fleet models plus a
# second ZOE 41.  Target is 80% of the deliverable energy, front-loaded.
TOY_SOCS = (0.45, 0.30, 0.80, 0.25)
TOY_WEIGHTS = (0.5, 0.3, 0.2)
TOY_FRACTION = 0.8


def toy_fleet(socs: Sequence[float] = TOY_SOCS) -> list[ElectricVehicle]:
    models = [EV_MODELS[0], EV_MODELS[1], EV_MODELS[2], EV_MODELS[1]]
    return [
        ElectricVehicle(i + 1, name, power, cap, DEFAULT_CONNECTOR, soc)
        for i, ((name, power, cap), soc) in enumerate(zip(models, socs))
    ]


def toy_environment(
    hp: Optional[Hyperparams] = None,
    scenario: Scenario = Scenario.CHARGE,
    socs: Sequence[float] = TOY_SOCS,
    weights: Sequence[float] = TOY_WEIGHTS,
    fraction: float = TOY_FRACTION,
) -> Environment:
    hp = hp if hp is not None else Hyperparams.toy()
    fleet = toy_fleet(socs)
    stations = make_stations(2)
    total = fraction * deliverable_energy(fleet, stations, scenario, hp)
    program = DRProgram(shaped_target(total, weights), scenario, 1.0)
    return Environment(program, fleet, stations, hp)
