import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evdqn.domain import (
    Action,
    DRProgram,
    ElectricVehicle,
    Hyperparams,
    Kind,
    Scenario,
    ScheduleState,
    action_from_index,
    action_index,
    action_space_size,
)
from evdqn.errors import ConfigError


@pytest.mark.parametrize(
    "action, expected",
    [
        (Action(0, 1, 0, Kind.C), 0),
        (Action(0, 1, 0, Kind.D), 1),
        (Action(5, 30, 4, Kind.D), 1799),  # ((5*30+29)*5+4)*2+1
    ],
)
def test_action_index_examples(action, expected):
    assert action_index(action, 6, 30, 5) == expected


def test_action_from_index_examples():
    assert action_from_index(0, 6, 30, 5) == Action(0, 1, 0, Kind.C)
    assert action_from_index(1799, 6, 30, 5) == Action(5, 30, 4, Kind.D)
    with pytest.raises(IndexError):
        action_from_index(1800, 6, 30, 5)
    with pytest.raises(IndexError):
        action_from_index(-1, 6, 30, 5)


def test_action_index_rejects_out_of_range():
    for bad in [Action(6, 1, 0, Kind.C), Action(0, 0, 0, Kind.C), Action(0, 31, 0, Kind.C), Action(0, 1, 5, Kind.C)]:
        with pytest.raises(IndexError):
            action_index(bad, 6, 30, 5)


def test_action_space_size_full_size():
    assert action_space_size(6, 30, 5) == 1800


@given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 4), st.data())
def test_index_round_trip(n, e, t, data):
    size = action_space_size(n, e, t)
    i = data.draw(st.integers(0, size - 1))
    assert action_index(action_from_index(i, n, e, t), n, e, t) == i


def test_round_trip_is_bijective_small():
    n, e, t = 2, 3, 2
    seen = set()
    for s, ev, slot, kind in itertools.product(range(n), range(1, e + 1), range(t), Kind):
        a = Action(s, ev, slot, kind)
        i = action_index(a, n, e, t)
        assert action_from_index(i, n, e, t) == a
        seen.add(i)
    assert seen == set(range(action_space_size(n, e, t)))


def test_ev_invariants():
    with pytest.raises(ConfigError):
        ElectricVehicle(0, "x", 7, 24)
    with pytest.raises(ConfigError):
        ElectricVehicle(1, "x", 7, 24, soc=1.2)
    with pytest.raises(ConfigError):
        ElectricVehicle(1, "x", 0, 24)


def test_program_validation():
    p = DRProgram([10, 20, 30])
    assert p.horizon == 3 and p.scenario is Scenario.CHARGE
    with pytest.raises(ConfigError):
        DRProgram([])
    with pytest.raises(ConfigError):
        DRProgram([1, -1])
    with pytest.raises(ValueError):
        p.target[0] = 5  # read-only


def test_hyperparams_invariants():
    Hyperparams()
    with pytest.raises(ConfigError):
        Hyperparams(memory_size=10, batch_size=11)
    with pytest.raises(ConfigError):
        Hyperparams(epsilon_decay=1.0)
    with pytest.raises(ConfigError):
        Hyperparams(soc_min=0.9, soc_max=0.2)
    with pytest.raises(ConfigError):
        Hyperparams(max_penalty=1.0)


def test_scenario_parse():
    assert Scenario.parse("Charge") is Scenario.CHARGE
    assert Scenario.parse("discharge").kind is Kind.D
    with pytest.raises(ConfigError):
        Scenario.parse("idle")


def test_schedule_state_is_immutable_value():
    s = ScheduleState.empty(2, 3)
    assert s.shape == (2, 3)
    with pytest.raises(ValueError):
        s.cells[0, 0] = 1
    assert s == ScheduleState.empty(2, 3)


def test_default_hyperparams_are_best_tuned_row():
    hp = Hyperparams()
    assert (hp.memory_size, hp.batch_size, hp.epsilon_decay, hp.learning_rate) == (700_000, 50_000, 0.99996, 0.001)
    assert hp.epochs == 160_000


def test_fleet_models():
    from evdqn.scenarios import EV_MODELS

    assert EV_MODELS == (
        ("Renault ZOE 22", 22.0, 22.0),
        ("Renault ZOE 41", 22.0, 41.0),
        ("Nissan LEAF 24", 7.0, 24.0),
    )
