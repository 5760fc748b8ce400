import numpy as np
import pytest

from evdqn.domain import DRProgram, ElectricVehicle, Hyperparams, Scenario, make_stations
from evdqn.environment import Environment
from evdqn.scenarios import toy_environment


def leaf(ev_id=1, soc=0.5):
    return ElectricVehicle(ev_id, "Nissan LEAF 24", 7.0, 24.0, "Type2", soc)


def zoe22(ev_id=1, soc=0.5):
    return ElectricVehicle(ev_id, "Renault ZOE 22", 22.0, 22.0, "Type2", soc)


def zoe41(ev_id=1, soc=0.5):
    return ElectricVehicle(ev_id, "Renault ZOE 41", 22.0, 41.0, "Type2", soc)


def small_env(n_stations=2, target=(10.0, 20.0, 30.0), socs=(0.5, 0.5, 0.5), scenario=Scenario.CHARGE, hp=None):
    makers = [leaf, zoe22, zoe41]
    fleet = [makers[i % 3](i + 1, s) for i, s in enumerate(socs)]
    return Environment(
        DRProgram(np.array(target, dtype=float), scenario),
        fleet,
        make_stations(n_stations),
        hp or Hyperparams.toy(),
    )


@pytest.fixture
def toy_env():
    return toy_environment()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
