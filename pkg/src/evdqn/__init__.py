"""Deep Q-learning scheduler for EV fleets tracking a demand-response target curve."""

from .domain import (
    Action,
    ChargingStation,
    DRProgram,
    ElectricVehicle,
    Hyperparams,
    Kind,
    Scenario,
    ScheduleState,
    action_from_index,
    action_index,
    action_space_size,
    make_stations,
)
from .environment import EnergyLedger, Environment, StepOutcome, Violation, assignment_energy
from .neuralnet import NetworkConfig, NetworkParams, init_network, forward
from .agent import ReplayMemory, Transition, TrainingHistory, encode_state, greedy_rollout, train
from .evaluation import EvalReport, brute_force_oracle, evaluate, pearson

__version__ = "0.1.0"
