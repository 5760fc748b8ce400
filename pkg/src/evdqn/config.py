"""Run configuration: an INI file with sections, resolved into an environment,
hyperparameters and a network shape.

Example::

    [program]
    scenario = charge
    slot_duration = 1.0
    target_file = target.csv        ; or: target = 10, 20, 30
                                    ; or: horizon + target_fraction [+ target_weights]
    [fleet]
    file = fleet.csv                ; or: count = 30 / mix = 0.333, 0.333, 0.334
    [stations]
    count = 6
    max_power = 22
    [hyperparams]
    epochs = 160000
    ...
    [network]
    hidden = 512, 512, 512, 512, 256
    [run]
    seed = 0
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from io import StringIO
from pathlib import Path
from typing import Optional

import numpy as np

from .agent import network_config_for
from .domain import DRProgram, ElectricVehicle, Hyperparams, Scenario, make_stations
from .environment import Environment
from .errors import ConfigError
from .io import load_fleet, load_target
from .neuralnet import NetworkConfig
from .scenarios import deliverable_energy, gen_fleet, shaped_target, synthetic_target


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


def _fmt(values) -> str:
    return ", ".join(repr(v) for v in values)


HP_FIELDS = [f for f in fields(Hyperparams) if f.name != "rng_seed"]


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = Scenario.CHARGE
    slot_duration: float = 1.0
    target: Optional[tuple[float, ...]] = None
    target_file: Optional[str] = None
    horizon: int = 5
    target_fraction: float = 0.8
    target_weights: Optional[tuple[float, ...]] = None
    fleet_file: Optional[str] = None
    fleet_count: int = 30
    fleet_mix: tuple[float, ...] = (1 / 3, 1 / 3, 1 / 3)
    station_count: int = 6
    station_power: float = 22.0
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    hidden: tuple[int, ...] = (512, 512, 512, 512, 256)
    dropout_rate: float = 0.5
    dropout_after: tuple[int, ...] = (1, 3)
    eval_episodes: int = 1
    seed: int = 0

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, hyperparams=replace(self.hyperparams, rng_seed=seed))

    # -- resolution -----------------------------------------------------------
    def fleet(self) -> list[ElectricVehicle]:
        if self.fleet_file:
            return load_fleet(self.fleet_file)
        rng = np.random.default_rng([self.seed, 1])
        return gen_fleet(self.fleet_count, self.fleet_mix, rng)

    def program(self, fleet, stations) -> DRProgram:
        if self.target is not None:
            target = np.array(self.target)
        elif self.target_file:
            target = load_target(self.target_file)
        else:
            total = self.target_fraction * deliverable_energy(
                fleet, stations, self.scenario, self.hyperparams, self.slot_duration
            )
            if self.target_weights is not None:
                if len(self.target_weights) != self.horizon:
                    raise ConfigError("target_weights must have one entry per slot")
                target = shaped_target(total, self.target_weights)
            else:
                target = synthetic_target(total, self.horizon, np.random.default_rng([self.seed, 2]))
        return DRProgram(target, self.scenario, self.slot_duration)

    def environment(self) -> Environment:
        fleet = self.fleet()
        stations = make_stations(self.station_count, self.station_power)
        return Environment(self.program(fleet, stations), fleet, stations, self.hyperparams)

    def network_config(self, env: Environment) -> NetworkConfig:
        return network_config_for(
            env, hidden=self.hidden, dropout_rate=self.dropout_rate, dropout_after=self.dropout_after
        )

    def resolve(self) -> tuple[Environment, NetworkConfig]:
        """Build and cross-check everything a run needs before any training."""
        env = self.environment()
        if not env.fleet:
            return env, None
        return env, self.network_config(env)

    def resolved(self, env: Environment) -> "RunConfig":
        """Copy with the target pinned inline, so reloading skips regeneration."""
        return replace(self, target=tuple(float(v) for v in env.program.target), target_file=None)

    # -- INI ------------------------------------------------------------------
    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        prog = {"scenario": self.scenario.value, "slot_duration": repr(self.slot_duration)}
        if self.target is not None:
            prog["target"] = _fmt(self.target)
        elif self.target_file:
            prog["target_file"] = self.target_file
        prog["horizon"] = str(self.horizon)
        prog["target_fraction"] = repr(self.target_fraction)
        if self.target_weights is not None:
            prog["target_weights"] = _fmt(self.target_weights)
        cp["program"] = prog
        if self.fleet_file:
            cp["fleet"] = {"file": self.fleet_file}
        else:
            cp["fleet"] = {"count": str(self.fleet_count), "mix": _fmt(self.fleet_mix)}
        cp["stations"] = {"count": str(self.station_count), "max_power": repr(self.station_power)}
        cp["hyperparams"] = {f.name: repr(getattr(self.hyperparams, f.name)) for f in HP_FIELDS}
        cp["network"] = {
            "hidden": _fmt(self.hidden),
            "dropout_rate": repr(self.dropout_rate),
            "dropout_after": _fmt(self.dropout_after),
        }
        cp["run"] = {"seed": str(self.seed), "eval_episodes": str(self.eval_episodes)}
        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()


def _path(base: Path, text: str) -> str:
    p = Path(text.strip())
    return str(p if p.is_absolute() else (base / p).resolve())


def parse_config(text: str, base_dir=".") -> RunConfig:
    base = Path(base_dir)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    known = {"program", "fleet", "stations", "hyperparams", "network", "run"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    kw = {}
    try:
        if cp.has_section("program"):
            p = cp["program"]
            if "scenario" in p:
                kw["scenario"] = Scenario.parse(p["scenario"])
            if "slot_duration" in p:
                kw["slot_duration"] = float(p["slot_duration"])
            if "target" in p:
                kw["target"] = _floats(p["target"])
            if "target_file" in p:
                kw["target_file"] = _path(base, p["target_file"])
            if "horizon" in p:
                kw["horizon"] = int(p["horizon"])
            if "target_fraction" in p:
                kw["target_fraction"] = float(p["target_fraction"])
            if "target_weights" in p:
                kw["target_weights"] = _floats(p["target_weights"])
        if cp.has_section("fleet"):
            f = cp["fleet"]
            if "file" in f:
                kw["fleet_file"] = _path(base, f["file"])
            if "count" in f:
                kw["fleet_count"] = int(f["count"])
            if "mix" in f:
                kw["fleet_mix"] = _floats(f["mix"])
        if cp.has_section("stations"):
            s = cp["stations"]
            if "count" in s:
                kw["station_count"] = int(s["count"])
            if "max_power" in s:
                kw["station_power"] = float(s["max_power"])
        hp_kw = {}
        if cp.has_section("hyperparams"):
            types = {f.name: f.type for f in HP_FIELDS}
            for key, value in cp["hyperparams"].items():
                if key not in types:
                    raise ConfigError(f"unknown hyperparameter {key!r}")
                hp_kw[key] = int(float(value)) if types[key] in (int, "int") else float(value)
        if cp.has_section("network"):
            n = cp["network"]
            if "hidden" in n:
                kw["hidden"] = _ints(n["hidden"])
            if "dropout_rate" in n:
                kw["dropout_rate"] = float(n["dropout_rate"])
            if "dropout_after" in n:
                kw["dropout_after"] = _ints(n["dropout_after"])
        seed = 0
        if cp.has_section("run"):
            r = cp["run"]
            seed = int(r.get("seed", "0"))
            if "eval_episodes" in r:
                kw["eval_episodes"] = int(r["eval_episodes"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from None

    if "target" in kw and "target_file" in kw:
        raise ConfigError("give either target or target_file, not both")
    hp = Hyperparams(**hp_kw, rng_seed=seed)
    return RunConfig(hyperparams=hp, seed=seed, **kw)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), path.parent)
