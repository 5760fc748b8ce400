"""File formats: fleet CSV, target-profile CSV, schedule/curve CSVs and the
binary network checkpoint.

Checkpoint layout (all little-endian)::

    b"DRQN"  u32 version(=1)
    u32 input_size  u32 output_size  f64 dropout_rate
    u32 n_hidden    u32 * n_hidden widths
    u32 n_dropout   u32 * n_dropout hidden indices
    u32 n_layers
    per layer: u32 rows  u32 cols  f64[rows*cols] weights (row-major)  f64[rows] bias
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .domain import ElectricVehicle, Kind, ScheduleState
from .environment import Environment
from .errors import ConfigError, DataError, EVDQNError, ShapeError
from .neuralnet import NetworkConfig, NetworkParams

FLEET_HEADER = ["id", "model", "max_power_kw", "capacity_kwh", "connector", "soc"]
TARGET_HEADER = ["slot", "target_kwh"]
SCHEDULE_HEADER = ["station", "timeslot", "ev_id", "kind", "energy_kwh"]
CURVES_HEADER = ["slot", "target_kwh", "achieved_kwh", "baseline_kwh"]

MAGIC = b"DRQN"
VERSION = 1


class FleetParseError(DataError):
    kind = "fleet-parse"


class TargetProfileError(DataError):
    kind = "target-profile"


class TargetProfileNotFound(EVDQNError, FileNotFoundError):
    kind = "target-profile-not-found"


class FleetNotFound(EVDQNError, FileNotFoundError):
    kind = "fleet-not-found"


class CheckpointError(EVDQNError, ValueError):
    kind = "checkpoint"


def _read_rows(path: Path, header: list[str], error_cls) -> list[tuple[int, list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise error_cls(f"{path}: empty file, expected header {','.join(header)}")
        if [h.strip() for h in first] != header:
            raise error_cls(f"{path}:1: expected header {','.join(header)}, got {','.join(first)}")
        return [(n, row) for n, row in enumerate(reader, start=2) if any(c.strip() for c in row)]


def load_fleet(path) -> list[ElectricVehicle]:
    path = Path(path)
    if not path.exists():
        raise FleetNotFound(f"fleet file not found: {path}")
    fleet, seen = [], set()
    for lineno, row in _read_rows(path, FLEET_HEADER, FleetParseError):
        if len(row) != len(FLEET_HEADER):
            raise FleetParseError(f"{path}:{lineno}: expected {len(FLEET_HEADER)} fields, got {len(row)}")
        try:
            ev_id = int(row[0])
            power, cap, soc = float(row[2]), float(row[3]), float(row[5])
        except ValueError as exc:
            raise FleetParseError(f"{path}:{lineno}: {exc}") from None
        if ev_id in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate EV id {ev_id}")
        seen.add(ev_id)
        try:
            fleet.append(ElectricVehicle(ev_id, row[1].strip(), power, cap, row[4].strip(), soc))
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return fleet


def save_fleet(path, fleet: Iterable[ElectricVehicle]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FLEET_HEADER)
        for ev in fleet:
            w.writerow([ev.id, ev.model_name, repr(ev.max_power), repr(ev.capacity), ev.connector_type, repr(ev.soc)])


def load_target(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise TargetProfileNotFound(f"target profile not found: {path}")
    values = {}
    for lineno, row in _read_rows(path, TARGET_HEADER, TargetProfileError):
        try:
            slot, energy = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise TargetProfileError(f"{path}:{lineno}: malformed row {row}") from None
        if slot in values:
            raise TargetProfileError(f"{path}:{lineno}: duplicate slot {slot}")
        values[slot] = energy
    if sorted(values) != list(range(len(values))):
        raise TargetProfileError(f"{path}: slots must be 0..T-1")
    return np.array([values[t] for t in range(len(values))])


def save_target(path, target: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TARGET_HEADER)
        for t, v in enumerate(target):
            w.writerow([t, repr(float(v))])


def schedule_rows(state: ScheduleState, env: Environment) -> list[tuple]:
    kind = env.program.scenario.kind
    rows = []
    for t in range(env.horizon):
        for i in range(env.n_stations):
            ev_id = int(state.cells[i, t])
            if ev_id:
                energy = float(env.energy_table[i, ev_id - 1])
                rows.append((i, t, ev_id, kind.value, energy))
    return rows


def write_schedule(path, state: ScheduleState, env: Environment) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCHEDULE_HEADER)
        for i, t, ev_id, kind, energy in schedule_rows(state, env):
            w.writerow([i, t, ev_id, kind, repr(energy)])


def write_curves(path, target, achieved, baseline) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVES_HEADER)
        for t, row in enumerate(zip(target, achieved, baseline)):
            w.writerow([t, *(repr(float(v)) for v in row)])


def write_records(path, records: dict[str, str]) -> None:
    with open(path, "w") as fh:
        for key, value in records.items():
            fh.write(f"{key} = {value}\n")


def read_records(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


# -- checkpoint ---------------------------------------------------------------

def _u32(fh: BinaryIO, *values: int):
    fh.write(struct.pack(f"<{len(values)}I", *values))


def write_checkpoint(fh: BinaryIO, params: NetworkParams) -> None:
    cfg = params.config
    fh.write(MAGIC)
    _u32(fh, VERSION, cfg.input_size, cfg.output_size)
    fh.write(struct.pack("<d", cfg.dropout_rate))
    _u32(fh, len(cfg.hidden), *cfg.hidden)
    _u32(fh, len(cfg.dropout_after), *cfg.dropout_after)
    _u32(fh, params.n_layers)
    for W, b in zip(params.weights, params.biases):
        _u32(fh, *W.shape)
        fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint")
    return data


def _read_u32(fh: BinaryIO, count: int = 1) -> tuple[int, ...]:
    return struct.unpack(f"<{count}I", _read_exact(fh, 4 * count))


def read_checkpoint(fh: BinaryIO) -> NetworkParams:
    if _read_exact(fh, 4) != MAGIC:
        raise CheckpointError("not a DRQN checkpoint (bad magic)")
    version, input_size, output_size = _read_u32(fh, 3)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (dropout_rate,) = struct.unpack("<d", _read_exact(fh, 8))
    (n_hidden,) = _read_u32(fh)
    hidden = _read_u32(fh, n_hidden) if n_hidden else ()
    (n_drop,) = _read_u32(fh)
    dropout_after = _read_u32(fh, n_drop) if n_drop else ()
    config = NetworkConfig(input_size, output_size, tuple(hidden), dropout_rate, tuple(dropout_after))
    (n_layers,) = _read_u32(fh)
    sizes = config.layer_sizes
    if n_layers != len(sizes) - 1:
        raise CheckpointError(f"header declares {len(sizes) - 1} layers, body has {n_layers}")
    weights, biases = [], []
    for l in range(n_layers):
        rows, cols = _read_u32(fh, 2)
        if (rows, cols) != (sizes[l + 1], sizes[l]):
            raise CheckpointError(f"layer {l} has shape {rows}x{cols}, expected {sizes[l + 1]}x{sizes[l]}")
        W = np.frombuffer(_read_exact(fh, 8 * rows * cols), dtype="<f8").reshape(rows, cols)
        b = np.frombuffer(_read_exact(fh, 8 * rows), dtype="<f8")
        weights.append(W.astype(float))
        biases.append(b.astype(float))
    if fh.read(1):
        raise CheckpointError("trailing bytes after checkpoint body")
    return NetworkParams(config, weights, biases)


def save_checkpoint(path, params: NetworkParams) -> None:
    with open(path, "wb") as fh:
        write_checkpoint(fh, params)


def load_checkpoint(path) -> NetworkParams:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        return read_checkpoint(fh)


def check_shape(params: NetworkParams, expected: NetworkConfig) -> None:
    got = params.config
    if got.layer_sizes != expected.layer_sizes:
        raise ShapeError(
            f"checkpoint network {'x'.join(map(str, got.layer_sizes))} does not match "
            f"configured network {'x'.join(map(str, expected.layer_sizes))}"
        )
