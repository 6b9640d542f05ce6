"""Simulation world: parameters, MEC-BS topology and the IoVT device population."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

# Sub-stream offsets; each layer gets its own generator so that redrawing one
# layer never shifts the random numbers consumed by another.
TOPOLOGY_STREAM = 0
DEVICE_STREAM = 1
FADING_STREAM = 2

GRID_M = (-200.0, 0.0, 200.0)


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for one purpose (topology, devices, fading) of a seed."""
    return np.random.default_rng([stream, int(seed)])


@dataclass(frozen=True)
class SimParams:
    bandwidth_hz: float = 2e6
    noise_psd_dbm_hz: float = -174.0
    workload_range_bits: tuple[float, float] = (5e6, 10e6)
    deadline_range_s: tuple[float, float] = (0.1, 2.0)
    local_rate_range_bps: tuple[float, float] = (1e6, 10e6)
    mec_capacity_range_bps: tuple[float, float] = (0.4e9, 2e9)
    area_m: float = 600.0
    penalty_delay_s: float = 10.0
    power_cap_w: float = 0.2
    beta_sic: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("workload_range_bits", "deadline_range_s",
                     "local_rate_range_bps", "mec_capacity_range_bps"):
            lo, hi = (float(v) for v in getattr(self, name))
            if lo > hi:
                raise ValueError(f"{name}: minimum {lo} exceeds maximum {hi}")
            if lo <= 0:
                raise ValueError(f"{name}: values must be positive, got {lo}")
            object.__setattr__(self, name, (lo, hi))
        for name in ("bandwidth_hz", "area_m", "power_cap_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.penalty_delay_s < 0:
            raise ValueError("penalty_delay_s must be non-negative")
        if not 0.0 < self.beta_sic <= 1.0:
            raise ValueError(f"beta_sic must lie in (0, 1], got {self.beta_sic}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimParams":
        """Build from a key-value mapping; missing keys take defaults, unknown keys raise."""
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            raise ValueError(f"unknown parameter key(s): {', '.join(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key.endswith("_range_bits") or key.endswith("_range_s") or key.endswith("_range_bps"):
                if not isinstance(value, (list, tuple)) or len(value) != 2:
                    raise ValueError(f"{key} must be a [min, max] pair")
                value = (float(value[0]), float(value[1]))
            elif key == "seed":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValueError("seed must be an integer")
            else:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValueError(f"{key} must be a number")
                value = float(value)
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


def load_params(path: str | Path) -> SimParams:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return SimParams.from_dict(data)


@dataclass(frozen=True)
class MecBs:
    id: int
    position: tuple[float, float]
    capacity_bps: float

    def __post_init__(self):
        if not self.capacity_bps > 0:
            raise ValueError(f"BS {self.id}: capacity must be positive")


@dataclass(frozen=True)
class IovtDevice:
    id: int
    position: tuple[float, float]
    workload_bits: float
    deadline_s: float
    local_rate_bps: float
    power_cap_w: float

    def __post_init__(self):
        for name in ("workload_bits", "deadline_s", "local_rate_bps", "power_cap_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"device {self.id}: {name} must be positive")


@dataclass(frozen=True)
class Scenario:
    params: SimParams
    bss: tuple[MecBs, ...]
    devices: tuple[IovtDevice, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "bss", tuple(self.bss))
        object.__setattr__(self, "devices", tuple(self.devices))
        if not self.bss:
            raise ValueError("a scenario needs at least one MEC-BS")
        # Devices and BSs are addressed by position in their tuple.
        if [b.id for b in self.bss] != list(range(len(self.bss))):
            raise ValueError("BS ids must be 0..M-1 in order")
        if [d.id for d in self.devices] != list(range(len(self.devices))):
            raise ValueError("device ids must be 0..N-1 in order")

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def n_bss(self) -> int:
        return len(self.bss)

    def bs_positions(self) -> np.ndarray:
        return np.array([b.position for b in self.bss], dtype=float).reshape(-1, 2)

    def device_positions(self) -> np.ndarray:
        return np.array([d.position for d in self.devices], dtype=float).reshape(-1, 2)


def make_grid_topology(params: SimParams) -> Scenario:
    """Nine MEC-BSs on the {-200, 0, 200} m grid, row by row from the top-left.

    Capacities are uniform over ``params.mec_capacity_range_bps``, drawn from the
    topology stream of ``params.seed``.
    """
    rng = stream_rng(params.seed, TOPOLOGY_STREAM)
    positions = [(x, y) for y in reversed(GRID_M) for x in GRID_M]
    lo, hi = params.mec_capacity_range_bps
    capacities = rng.uniform(lo, hi, size=len(positions))
    bss = tuple(MecBs(id=j, position=pos, capacity_bps=float(c))
                for j, (pos, c) in enumerate(zip(positions, capacities)))
    return Scenario(params=params, bss=bss)


def populate_devices(scenario: Scenario, n: int, seed: int) -> Scenario:
    """Return a copy of ``scenario`` holding ``n`` freshly drawn devices.

    Positions are uniform over the square of side ``area_m`` centred on the
    origin; workload, deadline and local rate are uniform over their ranges.
    """
    if n < 0:
        raise ValueError("device count must be non-negative")
    p = scenario.params
    rng = stream_rng(seed, DEVICE_STREAM)
    half = p.area_m / 2.0
    pos = rng.uniform(-half, half, size=(n, 2))
    workload = rng.uniform(*p.workload_range_bits, size=n)
    deadline = rng.uniform(*p.deadline_range_s, size=n)
    local = rng.uniform(*p.local_rate_range_bps, size=n)
    devices = tuple(
        IovtDevice(id=i, position=(float(pos[i, 0]), float(pos[i, 1])),
                   workload_bits=float(workload[i]), deadline_s=float(deadline[i]),
                   local_rate_bps=float(local[i]), power_cap_w=p.power_cap_w)
        for i in range(n)
    )
    return dataclasses.replace(scenario, devices=devices)


def make_scenario(params: SimParams, n: int, seed: int | None = None) -> Scenario:
    """3x3 grid topology plus ``n`` devices, every layer derived from one seed."""
    if seed is not None:
        params = dataclasses.replace(params, seed=int(seed))
    return populate_devices(make_grid_topology(params), n, params.seed)
