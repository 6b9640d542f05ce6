"""Large-scale pathloss, Rayleigh block fading and receiver noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import FADING_STREAM, IovtDevice, MecBs, Scenario, SimParams, stream_rng


def pathloss_db(distance_km):
    """128.1 + 37.6 log10(d[km]); accepts scalars or arrays."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("pathloss is undefined for non-positive distance")
    out = 128.1 + 37.6 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def distance_m(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def channel_gain(device: IovtDevice, bs: MecBs, fading_coeff: complex) -> float:
    """Linear power gain |fading|^2 * 10^(-PL/10) for one device-BS link."""
    d = distance_m(device.position, bs.position)
    if d <= 0:
        raise ValueError(f"device {device.id} is co-located with BS {bs.id}")
    return abs(fading_coeff) ** 2 * 10.0 ** (-pathloss_db(d / 1000.0) / 10.0)


def noise_power_w(params: SimParams) -> float:
    """Receiver noise sigma^2 = B * N0 in watts."""
    if not params.bandwidth_hz > 0:
        raise ValueError("bandwidth must be positive")
    return params.bandwidth_hz * 10.0 ** ((params.noise_psd_dbm_hz - 30.0) / 10.0)


def rayleigh_coefficients(rng: np.random.Generator, shape) -> np.ndarray:
    """Samples of CN(0, 1): unit-variance circularly-symmetric complex Gaussian."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


@dataclass(frozen=True)
class ChannelState:
    """Per (device, BS) gains. ``gains`` includes fading, ``mean_gains`` does not."""

    gains: np.ndarray
    mean_gains: np.ndarray

    def __post_init__(self):
        for name in ("gains", "mean_gains"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be a (devices, BSs) matrix")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and non-negative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.gains.shape != self.mean_gains.shape:
            raise ValueError("gains and mean_gains shapes differ")


def mean_gain_matrix(scenario: Scenario) -> np.ndarray:
    dev = scenario.device_positions()
    bs = scenario.bs_positions()
    d = np.hypot(dev[:, None, 0] - bs[None, :, 0], dev[:, None, 1] - bs[None, :, 1])
    if d.size and np.any(d <= 0):
        raise ValueError("a device is co-located with a BS")
    if d.size == 0:
        return np.zeros(d.shape)
    return 10.0 ** (-pathloss_db(d / 1000.0) / 10.0)


def draw_channel(scenario: Scenario, seed: int | None = None) -> ChannelState:
    """Pathloss for every link plus one Rayleigh draw held for the whole run."""
    seed = scenario.params.seed if seed is None else seed
    mean = mean_gain_matrix(scenario)
    h = rayleigh_coefficients(stream_rng(seed, FADING_STREAM), mean.shape)
    return ChannelState(gains=np.abs(h) ** 2 * mean, mean_gains=mean)
