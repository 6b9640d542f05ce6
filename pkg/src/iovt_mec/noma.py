"""Uplink NOMA within one MEC-BS cell: SIC order, power chain, rates and staged transmission.

All array arguments are given in decoding order (position 0 is decoded first)
unless stated otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import IovtDevice


class SicMode(str, enum.Enum):
    DEADLINE_ASCENDING = "deadline"
    CHANNEL_DESCENDING = "channel"

    @classmethod
    def parse(cls, value: "str | SicMode") -> "SicMode":
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown SIC order {value!r}; expected 'deadline' or 'channel'") from None


def sic_order(devices: Sequence[IovtDevice], gains: Sequence[float], mode: SicMode) -> list[int]:
    """Decoding order as positions into ``devices``; ties go to the lower device id."""
    if len(devices) == 0:
        raise ValueError("cannot order an empty device set")
    if len(gains) != len(devices):
        raise ValueError("gains must align with devices")
    mode = SicMode.parse(mode)
    idx = range(len(devices))
    if mode is SicMode.DEADLINE_ASCENDING:
        return sorted(idx, key=lambda k: (devices[k].deadline_s, devices[k].id))
    return sorted(idx, key=lambda k: (-float(gains[k]), devices[k].id))


def allocate_power(gains, caps, beta: float) -> np.ndarray:
    """Recursive power rule p_k = min(beta * g_{k-1} p_{k-1} / g_k, P_k).

    The first decoded device transmits at its cap.  Each received power is then
    at most ``beta`` times the one decoded just before it.
    """
    g = np.asarray(gains, dtype=float)
    cap = np.asarray(caps, dtype=float)
    if g.shape != cap.shape or g.ndim != 1:
        raise ValueError("gains and caps must be aligned 1-D arrays")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if np.any(~(g > 0)):
        raise ValueError("received power ordering needs strictly positive gains")
    if np.any(~(cap > 0)):
        raise ValueError("power caps must be positive")
    p = np.empty_like(g)
    for k in range(g.size):
        p[k] = cap[k] if k == 0 else min(beta * g[k - 1] * p[k - 1] / g[k], cap[k])
    return p


def sic_rates(gains, powers, sigma2: float, bandwidth: float) -> np.ndarray:
    """Shannon rates with SIC: each signal sees only the signals decoded after it."""
    if not sigma2 > 0:
        raise ValueError("noise power must be positive")
    rx = np.asarray(gains, dtype=float) * np.asarray(powers, dtype=float)
    # interference[k] = sum of rx[j] for j > k
    tail = np.cumsum(rx[::-1])[::-1]
    interference = tail - rx
    return bandwidth * np.log2(1.0 + rx / (interference + sigma2))


@dataclass(frozen=True)
class Stage:
    duration_s: float
    active: tuple[int, ...]  # decode positions transmitting in this stage
    rates_bps: tuple[float, ...]  # aligned with ``active``


@dataclass(frozen=True)
class Timeline:
    stages: tuple[Stage, ...]
    completion_s: np.ndarray  # per decode position


def staged_timeline(gains, powers, offload_bits, sigma2: float, bandwidth: float) -> Timeline:
    """Event-driven uplink: everyone with bits left transmits until the next one finishes.

    Powers stay fixed; after each completion the SIC rates of the survivors are
    recomputed without the finished signals, so they never slow down.
    """
    g = np.asarray(gains, dtype=float)
    p = np.asarray(powers, dtype=float)
    remaining = np.array(offload_bits, dtype=float)
    if np.any(remaining < 0):
        raise ValueError("offload bits must be non-negative")
    completion = np.zeros(remaining.size)
    stages: list[Stage] = []
    now = 0.0
    active = np.flatnonzero(remaining > 0)
    while active.size:
        rates = sic_rates(g[active], p[active], sigma2, bandwidth)
        t_left = remaining[active] / rates
        dt = float(t_left.min())
        stages.append(Stage(dt, tuple(int(k) for k in active), tuple(float(r) for r in rates)))
        now += dt
        # Finishers within rounding of the stage end leave together.
        done = t_left <= dt * (1.0 + 1e-12)
        completion[active[done]] = now
        remaining[active] -= rates * dt
        remaining[active[done]] = 0.0
        active = active[~done]
    return Timeline(stages=tuple(stages), completion_s=completion)


@dataclass(frozen=True)
class UplinkPlan:
    """NOMA plan for one BS; per-device arrays follow ``order``."""

    order: tuple[int, ...]  # device ids, decoded first to last
    gains: np.ndarray
    powers_w: np.ndarray
    rates_bps: np.ndarray  # full-interference rates

    def rate_of(self) -> dict[int, float]:
        return {d: float(r) for d, r in zip(self.order, self.rates_bps)}

    def timeline(self, offload_bits: dict[int, float], sigma2: float, bandwidth: float) -> Timeline:
        bits = [offload_bits[d] for d in self.order]
        return staged_timeline(self.gains, self.powers_w, bits, sigma2, bandwidth)


def plan_uplink(devices: Sequence[IovtDevice], gains: Sequence[float], mode: SicMode,
                beta: float, sigma2: float, bandwidth: float) -> UplinkPlan:
    """Order, power and rate for the devices sharing one BS (``gains`` aligned with ``devices``)."""
    order = sic_order(devices, gains, mode)
    g = np.asarray(gains, dtype=float)[order]
    caps = np.array([devices[k].power_cap_w for k in order])
    p = allocate_power(g, caps, beta)
    r = sic_rates(g, p, sigma2, bandwidth)
    return UplinkPlan(order=tuple(devices[k].id for k in order), gains=g, powers_w=p, rates_bps=r)
