"""Device-to-MEC-BS association: the matching game and the nearest-BS baseline."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelState, noise_power_w
from .compute import min_required_rate
from .noma import SicMode, UplinkPlan, plan_uplink
from .scenario import MecBs, Scenario, SimParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PreferenceLists:
    device_prefs: tuple[tuple[int, ...], ...]  # per device: BS ids, best first
    bs_prefs: tuple[tuple[int, ...], ...]  # per BS: device ids, best first

    def bs_rank(self) -> list[dict[int, int]]:
        return [{d: r for r, d in enumerate(lst)} for lst in self.bs_prefs]


def _ranked(values: np.ndarray) -> tuple[int, ...]:
    # descending value, ascending index on ties
    return tuple(int(k) for k in sorted(range(len(values)), key=lambda k: (-values[k], k)))


def build_preferences(scenario: Scenario, mean_gains: np.ndarray) -> PreferenceLists:
    """Both sides rank the other by pathloss-only gain, strongest link first."""
    g = np.asarray(mean_gains, dtype=float)
    if g.shape != (scenario.n_devices, scenario.n_bss):
        raise ValueError("mean gain matrix does not match the scenario")
    return PreferenceLists(
        device_prefs=tuple(_ranked(g[i, :]) for i in range(g.shape[0])),
        bs_prefs=tuple(_ranked(g[:, j]) for j in range(g.shape[1])),
    )


@dataclass(frozen=True)
class Admission:
    plan: UplinkPlan
    u_min: dict[int, float]  # device id -> minimum MEC rate

    @property
    def total_u_min(self) -> float:
        return sum(self.u_min.values())


def feasible(bs: MecBs, candidates: Iterable[int], scenario: Scenario, channel: ChannelState,
             mode: SicMode, params: SimParams | None = None) -> Admission | None:
    """NOMA plan and minimum MEC rates for ``candidates`` at ``bs``, or None if the
    set cannot meet every deadline within the BS capacity."""
    params = scenario.params if params is None else params
    ids = sorted(set(candidates))
    if not ids:
        raise ValueError("candidate set is empty")
    devices = [scenario.devices[i] for i in ids]
    gains = channel.gains[ids, bs.id]
    if np.any(~(gains > 0)):
        return None
    plan = plan_uplink(devices, gains, mode, params.beta_sic,
                       noise_power_w(params), params.bandwidth_hz)
    u_min = {}
    total = 0.0
    for dev_id, rate in zip(plan.order, plan.rates_bps):
        dev = scenario.devices[dev_id]
        if not rate > 0:
            return None
        u = min_required_rate(dev.workload_bits, dev.deadline_s, dev.local_rate_bps, float(rate))
        if math.isinf(u):
            return None
        total += u
        if total > bs.capacity_bps:
            return None
        u_min[dev_id] = u
    return Admission(plan=plan, u_min=u_min)


@dataclass(frozen=True)
class Matching:
    assignment: tuple[int | None, ...]  # per device: BS id, or None when unassociated
    n_bss: int
    proposals: int = 0  # device-initiated requests, at most N*M
    recalls: int = 0  # BS-initiated re-admissions after deferred acceptance settles

    def held(self, bs_id: int) -> list[int]:
        return [i for i, b in enumerate(self.assignment) if b == bs_id]

    @property
    def association_count(self) -> int:
        return sum(b is not None for b in self.assignment)

    @property
    def unassociated(self) -> list[int]:
        return [i for i, b in enumerate(self.assignment) if b is None]

    def loads(self) -> list[int]:
        counts = [0] * self.n_bss
        for b in self.assignment:
            if b is not None:
                counts[b] += 1
        return counts


def gale_shapley(scenario: Scenario, prefs: PreferenceLists, channel: ChannelState,
                 mode: SicMode, params: SimParams | None = None) -> Matching:
    """Device-proposing deferred acceptance with a joint NOMA/compute feasibility test.

    In every round each free device proposes to the best BS it has not yet
    tried.  A BS first turns away proposers that could not be served even on
    their own, then, while its held set is infeasible, ejects the held device it
    likes least.  Rejected devices strike that BS from their list.  Each device
    proposes to each BS at most once, so there are at most N*M proposals.

    Once no device can propose, BSs with spare room re-admit devices that prefer
    them (see ``_fill_spare_room``), so that at the end no device can join a BS
    it prefers without that BS ejecting someone.
    """
    params = scenario.params if params is None else params
    n = scenario.n_devices
    rank = prefs.bs_rank()
    next_choice = [0] * n
    assignment: list[int | None] = [None] * n
    held: list[set[int]] = [set() for _ in scenario.bss]
    proposals = 0
    solo_ok: dict[tuple[int, int], bool] = {}

    def acceptable(dev: int, bs: MecBs) -> bool:
        key = (dev, bs.id)
        if key not in solo_ok:
            solo_ok[key] = feasible(bs, [dev], scenario, channel, mode, params) is not None
        return solo_ok[key]

    free = list(range(n))
    while free:
        incoming: dict[int, list[int]] = {}
        for dev in free:
            choices = prefs.device_prefs[dev]
            if next_choice[dev] < len(choices):
                incoming.setdefault(choices[next_choice[dev]], []).append(dev)
                proposals += 1
        if not incoming:
            break
        rejected: list[int] = []
        for bs_id in sorted(incoming):
            bs = scenario.bss[bs_id]
            for dev in incoming[bs_id]:
                if acceptable(dev, bs):
                    held[bs_id].add(dev)
                    assignment[dev] = bs_id
                else:
                    rejected.append(dev)
            while held[bs_id] and feasible(bs, held[bs_id], scenario, channel, mode, params) is None:
                worst = max(held[bs_id], key=lambda d: rank[bs_id][d])
                held[bs_id].remove(worst)
                assignment[worst] = None
                rejected.append(worst)
        for dev in rejected:
            next_choice[dev] += 1
        free = sorted(rejected)

    recalls = _fill_spare_room(scenario, prefs, channel, mode, params, assignment, held)
    return Matching(assignment=tuple(assignment), n_bss=scenario.n_bss,
                    proposals=proposals, recalls=recalls)


def _fill_spare_room(scenario, prefs, channel, mode, params, assignment, held) -> int:
    """Let each BS take in devices that prefer it and fit without any ejection.

    Ejections and lighter late arrivals can leave room at a BS for a device it
    turned away earlier.  A device that moves may leave its old BS infeasible
    (the power chain makes feasibility non-monotone), in which case that BS
    ejects its least-preferred devices until it is feasible again; those devices
    are then candidates like any other.  The loop stops once a full sweep over
    the BSs admits nobody, i.e. no device can join a BS it prefers as is.
    """
    pos = [{b: r for r, b in enumerate(lst)} for lst in prefs.device_prefs]
    rank = prefs.bs_rank()
    max_sweeps = 4 * scenario.n_devices * scenario.n_bss + 10

    def prefers(dev, bs_id):
        cur = assignment[dev]
        return cur is None or pos[dev][bs_id] < pos[dev][cur]

    moves = 0
    for _ in range(max_sweeps):
        changed = False
        for bs in scenario.bss:
            for dev in prefs.bs_prefs[bs.id]:
                if dev in held[bs.id] or not prefers(dev, bs.id):
                    continue
                if feasible(bs, held[bs.id] | {dev}, scenario, channel, mode, params) is None:
                    continue
                old = assignment[dev]
                held[bs.id].add(dev)
                assignment[dev] = bs.id
                moves += 1
                changed = True
                if old is None:
                    continue
                held[old].discard(dev)
                old_bs = scenario.bss[old]
                while held[old] and feasible(old_bs, held[old], scenario, channel, mode, params) is None:
                    worst = max(held[old], key=lambda d: rank[old][d])
                    held[old].remove(worst)
                    assignment[worst] = None
        if not changed:
            break
    else:
        log.warning("admission sweeps did not settle after %d passes", max_sweeps)
    return moves


def distance_association(scenario: Scenario, channel: ChannelState, mode: SicMode,
                         params: SimParams | None = None,
                         prefs: PreferenceLists | None = None) -> Matching:
    """Nearest-BS baseline: one proposal per device, greedy admission, no retries."""
    params = scenario.params if params is None else params
    if prefs is None:
        prefs = build_preferences(scenario, channel.mean_gains)
    assignment: list[int | None] = [None] * scenario.n_devices
    proposers: dict[int, set[int]] = {}
    for dev, choices in enumerate(prefs.device_prefs):
        proposers.setdefault(choices[0], set()).add(dev)
    for bs_id in sorted(proposers):
        bs = scenario.bss[bs_id]
        accepted: list[int] = []
        for dev in (d for d in prefs.bs_prefs[bs_id] if d in proposers[bs_id]):
            if feasible(bs, accepted + [dev], scenario, channel, mode, params) is not None:
                accepted.append(dev)
                assignment[dev] = bs_id
    return Matching(assignment=tuple(assignment), n_bss=scenario.n_bss,
                    proposals=scenario.n_devices)


def blocking_pairs(scenario: Scenario, matching: Matching, prefs: PreferenceLists,
                   channel: ChannelState, mode: SicMode,
                   params: SimParams | None = None) -> list[tuple[int, int]]:
    """Pairs (device, BS) where the device prefers the BS to its assignment and the
    BS could admit it without ejecting anyone."""
    out = []
    for dev, current in enumerate(matching.assignment):
        for bs_id in prefs.device_prefs[dev]:
            if bs_id == current:
                break
            bs = scenario.bss[bs_id]
            if feasible(bs, matching.held(bs_id) + [dev], scenario, channel, mode, params) is not None:
                out.append((dev, bs_id))
    return out


def associate(scenario: Scenario, channel: ChannelState, strategy: str, mode: SicMode,
              params: SimParams | None = None) -> Matching:
    """Dispatch on the experiment's ``association`` key: 'game' or 'distance'."""
    prefs = build_preferences(scenario, channel.mean_gains)
    if strategy == "game":
        return gale_shapley(scenario, prefs, channel, mode, params)
    if strategy == "distance":
        return distance_association(scenario, channel, mode, params, prefs)
    raise ValueError(f"unknown association strategy {strategy!r}; expected 'game' or 'distance'")


def check_matching(scenario: Scenario, matching: Matching, channel: ChannelState,
                   mode: SicMode, params: SimParams | None = None) -> Sequence[Admission | None]:
    """Per-BS admission for the final held sets (None for empty BSs); raises if any is infeasible."""
    out = []
    for bs in scenario.bss:
        members = matching.held(bs.id)
        if not members:
            out.append(None)
            continue
        adm = feasible(bs, members, scenario, channel, mode, params)
        if adm is None:
            raise RuntimeError(f"BS {bs.id} holds an infeasible device set {members}")
        out.append(adm)
    return out
