"""Monte Carlo experiment driver: strategy arms, per-run pipeline, sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .association import associate, check_matching
from .channel import ChannelState, draw_channel, noise_power_w
from .compute import AllocationResult, split_ratio, task_delay, waterfill
from .noma import SicMode
from .scenario import Scenario, SimParams, make_scenario

log = logging.getLogger(__name__)

ASSOCIATIONS = ("game", "distance")


@dataclass(frozen=True)
class Arm:
    association: str
    sic_order: SicMode

    def __post_init__(self):
        if self.association not in ASSOCIATIONS:
            raise ValueError(f"unknown association {self.association!r}; expected one of {ASSOCIATIONS}")
        object.__setattr__(self, "sic_order", SicMode.parse(self.sic_order))

    @property
    def id(self) -> str:
        short = "game" if self.association == "game" else "dist"
        return f"{short}-{self.sic_order.value}"

    @classmethod
    def parse(cls, text: str) -> "Arm":
        """'game-deadline', 'dist-channel', 'distance-deadline', ..."""
        try:
            assoc, sic = text.strip().split("-")
        except ValueError:
            raise ValueError(f"malformed arm {text!r}; expected <association>-<sic_order>") from None
        return cls({"dist": "distance"}.get(assoc, assoc), sic)


PROPOSED = Arm("game", SicMode.DEADLINE_ASCENDING)
DISTANCE_DEADLINE = Arm("distance", SicMode.DEADLINE_ASCENDING)
CONVENTIONAL = Arm("distance", SicMode.CHANNEL_DESCENDING)
DEFAULT_ARMS = (PROPOSED, DISTANCE_DEADLINE, CONVENTIONAL)


@dataclass(frozen=True)
class ExperimentConfig:
    sim_params: SimParams = field(default_factory=SimParams)
    n_devices_sweep: tuple[int, ...] = tuple(range(10, 56, 5))
    runs_per_point: int = 100
    arms: tuple[Arm, ...] = DEFAULT_ARMS
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_devices_sweep", tuple(int(n) for n in self.n_devices_sweep))
        object.__setattr__(self, "arms", tuple(self.arms))
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be at least 1")
        if not self.n_devices_sweep:
            raise ValueError("device-count sweep is empty")
        if any(n < 0 for n in self.n_devices_sweep):
            raise ValueError("device counts must be non-negative")
        if not self.arms:
            raise ValueError("no strategy arms configured")

    _KEYS = ("n_devices_sweep", "runs_per_point", "arms", "base_seed")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Flat mapping of SimParams keys plus optional experiment keys."""
        exp = {k: v for k, v in data.items() if k in cls._KEYS}
        params = SimParams.from_dict({k: v for k, v in data.items() if k not in cls._KEYS})
        kwargs: dict[str, Any] = {"sim_params": params, "base_seed": params.seed}
        if "arms" in exp:
            kwargs["arms"] = tuple(
                Arm.parse(a) if isinstance(a, str) else Arm(a["association"], a["sic_order"])
                for a in exp["arms"])
        if "n_devices_sweep" in exp:
            kwargs["n_devices_sweep"] = tuple(exp["n_devices_sweep"])
        if "runs_per_point" in exp:
            kwargs["runs_per_point"] = int(exp["runs_per_point"])
        if "base_seed" in exp:
            kwargs["base_seed"] = int(exp["base_seed"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class RunMetrics:
    arm: str
    n_devices: int
    seed: int
    total_delay_s: float
    unassociated_fraction: float
    bs_load: tuple[int, ...]
    bs_capacity_bps: tuple[float, ...]
    allocations: tuple[AllocationResult, ...] = field(default=(), compare=False, repr=False)

    @property
    def unassociated(self) -> int:
        return self.n_devices - sum(self.bs_load)


def serve(scenario: Scenario, channel: ChannelState, arm: Arm,
          params: SimParams | None = None) -> tuple[list[int | None], list[AllocationResult]]:
    """Associate, plan the uplink, divide tasks and allocate MEC capacity for one arm."""
    params = scenario.params if params is None else params
    matching = associate(scenario, channel, arm.association, arm.sic_order, params)
    sigma2 = noise_power_w(params)
    results: list[AllocationResult] = []
    for bs, adm in zip(scenario.bss, check_matching(scenario, matching, channel, arm.sic_order, params)):
        if adm is None:
            continue
        plan = adm.plan
        devs = [scenario.devices[d] for d in plan.order]
        C = np.array([d.workload_bits for d in devs])
        L = np.array([d.local_rate_bps for d in devs])
        R = plan.rates_bps
        U = waterfill(C, L, R, [adm.u_min[d.id] for d in devs], bs.capacity_bps)
        alpha = np.array([split_ratio(l, r, u) for l, r, u in zip(L, R, U)])
        planned = np.array([task_delay(c, l, r, u) for c, l, r, u in zip(C, L, R, U)])
        # Realised transmit times come from the staged timeline, where rates only rise.
        offload = alpha * C
        tx_done = plan.timeline(dict(zip(plan.order, offload)), sigma2, params.bandwidth_hz).completion_s
        for k, d in enumerate(devs):
            local_t = (1.0 - alpha[k]) * C[k] / L[k]
            mec_t = tx_done[k] + offload[k] / U[k] if alpha[k] > 0 else 0.0
            realized = max(local_t, mec_t)
            results.append(AllocationResult(
                device_id=d.id, bs_id=bs.id, alpha=float(alpha[k]), mec_rate_bps=float(U[k]),
                uplink_rate_bps=float(R[k]), planned_delay_s=float(planned[k]),
                realized_delay_s=float(realized), deadline_s=d.deadline_s))
    results.sort(key=lambda a: a.device_id)
    return list(matching.assignment), results


def run_once(scenario_seed: int, n: int, arm: Arm, params: SimParams | None = None) -> RunMetrics:
    """Full pipeline for one (seed, N, arm); deterministic in its arguments."""
    params = SimParams() if params is None else params
    scenario = make_scenario(params, n, scenario_seed)
    channel = draw_channel(scenario, scenario_seed)
    assignment, allocations = serve(scenario, channel, arm, scenario.params)
    unassoc = sum(a is None for a in assignment)
    total = sum(a.realized_delay_s for a in allocations) + params.penalty_delay_s * unassoc
    load = [0] * scenario.n_bss
    for b in assignment:
        if b is not None:
            load[b] += 1
    return RunMetrics(
        arm=arm.id, n_devices=n, seed=int(scenario_seed), total_delay_s=float(total),
        unassociated_fraction=unassoc / n if n else 0.0, bs_load=tuple(load),
        bs_capacity_bps=tuple(b.capacity_bps for b in scenario.bss),
        allocations=tuple(allocations))


@dataclass(frozen=True)
class AggregateRow:
    arm: str
    n_devices: int
    mean_total_delay_s: float
    std_total_delay_s: float
    mean_unassoc_frac: float
    std_unassoc_frac: float


@dataclass(frozen=True)
class SweepResult:
    runs: tuple[RunMetrics, ...]
    aggregates: tuple[AggregateRow, ...]

    def aggregate(self, arm: str, n: int) -> AggregateRow:
        for row in self.aggregates:
            if row.arm == arm and row.n_devices == n:
                return row
        raise KeyError((arm, n))


def _run_task(task):
    seed, n, arm, params = task
    return dataclasses.replace(run_once(seed, n, arm, params), allocations=())


def run_sweep(config: ExperimentConfig, workers: int | None = 1) -> SweepResult:
    """Every (N, arm) point over ``runs_per_point`` paired seeds ``base_seed + run``.

    Arms share the seed of a run, hence the same devices and fading.  Results are
    ordered by (N, arm, run) whatever the worker count.
    """
    tasks = [(config.base_seed + r, n, arm, config.sim_params)
             for n in config.n_devices_sweep for arm in config.arms
             for r in range(config.runs_per_point)]
    if workers == 1:
        runs = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // 64)))
    aggregates = []
    k = 0
    for n in config.n_devices_sweep:
        for arm in config.arms:
            block = runs[k:k + config.runs_per_point]
            k += config.runs_per_point
            delay = np.array([r.total_delay_s for r in block])
            frac = np.array([r.unassociated_fraction for r in block])
            aggregates.append(AggregateRow(arm.id, n, float(delay.mean()), float(delay.std()),
                                           float(frac.mean()), float(frac.std())))
            log.debug("N=%d %s mean delay %.3f s, unassociated %.3f", n, arm.id,
                      delay.mean(), frac.mean())
    return SweepResult(runs=tuple(runs), aggregates=tuple(aggregates))


RUNS_HEADER = ("arm", "n_devices", "seed", "total_delay_s", "unassociated_fraction")
SUMMARY_HEADER = ("arm", "n_devices", "mean_total_delay_s", "std_total_delay_s",
                  "mean_unassoc_frac", "std_unassoc_frac")
LOAD_HEADER = ("arm", "n_devices", "seed", "bs_id", "capacity_bps", "associated_devices")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            # str(float) is the shortest repr that round-trips
            writer.writerows([repr(v) if isinstance(v, float) else v for v in row] for row in rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_results(result: SweepResult, out_dir: str | Path) -> dict[str, Path]:
    """Write runs.csv, summary.csv and bs_load.csv into ``out_dir``."""
    if not result.runs:
        raise ValueError("nothing to write: the sweep produced no runs")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    paths = {"runs": out / "runs.csv", "summary": out / "summary.csv", "bs_load": out / "bs_load.csv"}
    _write_csv(paths["runs"], RUNS_HEADER,
               ((r.arm, r.n_devices, r.seed, r.total_delay_s, r.unassociated_fraction)
                for r in result.runs))
    _write_csv(paths["summary"], SUMMARY_HEADER,
               ((a.arm, a.n_devices, a.mean_total_delay_s, a.std_total_delay_s,
                 a.mean_unassoc_frac, a.std_unassoc_frac) for a in result.aggregates))
    _write_csv(paths["bs_load"], LOAD_HEADER,
               ((r.arm, r.n_devices, r.seed, j, cap, load)
                for r in result.runs
                for j, (cap, load) in enumerate(zip(r.bs_capacity_bps, r.bs_load))))
    return paths
