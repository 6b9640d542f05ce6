"""NOMA-assisted multi-MEC offloading simulator for IoVT networks."""

from .scenario import IovtDevice, MecBs, Scenario, SimParams, make_grid_topology, make_scenario, populate_devices
from .channel import ChannelState, channel_gain, draw_channel, noise_power_w, pathloss_db
from .noma import SicMode, UplinkPlan, allocate_power, plan_uplink, sic_order, sic_rates, staged_timeline
from .compute import AllocationResult, min_required_rate, split_ratio, task_delay, waterfill
from .association import Matching, PreferenceLists, build_preferences, distance_association, feasible, gale_shapley
from .harness import Arm, ExperimentConfig, RunMetrics, emit_results, run_once, run_sweep

__version__ = "0.1.0"
