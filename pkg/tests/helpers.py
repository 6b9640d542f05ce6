"""Scenario builders shared by the test modules."""

import numpy as np

from iovt_mec.channel import ChannelState, draw_channel, mean_gain_matrix, noise_power_w
from iovt_mec.scenario import IovtDevice, MecBs, Scenario, SimParams, populate_devices


def build(bss, devices, params=None, fading=False, seed=0):
    """Scenario from (x, y, capacity) and (x, y, C, T, L) tuples.

    Without fading the instantaneous gains equal the pathloss-only gains.
    """
    params = SimParams() if params is None else params
    sc = Scenario(
        params,
        bss=[MecBs(j, (x, y), cap) for j, (x, y, cap) in enumerate(bss)],
        devices=[IovtDevice(i, (x, y), C, T, L, params.power_cap_w)
                 for i, (x, y, C, T, L) in enumerate(devices)],
    )
    if fading:
        return sc, draw_channel(sc, seed)
    mean = mean_gain_matrix(sc)
    return sc, ChannelState(gains=mean, mean_gains=mean)


def random_instance(seed, capacity_range=(0.4e9, 2e9), max_devices=20, max_bss=5, beta=1.0):
    """N <= 20 devices and M <= 5 BSs placed uniformly over the default area."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, max_bss + 1))
    n = int(rng.integers(1, max_devices + 1))
    params = SimParams(mec_capacity_range_bps=capacity_range, beta_sic=beta, seed=seed)
    xy = rng.uniform(-300, 300, size=(m, 2))
    caps = rng.uniform(*capacity_range, size=m)
    sc = Scenario(params, bss=[MecBs(j, (float(x), float(y)), float(c))
                               for j, ((x, y), c) in enumerate(zip(xy, caps))])
    sc = populate_devices(sc, n, seed)
    return sc, draw_channel(sc, seed)


def oracle_admits(scenario, channel, mode):
    """Closure over the loop-based admission test from ``oracles``."""
    from oracles import set_feasible

    p = scenario.params
    sigma2 = noise_power_w(p)

    def admits(bs_id, members):
        devs = [(d.id, d.workload_bits, d.deadline_s, d.local_rate_bps, d.power_cap_w)
                for d in (scenario.devices[i] for i in members)]
        gains = [float(channel.gains[i, bs_id]) for i in members]
        return set_feasible(devs, gains, scenario.bss[bs_id].capacity_bps, p.beta_sic,
                            sigma2, p.bandwidth_hz, mode.value)

    return admits

