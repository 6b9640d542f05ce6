import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from iovt_mec.noma import (
    SicMode, allocate_power, plan_uplink, sic_order, sic_rates, staged_timeline,
)
from iovt_mec.scenario import IovtDevice

B = 2e6
SIGMA2 = 7.96e-15


def dev(i, deadline=1.0, cap=0.2):
    return IovtDevice(i, (0.0, 0.0), 5e6, deadline, 1e6, cap)


def test_order_by_deadline():
    devices = [dev(1, 0.5), dev(2, 0.1), dev(3, 2.0)]
    assert sic_order(devices, [1e-9] * 3, SicMode.DEADLINE_ASCENDING) == [1, 0, 2]


def test_order_by_channel():
    devices = [dev(1), dev(2)]
    assert sic_order(devices, [1e-9, 5e-9], SicMode.CHANNEL_DESCENDING) == [1, 0]


def test_order_tie_breaks_on_id():
    devices = [dev(7, 0.4), dev(3, 0.4)]
    assert sic_order(devices, [1e-9, 1e-9], "deadline") == [1, 0]
    assert sic_order(devices, [1e-9, 1e-9], "channel") == [1, 0]


def test_order_empty_and_bad_mode():
    with pytest.raises(ValueError):
        sic_order([], [], SicMode.DEADLINE_ASCENDING)
    with pytest.raises(ValueError):
        sic_order([dev(0)], [1.0], "random")


def test_power_single_device():
    assert allocate_power([3e-10], [0.2], 0.7).tolist() == [0.2]


def test_power_equal_gains_fixed_point():
    p = allocate_power([2e-10] * 4, [0.2, 0.3, 0.5, 0.2], 1.0)
    assert p.tolist() == [0.2] * 4


def test_power_hand_example():
    # threshold 0.8 * 2e-10 * 0.2 / 1e-10 = 0.32, capped at 0.2
    p = allocate_power([2e-10, 1e-10], [0.2, 0.2], 0.8)
    assert p.tolist() == [0.2, 0.2]
    # reversed gains: 0.8 * 1e-10 * 0.2 / 2e-10 = 0.08
    p = allocate_power([1e-10, 2e-10], [0.2, 0.2], 0.8)
    assert p[1] == pytest.approx(0.08, rel=1e-12)


def test_power_rejects_zero_gain():
    with pytest.raises(ValueError):
        allocate_power([1e-10, 0.0], [0.2, 0.2], 1.0)


def test_rates_single_is_point_to_point():
    g, p = 1e-10, 0.2
    assert sic_rates([g], [p], SIGMA2, B)[0] == pytest.approx(B * math.log2(1 + g * p / SIGMA2))


def test_rates_two_unit_snr():
    g = SIGMA2 / 0.1
    r = sic_rates([g, g], [0.1, 0.1], SIGMA2, B)
    assert r[0] == pytest.approx(B * math.log2(1.5), rel=1e-12)
    assert r[1] == pytest.approx(B, rel=1e-12)


def test_rates_need_positive_noise():
    with pytest.raises(ValueError):
        sic_rates([1.0], [1.0], 0.0, B)


instance = st.integers(1, 10).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-14, -6), min_size=n, max_size=n),
    st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n),
    st.floats(0.01, 1.0),
))


@settings(max_examples=300, deadline=None)
@given(instance)
def test_power_chain_and_caps(inst):
    log_g, caps, beta = inst
    g = 10.0 ** np.array(log_g)
    p = allocate_power(g, caps, beta)
    assert np.all(p > 0) and np.all(p <= np.array(caps))
    rx = g * p
    assert np.all(rx[1:] <= beta * rx[:-1] * (1 + 1e-12))


@settings(max_examples=300, deadline=None)
@given(instance)
def test_sum_rate_telescopes(inst):
    log_g, caps, beta = inst
    g = 10.0 ** np.array(log_g)
    p = allocate_power(g, caps, beta)
    total = sum(sic_rates(g, p, SIGMA2, B))
    snr = sum(gi * pi for gi, pi in zip(g, p)) / SIGMA2
    assert total == pytest.approx(B * math.log2(1 + snr), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(instance, st.data())
def test_dropping_a_signal_never_slows_survivors(inst, data):
    log_g, caps, beta = inst
    assume(len(log_g) >= 2)
    g = 10.0 ** np.array(log_g)
    p = allocate_power(g, caps, beta)
    full = sic_rates(g, p, SIGMA2, B)
    k = data.draw(st.integers(0, len(g) - 1))
    keep = [i for i in range(len(g)) if i != k]
    reduced = sic_rates(g[keep], p[keep], SIGMA2, B)
    assert np.all(reduced >= full[keep] * (1 - 1e-12))


def test_timeline_single_device():
    g, p = 1e-10, 0.2
    rate = B * math.log2(1 + g * p / SIGMA2)
    tl = staged_timeline([g], [p], [rate * 0.75], SIGMA2, B)
    assert len(tl.stages) == 1
    assert tl.completion_s[0] == pytest.approx(0.75)


def test_timeline_zero_bits_never_active():
    tl = staged_timeline([1e-10, 1e-10], [0.2, 0.2], [0.0, 1e6], SIGMA2, B)
    assert tl.completion_s[0] == 0.0
    assert all(0 not in s.active for s in tl.stages)


def test_timeline_two_stage_hand_run():
    # Both at g p / sigma2 = 1 with B bits each.  Stage 1 rates are
    # B log2(1.5) for the first-decoded signal and B for the second, so the
    # second finishes at 1 s; the first then has (1 - log2 1.5) B bits left and
    # sends them alone at B, finishing at 2 - log2(1.5) ~ 1.415 s.
    g = SIGMA2 / 0.1
    tl = staged_timeline([g, g], [0.1, 0.1], [B, B], SIGMA2, B)
    assert len(tl.stages) == 2
    assert tl.stages[0].active == (0, 1)
    assert tl.stages[0].duration_s == pytest.approx(1.0, rel=1e-12)
    assert tl.stages[1].active == (0,)
    assert tl.stages[1].rates_bps[0] == pytest.approx(B, rel=1e-12)
    assert tl.completion_s[1] == pytest.approx(1.0, rel=1e-12)
    assert tl.completion_s[0] == pytest.approx(2 - math.log2(1.5), rel=1e-12)
    assert tl.completion_s[0] == pytest.approx(1.415, abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(instance, st.data())
def test_timeline_dominated_by_full_interference(inst, data):
    log_g, caps, beta = inst
    g = 10.0 ** np.array(log_g)
    p = allocate_power(g, caps, beta)
    r = sic_rates(g, p, SIGMA2, B)
    assume(np.all(r > 0))
    bits = np.array(data.draw(st.lists(st.just(0.0) | st.floats(1, 1e7), min_size=len(g), max_size=len(g))))
    tl = staged_timeline(g, p, bits, SIGMA2, B)
    assert np.all(tl.completion_s <= bits / r * (1 + 1e-9))
    # everyone finishes exactly once and stays active up to that point
    for k in range(len(g)):
        stages_in = [i for i, s in enumerate(tl.stages) if k in s.active]
        assert stages_in == list(range(len(stages_in)))
        assert (len(stages_in) > 0) == (bits[k] > 0)
    assert all(s.duration_s > 0 for s in tl.stages)


def test_plan_uplink_orders_by_mode():
    devices = [dev(0, 1.5), dev(1, 0.3), dev(2, 0.9)]
    gains = [5e-10, 1e-10, 3e-10]
    plan = plan_uplink(devices, gains, SicMode.DEADLINE_ASCENDING, 1.0, SIGMA2, B)
    assert plan.order == (1, 2, 0)
    assert plan.powers_w[0] == 0.2
    rx = plan.gains * plan.powers_w
    assert np.all(rx[1:] <= rx[:-1] * (1 + 1e-12))
    plan = plan_uplink(devices, gains, SicMode.CHANNEL_DESCENDING, 1.0, SIGMA2, B)
    assert plan.order == (0, 2, 1)
    assert plan.powers_w.tolist() == [0.2] * 3


def test_timeline_bits_matched_to_rates_finish_together():
    g = SIGMA2 / 0.1
    tl = staged_timeline([g, g], [0.1, 0.1], [B * math.log2(1.5), B], SIGMA2, B)
    assert len(tl.stages) == 1
    assert tl.completion_s.tolist() == pytest.approx([1.0, 1.0], rel=1e-12)
