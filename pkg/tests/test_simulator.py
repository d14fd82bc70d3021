import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from memadvisor.classifier import Category
from memadvisor.predictor import ClusterConfig, plan
from memadvisor.simulator import (
    BASELINE_BYTES,
    SimWorkloadSpec,
    alpha_band,
    evaluate_plan,
    generate,
    simulate,
)
from memadvisor.units import MB

CATEGORIES = list(Category)
DEFAULT = ClusterConfig()


def test_generate_shrinking_band():
    spec = generate(Category.SHRINKING, 1000 * MB, 4, seed=7)
    assert 0 < spec.max_shuffle_bytes <= 500 * MB
    assert spec.per_stage_shuffle_bytes[0] == 0
    assert len(spec.per_stage_shuffle_bytes) == 4


def test_generate_deterministic():
    assert generate(Category.MEDIUM, 321 * MB, 5, seed=99) == generate(Category.MEDIUM, 321 * MB, 5, seed=99)


def test_generate_rapid_at_least_input():
    for s in range(20):
        assert generate(Category.EXPANDING_RAPID, 100 * MB, 3, seed=s).max_shuffle_bytes >= 100 * MB


def test_generate_rejects_bad_args():
    with pytest.raises(ValueError):
        generate(Category.MEDIUM, MB, 1, seed=0)
    with pytest.raises(ValueError):
        generate(Category.MEDIUM, 2, 3, seed=0)  # no integer strictly between 1 and 2


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from(CATEGORIES),
    st.integers(3, 4096 * MB),
    st.integers(2, 10),
    st.integers(0, 2**63 - 1),
    st.booleans(),
)
def test_generate_band_membership(cat, inp, stages, seed, capped):
    spec = generate(cat, inp, stages, seed, cap_at_factor=capped)
    lo, hi, lo_inc, hi_inc = alpha_band(cat)
    a = spec.alpha
    assert (a >= lo if lo_inc else a > lo) and (a <= hi if hi_inc else a < hi)
    assert spec.per_stage_shuffle_bytes[0] == 0
    assert all(0 <= s <= spec.max_shuffle_bytes for s in spec.per_stage_shuffle_bytes)
    if capped:
        assert spec.within_factor()


def _spec(input_bytes, shuffles, cat=Category.MEDIUM):
    return SimWorkloadSpec(cat, input_bytes, len(shuffles), tuple(shuffles), seed=0)


def test_sufficient_capacity():
    spec = _spec(600 * MB, [0, 200 * MB, 500 * MB])
    res = simulate(spec, 4096 * MB, DEFAULT)
    assert not res.oom
    assert res.spilled_bytes == 0
    assert res.headroom_bytes > 0


def test_pinned_cache_larger_than_share_is_oom():
    spec = _spec(600 * MB, [0, 200 * MB, 500 * MB])
    # cached slice per executor is 300 MB; a 301 MB heap leaves 0.75 MB of share
    res = simulate(spec, 301 * MB, DEFAULT)
    assert res.oom
    assert res.headroom_bytes < 0
    assert res.peak_executor_bytes == 300 * MB


def test_capacity_must_exceed_reserved():
    with pytest.raises(ValueError):
        simulate(_spec(MB, [0, 1]), 300 * MB, DEFAULT)


def test_exhaustive_no_oom_without_cache():
    # every small combination of block, tasks, parallelism, input, stage shuffles and capacity
    unit = MB
    for block, tasks, par in itertools.product([1, 2, 3], [1, 2, 3], [1, 2, 4]):
        cfg = ClusterConfig(block * unit, tasks, par, cache_input=False, reserved_memory_bytes=4 * unit)
        for inp in (1, 2, 5):
            for shuffles in itertools.product(range(0, 7, 2), repeat=2):
                spec = _spec(inp * unit, [0, *shuffles])
                for cap in (5, 6, 8, 13):
                    res = simulate(spec, cap * unit, cfg)
                    assert not res.oom
                    assert res.headroom_bytes >= 0
                    assert res.charged_bytes == sum(t.occupancy_bytes for t in res.timeline) + (
                        res.spilled_bytes + res.evicted_bytes
                    )


spec_st = st.builds(
    lambda cat, inp, n, seed: generate(cat, inp, n, seed),
    st.sampled_from(CATEGORIES),
    st.integers(3, 2048 * MB),
    st.integers(2, 8),
    st.integers(0, 2**32),
)
cfg_st = st.builds(
    ClusterConfig,
    block_size_bytes=st.sampled_from([32 * MB, 64 * MB, 128 * MB, 256 * MB]),
    tasks_per_executor=st.integers(1, 8),
    parallelism=st.integers(1, 16),
    cache_input=st.booleans(),
)


@settings(max_examples=200, deadline=None)
@given(spec_st, cfg_st, st.integers(301 * MB, 8192 * MB))
def test_conservation_and_determinism(spec, cfg, cap):
    res = simulate(spec, cap, cfg)
    assert res == simulate(spec, cap, cfg)
    total = sum(t.occupancy_bytes for t in res.timeline) + res.spilled_bytes + res.evicted_bytes
    assert res.charged_bytes == total
    for t in res.timeline:
        assert t.charged_bytes == t.occupancy_bytes + t.spilled_bytes + t.evicted_bytes
    assert res.oom == (res.peak_executor_bytes > res.spark_share_bytes)
    assert res.headroom_bytes == res.spark_share_bytes - res.peak_executor_bytes
    assert res.oom == (res.headroom_bytes < 0)


@settings(max_examples=200, deadline=None)
@given(spec_st, cfg_st, st.integers(301 * MB, 8192 * MB), st.integers(0, 4096 * MB))
def test_dominance_in_capacity(spec, cfg, cap, extra):
    small = simulate(spec, cap, cfg)
    big = simulate(spec, cap + extra, cfg)
    assert big.headroom_bytes >= small.headroom_bytes
    assert big.spilled_bytes <= small.spilled_bytes
    assert not (big.oom and not small.oom)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(CATEGORIES), st.integers(3, 2048 * MB), st.integers(2, 8), st.integers(0, 2**32), cfg_st)
def test_band_soundness(cat, inp, n, seed, cfg):
    spec = generate(cat, inp, n, seed, cap_at_factor=True)
    p = plan(cat, inp, cfg)
    res = simulate(spec, p.capacity_bytes, cfg)
    assert not res.oom
    assert res.headroom_bytes >= 0
    # shuffle stages never spill when the workload stays within its factor
    assert all(t.spilled_bytes == 0 for t in res.timeline[1:])


@pytest.mark.parametrize("cat", CATEGORIES)
@pytest.mark.parametrize("inp_mb", [100, 600, 1200])
def test_band_edge_peak_equals_plan(cat, inp_mb):
    inp = inp_mb * MB
    spec = _spec(inp, [0, cat.factor * inp // 2, cat.factor * inp], cat)
    p = plan(cat, inp, DEFAULT)
    res = simulate(spec, p.capacity_bytes, DEFAULT)
    assert res.headroom_bytes >= 0
    # the stage at the band edge charges exactly the shuffle-stage term
    assert res.timeline[2].occupancy_bytes <= p.mem_other_stages_bytes
    assert p.mem_other_stages_bytes - res.timeline[2].occupancy_bytes < 1


def test_evaluate_shrinking_no_oom():
    rep = evaluate_plan(Category.SHRINKING, 600 * MB, DEFAULT, trials=100, seed=1)
    assert rep.planned.oom_rate == 0
    assert rep.planned.min_headroom_bytes >= 0
    assert rep.trials == 100


def test_evaluate_rapid_in_band_no_oom():
    rep = evaluate_plan(Category.EXPANDING_RAPID, 300 * MB, DEFAULT, trials=100, seed=3, cap_at_factor=True)
    assert rep.planned.oom_rate == 0
    assert rep.planned.spill_rate == 0


def test_evaluate_rapid_tail_spills():
    # ExpandingRapid workloads reach 6x input, beyond the factor of 4
    rep = evaluate_plan(Category.EXPANDING_RAPID, 300 * MB, DEFAULT, trials=100, seed=3)
    assert rep.planned.oom_rate == 0
    assert rep.planned.spill_rate > 0


def test_evaluate_medium_600_against_baseline():
    rep = evaluate_plan(Category.MEDIUM, 600 * MB, DEFAULT, trials=20, seed=0)
    assert rep.baseline.capacity_bytes == BASELINE_BYTES
    assert rep.planned.capacity_bytes == 2300 * MB
    assert rep.savings_ratio == pytest.approx(1 - 2300 / 2048)


def test_evaluate_is_deterministic():
    a = evaluate_plan(Category.MEDIUM, 700 * MB, DEFAULT, trials=5, seed=11)
    b = evaluate_plan(Category.MEDIUM, 700 * MB, DEFAULT, trials=5, seed=11)
    assert a == b
    with pytest.raises(ValueError):
        evaluate_plan(Category.MEDIUM, 700 * MB, DEFAULT, trials=0)
