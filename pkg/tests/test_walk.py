import math

import numpy as np
import pytest

from rangewalk import groups, walk
from rangewalk.errors import ValidationError
from rangewalk.groups import GroupDescriptor, StepDistribution
from rangewalk.streams import RngStreamSpec
from rangewalk.walk import Trajectory, WalkAccumulator


def test_zero_step_trajectory(sym_z):
    t = walk.sample_trajectory(sym_z, 0, RngStreamSpec(1, 0))
    assert t.positions == (0,) and t.steps == ()
    assert walk.range_of(t).visited == {0}
    g = walk.trace_of(t)
    assert g.vertices == {0} and g.edges == {}


def test_degenerate_measure_rejected(z_line):
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(z_line, [(1, 1.0)])


def test_binomial_concentration_large_n(sym_z):
    t = walk.sample_trajectory(sym_z, 1_000_000, RngStreamSpec(20_260_811, 0))
    freq = sum(1 for x in t.steps if x == 1) / t.n
    # +-0.002 is 4 standard deviations of the exact binomial at this n
    assert abs(freq - 0.5) < 0.002


def test_range_and_trace_examples(z_line):
    t = Trajectory(z_line, (1, -1), (0, 1, 0))
    rs = walk.range_of(t)
    assert rs.visited == {0, 1} and rs.endpoint == 0
    g = walk.trace_of(t)
    assert g.edges == {(0, 1): 1, (1, 0): 1}

    t2 = Trajectory(z_line, (1, 1, -1), (0, 1, 2, 1))
    g2 = walk.trace_of(t2)
    assert walk.range_of(t2).visited == {0, 1, 2}
    assert walk.range_of(t2).endpoint == 1
    assert g2.edges == {(0, 1): 1, (1, 2): 1, (2, 1): 1}

    t3 = Trajectory(z_line, (1, -1, 1, -1), (0, 1, 0, 1, 0))
    g3 = walk.trace_of(t3)
    assert g3.edges == {(0, 1): 2, (1, 0): 2}
    assert g3.total_weight() == 4 == t3.n


def test_prefix_invariants(drift_z):
    t = walk.sample_trajectory(drift_z, 200, RngStreamSpec(5, 1))
    for k in (0, 1, 17, 100, 200):
        p = t.prefix(k)
        g = walk.trace_of(p)
        assert g.total_weight() == k
        assert walk.range_of(p).size <= k + 1
        assert 0 in walk.range_of(p)
        assert g.vertices == walk.range_of(p).visited
        walk.assert_reachable(g)


def test_incremental_matches_recompute(test_measures):
    for name, mu in test_measures.items():
        t = walk.sample_trajectory(mu, 120, RngStreamSpec(11, 3))
        acc = walk.accumulate(t)
        assert acc.range_state().key() == walk.range_of(t).key(), name
        assert acc.trace_digraph() == walk.trace_of(t), name


def test_accumulator_push_pop_roundtrip(f2_uniform):
    acc = WalkAccumulator(f2_uniform.group)
    base_key = acc.trace_key()
    seq = [(1,), (2,), (-1,), (-2,), (1,), (1,)]
    for s in seq:
        acc.push(s)
    for _ in seq:
        acc.pop()
    assert acc.trace_key() == base_key
    assert acc.n == 0 and acc.pos == ()


def test_reversed_trajectory(z_line):
    t = Trajectory(z_line, (1, 2), (0, 1, 3))
    r = walk.reversed_trajectory(t)
    assert r.steps == (-1, -2)
    assert r.positions == (0, -1, -3)
    f2 = GroupDescriptor.free_group(2)
    t2 = Trajectory(f2, ((1,), (2,)), ((), (1,), (1, 2)))
    r2 = walk.reversed_trajectory(t2)
    assert r2.steps == ((-1,), (-2,))
    assert r2.positions[-1] == (-1, -2)


def test_interval_vs_set_storage(z_line):
    small = walk.sample_trajectory(
        StepDistribution.from_pairs(z_line, [(1, 0.5), (-1, 0.5)]), 50, RngStreamSpec(2, 0))
    assert walk.range_of(small).interval is not None
    jumpy = walk.sample_trajectory(
        StepDistribution.from_pairs(z_line, [(2, 0.5), (-1, 0.5)]), 50, RngStreamSpec(2, 0))
    rs = walk.range_of(jumpy)
    assert rs.interval is None and rs.members is not None
    # visited set of a jumpy walk genuinely skips sites
    up = walk.range_of(Trajectory(z_line, (2,), (0, 2)))
    assert up.visited == {0, 2}


def test_trajectory_determinism(sym_z):
    a = walk.sample_trajectory(sym_z, 1000, RngStreamSpec(99, 7))
    b = walk.sample_trajectory(sym_z, 1000, RngStreamSpec(99, 7))
    c = walk.sample_trajectory(sym_z, 1000, RngStreamSpec(99, 8))
    assert a.steps == b.steps
    assert a.steps != c.steps
