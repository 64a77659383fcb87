import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rangewalk import dist_exact as dx
from rangewalk import groups, walk
from rangewalk.errors import ResourceLimitError, ValidationError
from rangewalk.groups import GroupDescriptor, GroupEnumeration, StepDistribution
from rangewalk.streams import RngStreamSpec

LN2 = math.log(2)


def test_entropy_examples():
    assert dx.entropy({k: 0.25 for k in "abcd"}) == pytest.approx(math.log(4), abs=1e-15)
    assert dx.entropy({"a": 0.75, "b": 0.25}) == pytest.approx(0.5623351446188083, abs=1e-12)
    assert dx.entropy({"a": 1.0}) == 0.0


def test_law_range_endpoint_n1(sym_z):
    law = dx.law_range_endpoint(sym_z, 1)
    assert law.entries == {((0, 1), 1): 0.5, ((-1, 0), -1): 0.5}
    assert law.total_mass() == pytest.approx(1.0, abs=1e-15)


def test_h_r3_symmetric(sym_z):
    law = dx.law_range(sym_z, 3)
    expected = (6 / 8) * math.log(8) + (1 / 4) * math.log(4)
    assert dx.entropy(law) == pytest.approx(expected, abs=1e-12)
    # and the table itself: six 1/8 ranges plus one 1/4 range
    probs = sorted(law.entries.values())
    assert probs == pytest.approx([0.125] * 6 + [0.25])


def test_directed_z2_extreme(directed_z2):
    for n in (1, 3, 5):
        rs = dx.law_range_endpoint(directed_z2, n)
        assert dx.entropy(rs) == pytest.approx(n * LN2, abs=1e-12)
        assert dx.entropy(dx.marginal_range(rs)) == pytest.approx(n * LN2, abs=1e-12)


def test_trace_law_examples(sym_z, directed_z2):
    assert dx.entropy(dx.law_trace(sym_z, 0)) == 0.0
    assert dx.law_trace(sym_z, 0).outcome_count == 1
    assert dx.entropy(dx.law_trace(sym_z, 2)) == pytest.approx(math.log(4), abs=1e-12)
    # a never-returning walk distinguishes all paths through its digraph
    assert dx.entropy(dx.law_trace(directed_z2, 4)) == pytest.approx(4 * LN2, abs=1e-12)


def test_dp_equals_enumeration(test_measures, cyclic_mu):
    cases = dict(test_measures, cyclic=cyclic_mu)
    for name, mu in cases.items():
        for n in range(0, 7):
            dp = dx.range_dp(mu, n)
            en = dx._paths_laws(mu, n, ("range+endpoint",), "double", 10 ** 7)[
                "range+endpoint"]
            assert set(dp) == set(en), (name, n)
            for k in dp:
                assert dp[k] == pytest.approx(en[k], abs=1e-13), (name, n)


def test_kernel_matches_python_free(f2_uniform, f2_asymmetric):
    from rangewalk import _freelaws

    for mu in (f2_uniform, f2_asymmetric):
        for n in (1, 3, 6):
            rec = _freelaws.enumerate_records(mu, n, want_trace=False)
            k_probs = np.sort(_freelaws.merged_probs(rec, with_endpoint=True))
            p_law = dx.range_dp(mu, n)
            p_probs = np.sort(np.array(list(p_law.values()), dtype=np.float64))
            assert len(k_probs) == len(p_probs)
            assert np.max(np.abs(k_probs - p_probs)) < 1e-13
            rec_t = _freelaws.enumerate_records(mu, n, want_trace=True)
            k_t = np.sort(_freelaws.merged_probs(rec_t, with_endpoint=True))
            p_t = dx._paths_laws(mu, n, ("trace+endpoint",), "double", 10 ** 7)[
                "trace+endpoint"]
            p_t = np.sort(np.array(list(p_t.values()), dtype=np.float64))
            assert len(k_t) == len(p_t)
            assert np.max(np.abs(k_t - p_t)) < 1e-13


def test_rational_mode_exact(z_line):
    mu = StepDistribution.from_pairs(z_line, [(1, Fraction(1, 2)), (-1, Fraction(1, 2))])
    law = dx.law_range_endpoint(mu, 6, mode="rational")
    assert law.total_mass() == 1
    assert all(isinstance(p, Fraction) for p in law.entries.values())
    with pytest.raises(ValidationError):
        dx.law_range_endpoint(
            StepDistribution.from_pairs(z_line, [(1, 0.5), (-1, 0.5)]), 3, mode="rational")


def test_resource_caps(sym_z):
    with pytest.raises(ResourceLimitError):
        dx.law_range_endpoint(sym_z, 10, max_outcomes=5)
    with pytest.raises(ResourceLimitError):
        dx.law_trace(sym_z, 30, max_paths=1000)


def test_entropy_sequence_and_sandwich(test_measures):
    for name, mu in test_measures.items():
        n_max = 7
        seq = dx.entropy_sequence(mu, n_max)
        h1 = mu.step_entropy()
        for n in range(n_max + 1):
            assert seq.H_R[n] <= seq.H_RS[n] + 1e-12, name
            assert seq.H_RS[n] <= seq.H_R[n] + math.log(n + 1) + 1e-12, name
            assert seq.H_G[n] <= seq.H_GS[n] + 1e-12, name
            assert seq.H_RS[n] <= seq.H_GS[n] + 1e-12, name
            assert seq.H_RS[n] <= n * h1 + 1e-9, name
        assert seq.h_proxy == min(seq.H_RS[n] / n for n in range(1, n_max + 1))


def test_entropy_sequence_directed(directed_z2):
    seq = dx.entropy_sequence(directed_z2, 6, ("range+endpoint",))
    for n in range(1, 7):
        assert seq.H_RS[n] / n == pytest.approx(LN2, abs=1e-12)


def test_subadditivity_check(test_measures):
    for name, mu in test_measures.items():
        seq = dx.entropy_sequence(mu, 6, ("range+endpoint", "trace+endpoint"))
        rep = dx.check_subadditivity(seq)
        assert rep.ok, (name, rep.violations)


def test_subadditivity_equality_cases(sym_z, directed_z2):
    seq = dx.entropy_sequence(sym_z, 2, ("range+endpoint", "trace+endpoint"))
    assert seq.H_RS[2] == pytest.approx(math.log(4), abs=1e-12)
    assert seq.H_RS[2] == pytest.approx(2 * seq.H_RS[1], abs=1e-12)
    seqd = dx.entropy_sequence(directed_z2, 6, ("range+endpoint",))
    for n in range(1, 4):
        for m in range(1, 7 - n):
            assert seqd.H_RS[n + m] == pytest.approx(seqd.H_RS[n] + seqd.H_RS[m], abs=1e-12)


def test_lemma31_examples():
    lhs, rhs = dx.lemma31_bound([0.5, 0.5], 1.0)
    assert lhs == pytest.approx(math.log(2), abs=1e-12)
    assert rhs == pytest.approx(1.0, abs=1e-12)
    assert lhs <= rhs
    lhs, rhs = dx.lemma31_bound([1.0], 2.0)
    assert lhs == 0.0 and lhs <= rhs
    with pytest.raises(ValidationError):
        dx.lemma31_bound([0.5, 0.5], 0.5)
    with pytest.raises(ValidationError):
        dx.lemma31_bound([0.7, 0.7], 1.5)


def test_lemma31_random_sweep():
    rng = np.random.default_rng(31)
    for _ in range(10_000):
        k = int(rng.integers(1, 101))
        p = rng.dirichlet(np.ones(k) * float(rng.uniform(0.2, 3.0)))
        p = np.clip(p, 1e-280, None)
        p = p / p.sum()
        alpha = float(rng.uniform(1.0, 3.0))
        lhs, rhs = dx.lemma31_bound(p, alpha)
        assert lhs <= rhs + 1e-9


@given(st.integers(min_value=1, max_value=40), st.floats(min_value=1.0, max_value=3.0))
@settings(max_examples=100, deadline=None)
def test_lemma31_property(k, alpha):
    p = np.full(k, 1.0 / k)
    lhs, rhs = dx.lemma31_bound(p, alpha)
    assert lhs <= rhs + 1e-9


def test_conditional_endpoint_diagnostics(test_measures, directed_z2, sym_z):
    for name, mu in test_measures.items():
        for n in (0, 2, 5):
            rep = dx.conditional_endpoint_diagnostics(mu, n)
            assert rep.ok, (name, n)
    # the range of a never-returning two-letter walk pins down its endpoint
    rep = dx.conditional_endpoint_diagnostics(directed_z2, 5)
    assert rep.h_conditional == pytest.approx(0.0, abs=1e-12)
    # at n=2 each symmetric-walk range has a unique endpoint
    rep = dx.conditional_endpoint_diagnostics(sym_z, 2)
    assert rep.h_conditional == pytest.approx(0.0, abs=1e-12)


def test_boundary_lower_bound(test_measures, drift_z, directed_z2):
    rep = dx.boundary_lower_bound(drift_z, 8, -1)
    assert rep.ok and rep.h_range > rep.bound
    rep0 = dx.boundary_lower_bound(drift_z, 0, -1)
    assert rep0.mean_boundary == pytest.approx(1.0)
    assert rep0.bound == pytest.approx(0.0, abs=1e-12) and rep0.h_range == 0.0
    repd = dx.boundary_lower_bound(directed_z2, 6, (1, 0))
    assert repd.ok and repd.mean_boundary >= 1.0
    with pytest.raises(ValidationError):
        dx.boundary_lower_bound(drift_z, 3, 5)


def test_aep_samples(directed_z2, sym_z):
    law = dx.law_range_endpoint(directed_z2, 6)
    trajs = [walk.sample_trajectory(directed_z2, 6, RngStreamSpec(2, s)) for s in range(40)]
    vals = dx.aep_samples(directed_z2, 6, law, trajs)
    # every outcome has probability exactly 2^-n here
    assert all(v == pytest.approx(LN2, abs=1e-12) for v in vals)
    law2 = dx.law_range_endpoint(sym_z, 2)
    trajs2 = [walk.sample_trajectory(sym_z, 2, RngStreamSpec(3, s)) for s in range(20)]
    vals2 = dx.aep_samples(sym_z, 2, law2, trajs2)
    assert all(v == pytest.approx(LN2, abs=1e-12) for v in vals2)
    law0 = dx.law_range_endpoint(sym_z, 0)
    assert dx.aep_samples(sym_z, 0, law0,
                          [walk.sample_trajectory(sym_z, 0, RngStreamSpec(1, 0))]) == [0.0]


def test_reversal_law_check(sym_z, drift_z, f2_asymmetric):
    for n in range(0, 7):
        assert dx.reversal_law_check(sym_z, n) <= 1e-12
        assert dx.reversal_law_check(drift_z, n) <= 1e-12
    for n in range(0, 5):
        assert dx.reversal_law_check(f2_asymmetric, n) <= 1e-12


def test_trace_codec_key_law_matches_structural(test_measures, cyclic_mu):
    cases = dict(test_measures, cyclic=cyclic_mu)
    for name, mu in cases.items():
        for n in (0, 2, 4):
            structural = dx.law_trace(mu, n)
            codec = dx.law_trace(mu, n, key="codec")
            assert structural.outcome_count == codec.outcome_count, (name, n)
            assert dx.entropy(structural) == pytest.approx(
                dx.entropy(codec), abs=0.0), (name, n)


def test_law_csv_stability(sym_z):
    law = dx.law_range(sym_z, 3)
    items = sorted((repr(k), p) for k, p in law.entries.items())
    assert len(items) == 7
