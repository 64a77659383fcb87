import math
from collections import Counter

import numpy as np
import pytest

from rangewalk import dist_exact as dx
from rangewalk import estimate_mc as mc
from rangewalk import groups
from rangewalk.errors import ValidationError
from rangewalk.groups import GroupDescriptor, StepDistribution
from rangewalk.streams import RngStreamSpec


def test_plugin_formulas():
    assert mc._entropy_of_counts(Counter({"x": 2, "y": 2}), 4) == pytest.approx(math.log(2))
    est = mc.EntropyEstimate(mc._entropy_of_counts(Counter({"x": 3, "y": 1}), 4),
                             0.0, 4, 2)
    assert est.value == pytest.approx(0.5623351446188083, abs=1e-12)
    assert est.miller_madow == pytest.approx(est.value + 1 / 8, abs=1e-15)


def test_reproducibility_across_workers(sym_z):
    a = mc.mc_entropy(sym_z, 6, 4000, "range+endpoint", seed=5, streams=4, workers=1)
    b = mc.mc_entropy(sym_z, 6, 4000, "range+endpoint", seed=5, streams=4, workers=2)
    assert a == b
    c = mc.escape_rate(sym_z, 500, 4000, seed=5, streams=4, workers=1)
    d = mc.escape_rate(sym_z, 500, 4000, seed=5, streams=4, workers=2)
    assert c == d


def test_kernel_matches_python_reference(test_measures, cyclic_mu):
    spec = RngStreamSpec(77, 2)
    for name, mu in dict(test_measures, cyclic=cyclic_mu).items():
        e = groups.identity_value(mu.group)
        k = mc._hit_times_kernel(mu, [e], 150, spec, 400)
        p = mc._hit_times_python(mu, [e], 150, spec, 400)
        assert np.array_equal(k, p), name


def test_escape_rates_small_scale(sym_z, drift_z, f2_uniform, directed_z2):
    est = mc.escape_rate(drift_z, 2000, 40_000, seed=42, streams=4)
    assert est.estimate == pytest.approx(0.4, abs=0.01)
    est_f2 = mc.escape_rate(f2_uniform, 2000, 40_000, seed=42, streams=4)
    assert est_f2.estimate == pytest.approx(2 / 3, abs=0.01)
    est_d = mc.escape_rate(directed_z2, 5000, 50_000, seed=42, streams=4)
    assert est_d.estimate == 1.0
    est_s = mc.escape_rate(sym_z, 10_000, 20_000, seed=42, streams=4)
    assert est_s.estimate <= 0.05


def test_escape_monotone_in_horizon(sym_z):
    est = mc.escape_rate(sym_z, 4000, 20_000, seed=9, streams=4,
                         grid=(10, 100, 1000, 4000))
    tail = [p for _, p in est.grid]
    assert tail == sorted(tail, reverse=True)
    assert est.grid[-1][1] == est.estimate


def test_exact_escape_paths(drift_z, sym_z, z_line):
    assert mc.escape_rate(drift_z, 10, 1, seed=0, exact=True).estimate == pytest.approx(0.4)
    assert mc.escape_rate(sym_z, 10, 1, seed=0, exact=True).estimate == 0.0
    mirrored = StepDistribution.from_pairs(z_line, [(1, 0.7), (-1, 0.3)])
    assert mc.escape_rate(mirrored, 10, 1, seed=0, exact=True).estimate == pytest.approx(0.4)
    with pytest.raises(ValidationError):
        mc.escape_rate(StepDistribution.from_pairs(z_line, [(2, 0.5), (-3, 0.5)]),
                       10, 1, seed=0, exact=True)


def test_hitting_tail(drift_z, sym_z, directed_z2):
    est = mc.hitting_tail(drift_z, 1, 2000, 40_000, seed=4, streams=4)
    assert est.estimate == pytest.approx(4 / 7, abs=0.01)
    assert mc.hitting_tail(drift_z, 1, 10, 1, seed=0, exact=True).estimate == pytest.approx(4 / 7)
    assert mc.hitting_tail(drift_z, -3, 10, 1, seed=0, exact=True).estimate == 0.0
    est_s = mc.hitting_tail(sym_z, 1, 10_000, 10_000, seed=4, streams=4)
    assert est_s.estimate <= 0.02
    est_d = mc.hitting_tail(directed_z2, (-1, 0), 1000, 5_000, seed=4, streams=4)
    assert est_d.estimate == 1.0


def test_mean_range_rate(drift_z, sym_z, directed_z2):
    mean, half = mc.mean_range_rate(drift_z, 4000, 4000, seed=6, streams=4)
    assert mean == pytest.approx(0.4, abs=0.015)
    mean_s, _ = mc.mean_range_rate(sym_z, 10_000, 400, seed=6, streams=4)
    assert mean_s <= 0.05
    n = 300
    mean_d, half_d = mc.mean_range_rate(directed_z2, n, 200, seed=6, streams=4)
    assert mean_d == pytest.approx((n + 1) / n, abs=1e-12)
    assert half_d == 0.0


def test_mc_entropy_consistency(test_measures):
    for name, mu in test_measures.items():
        exact = dx.entropy(dx.law_range_endpoint(mu, 6))
        est = mc.mc_entropy(mu, 6, 30_000, "range+endpoint", seed=8, streams=6)
        allowed = 3 * (est.stderr + (est.distinct - 1) / (2 * est.samples))
        assert abs(est.value - exact) <= allowed, (name, est.value, exact, allowed)


def test_h_gamma_lower_bound(drift_z, sym_z, directed_z2):
    rep = mc.h_gamma_lower_bound(drift_z, -1, 2000, 30_000, seed=10, streams=4)
    expected = 0.7 * (-math.log(0.7)) * (4 / 7) * 0.4
    assert rep["value"] == pytest.approx(expected, abs=0.004)
    rep_exact = mc.h_gamma_lower_bound(drift_z, -1, 10, 1, seed=0, exact=True)
    assert rep_exact["value"] == pytest.approx(0.05706799103019719, abs=1e-12)
    rep_sym = mc.h_gamma_lower_bound(sym_z, 1, 5000, 10_000, seed=10, streams=4)
    assert rep_sym["value"] <= 0.02  # recurrent: the escape factor collapses
    rep_d = mc.h_gamma_lower_bound(directed_z2, (1, 0), 1000, 10_000, seed=10, streams=4)
    assert rep_d["value"] == pytest.approx(0.5 * math.log(2), abs=1e-12)


def test_h_r_lower_bound_diag(sym_z, drift_z, z_line):
    rep = mc.h_r_lower_bound_diag(sym_z, 1, 4000, 5_000, seed=11, streams=4)
    assert rep["value"] <= 0.02  # recurrent: both tails collapse with the horizon
    rep_d = mc.h_r_lower_bound_diag(drift_z, -1, 4000, 20_000, seed=11, streams=4)
    assert rep_d["value"] >= 0.0
    exact_rate = dx.entropy(dx.law_range_endpoint(drift_z, 8)) / 8
    assert exact_rate >= rep_d["value"] - rep_d["ci_half_width"] - 1e-9
    jumpy = StepDistribution.from_pairs(z_line, [(-2, 0.65), (3, 0.35)])
    rep_j = mc.h_r_lower_bound_diag(jumpy, 3, 3000, 20_000, seed=11, streams=4)
    assert rep_j["value"] > 0.05  # genuinely positive floor for a two-sided jumper
    with pytest.raises(ValidationError):
        mc.h_r_lower_bound_diag(drift_z, 5, 100, 100, seed=0)


def test_trace_upper_diagnostic(sym_z, f2_uniform):
    v În, _ = None, None
    val_2000, _ = mc.trace_upper_diagnostic(sym_z, 2000, 2000, seed=12, streams=4)
    val_8000, _ = mc.trace_upper_diagnostic(sym_z, 8000, 2000, seed=12, streams=4)
    assert val_8000 <= 0.2
    assert val_8000 < val_2000
    val1, _ = mc.trace_upper_diagnostic(f2_uniform, 1, 2000, seed=12, streams=4)
    assert val1 <= 4 * 2 * math.log(2) + 1e-9


def test_binomial_marginal_check(sym_z, drift_z):
    rep = mc.binomial_marginal_check(sym_z, 20, 50_000, i=1, seed=13, streams=4)
    assert rep["passes"], rep
    rep2 = mc.binomial_marginal_check(drift_z, 12, 50_000, i=2, seed=13, streams=4)
    assert rep2["passes"], rep2
    with pytest.raises(ValidationError):
        mc.binomial_marginal_check(sym_z, 5, 100, i=3, seed=0)


def test_step_counts_sum(sym_z, drift_z):
    assert mc.sum_step_counts_is_n(sym_z, 17, 500, seed=14)
    assert mc.sum_step_counts_is_n(drift_z, 9, 500, seed=14)
