"""Seeded, reproducible Monte Carlo estimation of entropies, escape rates,
hitting tails, and trace diagnostics.

Every estimator derives one substream per (master seed, stream index) and one
sub-state per sample inside a stream, so results are bit-identical for a
fixed (seed, streams, samples) layout regardless of worker scheduling, and
early-exit optimizations in the kernels cannot shift later samples.

Escape and hitting probabilities are reported at an explicit truncation
horizon; truncated tails overestimate the infinite-time quantities and are
non-increasing in the horizon.  For skip-free integer walks closed forms are
available as an exact path.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, groups, walk
from .errors import UnsupportedGroupError, ValidationError
from .groups import StepDistribution
from .streams import RngStreamSpec, Stream, stream_layout
from .walk import WalkAccumulator

Z95 = 1.959963984540054


@dataclass(frozen=True)
class EntropyEstimate:
    """Plug-in entropy of canonical-key counts, in nats."""

    value: float
    stderr: float
    samples: int
    distinct: int
    method: str = "plug-in"

    @property
    def miller_madow(self) -> float:
        """Bias-corrected value: plug-in + (K-1)/(2N)."""
        return self.value + (self.distinct - 1) / (2 * self.samples)


@dataclass(frozen=True)
class HittingEstimate:
    """Truncated probability estimate with binomial CI.

    ``estimate`` is P(no hit within ``horizon``) for tail kinds, which is
    non-increasing in the horizon and converges to the infinite-time tail.
    """

    estimate: float
    horizon: int
    samples: int
    ci_half_width: float
    kind: str
    monotone: str = "non-increasing in horizon"
    grid: tuple = ()
    exact: bool = False


def _binom_ci(p: float, n: int) -> float:
    return Z95 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


# ---------------------------------------------------------------------------
# kernel dispatch


def _mc_tables(mu: StepDistribution):
    cum = mu.cumulative()
    return cum


def _hit_times_kernel(mu: StepDistribution, targets, horizon: int,
                      spec: RngStreamSpec, count: int) -> np.ndarray:
    desc = mu.group
    cum = _mc_tables(mu)
    out = np.empty(count, dtype=np.int64)
    state0 = np.uint64(spec.state0())
    if desc.kind == "Z":
        vals = np.asarray(mu.values, dtype=np.int64)
        tarr = np.asarray(targets, dtype=np.int64)
        max_abs = int(np.abs(vals).max())
        monotone = 1 if all(v > 0 for v in mu.values) else (-1 if all(v < 0 for v in mu.values) else 0)
        _kernels.z_hit_times(state0, count, horizon, cum, vals, tarr, max_abs, monotone, out)
    elif desc.kind == "Zd":
        vecs = np.asarray(mu.values, dtype=np.int64)
        tarr = np.asarray(targets, dtype=np.int64).reshape(len(targets), desc.d)
        max_abs = int(np.abs(vecs).max())
        w = groups.positive_grading(mu)
        if w is not None:
            grades = np.array([groups.grade_value(desc, w, v) for v in mu.values], dtype=np.int64)
            tg = max(groups.grade_value(desc, w, tuple(t)) for t in targets)
            nonneg = 1
        else:
            grades = np.zeros(len(mu.values), dtype=np.int64)
            tg = 0
            nonneg = 0
        _kernels.lattice_hit_times(state0, count, horizon, cum, vecs, tarr,
                                   max_abs, grades, nonneg, tg, out)
    elif desc.kind == "free":
        if len(targets) != 1:
            raise UnsupportedGroupError("free-group kernels hit a single target word")
        flat, offsets = [], [0]
        for wrd in mu.values:
            flat.extend(wrd)
            offsets.append(len(flat))
        letters = np.asarray(flat, dtype=np.int64)
        offs = np.asarray(offsets, dtype=np.int64)
        target = np.asarray(targets[0], dtype=np.int64)
        max_len = max(offsets[i + 1] - offsets[i] for i in range(len(mu.values)))
        _kernels.free_hit_times(state0, count, horizon, cum, letters, offs, target, max_len, out)
    else:
        if len(targets) != 1:
            raise UnsupportedGroupError("cyclic kernels hit a single target")
        vecs = np.asarray(mu.values, dtype=np.int64)
        moduli = np.asarray(mu.group.moduli, dtype=np.int64)
        target = np.asarray(targets[0], dtype=np.int64)
        _kernels.cyclic_hit_times(state0, count, horizon, cum, vecs, moduli, target, out)
    return out


def _hit_times_python(mu: StepDistribution, targets, horizon: int,
                      spec: RngStreamSpec, count: int) -> np.ndarray:
    """Reference implementation with the kernels' exact stream and early-exit
    semantics; used to validate the compiled paths."""
    desc = mu.group
    cum = list(_mc_tables(mu))
    values = mu.values
    out = np.empty(count, dtype=np.int64)
    targets = [tuple(t) if isinstance(t, (list, tuple)) and desc.kind != "Z" else t for t in targets]
    if desc.kind == "Z":
        max_abs = max(abs(v) for v in values)
        monotone = 1 if all(v > 0 for v in values) else (-1 if all(v < 0 for v in values) else 0)
        t_lo, t_hi = min(targets), max(targets)
    for j in range(count):
        st = Stream(spec.sample_state(j))
        pos = groups.identity_value(desc)
        hit = horizon + 1
        for t in range(1, horizon + 1):
            pos = groups.mul_values(desc, pos, values[st.next_index(cum)])
            if pos in targets:
                hit = t
                break
            if desc.kind == "Z":
                if monotone == 1 and pos > t_hi:
                    break
                if monotone == -1 and pos < t_lo:
                    break
                if min(abs(pos - x) for x in targets) > (horizon - t) * max_abs:
                    break
        out[j] = hit
    return out


def _tail_from_times(times_by_stream, horizon: int, samples: int, kind: str,
                     grid=()) -> HittingEstimate:
    no_hit = sum(int(np.count_nonzero(ts > horizon)) for ts in times_by_stream)
    p = no_hit / samples
    curve = []
    for h in grid:
        cnt = sum(int(np.count_nonzero(ts > h)) for ts in times_by_stream)
        curve.append((h, cnt / samples))
    return HittingEstimate(p, horizon, samples, _binom_ci(p, samples), kind, grid=tuple(curve))


def _run_streams(fn, layout, workers: int):
    if workers <= 1 or len(layout) <= 1:
        return [fn(spec, cnt) for spec, cnt in layout]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, spec, cnt) for spec, cnt in layout]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# estimators


def escape_rate(mu: StepDistribution, horizon: int, samples: int, seed: int,
                streams: int = 4, workers: int = 1, grid=(),
                exact: bool = False, force_python: bool = False) -> HittingEstimate:
    """P(S_k != e for all 1 <= k <= horizon), an upper bound for the escape
    rate, non-increasing in the horizon."""
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    if exact:
        return _exact_escape(mu, horizon)
    e = groups.identity_value(mu.group)
    layout = stream_layout(seed, streams, samples)
    sim = _hit_times_python if force_python else _hit_times_kernel
    times = _run_streams(lambda sp, c: sim(mu, [e], horizon, sp, c), layout, workers)
    return _tail_from_times(times, horizon, samples, "escape", grid)


def hitting_tail(mu: StepDistribution, x, horizon: int, samples: int, seed: int,
                 streams: int = 4, workers: int = 1, grid=(),
                 exact: bool = False, force_python: bool = False) -> HittingEstimate:
    """Truncated tail P(tau_x > horizon), converging to P(tau_x = infinity)."""
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    if isinstance(x, groups.GroupElement):
        x = x.value
    groups.validate_value(mu.group, x)
    if exact:
        return _exact_hitting_tail(mu, x, horizon)
    layout = stream_layout(seed, streams, samples)
    sim = _hit_times_python if force_python else _hit_times_kernel
    times = _run_streams(lambda sp, c: sim(mu, [x], horizon, sp, c), layout, workers)
    return _tail_from_times(times, horizon, samples, "hitting-tail", grid)


def _skipfree_orientation(mu: StepDistribution) -> int:
    """+1 when the walk is skip-free to the left (only negative step is -1),
    -1 for the mirrored case, 0 otherwise."""
    if mu.group.kind != "Z":
        return 0
    if min(mu.values) == -1:
        return 1
    if max(mu.values) == 1:
        return -1
    return 0


def _exact_escape(mu: StepDistribution, horizon: int) -> HittingEstimate:
    """gamma for skip-free Z walks: |mean| when the drift points at the
    skip-free side (the ladder identity gamma = q * f_0), 0 at zero drift."""
    orient = _skipfree_orientation(mu)
    if orient == 0:
        raise ValidationError("exact escape rates cover skip-free integer walks only")
    mean = math.fsum(v * p for v, p in zip(mu.values, mu.probs))
    if mean == 0.0:
        gamma = 0.0
    elif mean * orient < 0:
        gamma = abs(mean)
    else:
        raise ValidationError(
            "exact escape needs the drift to point at the skip-free side"
        )
    return HittingEstimate(gamma, horizon, 0, 0.0, "escape", exact=True)


def _exact_hitting_tail(mu: StepDistribution, x: int, horizon: int) -> HittingEstimate:
    """P(tau_x = infinity) for skip-free Z walks via the supremum law."""
    from . import ladder

    orient = _skipfree_orientation(mu)
    if orient == 0:
        raise ValidationError("exact hitting tails cover skip-free integer walks only")
    work = mu if orient == 1 else groups.reversed_measure(mu)
    target = x if orient == 1 else -x
    mean = math.fsum(v * p for v, p in zip(work.values, work.probs))
    if mean >= 0:
        raise ValidationError("exact hitting tails need strictly negative drift")
    sf = ladder.SkipFreeMeasure.from_step_distribution(work)
    if target < 0:
        p_inf = 0.0  # the descent is skip-free, every lower level is hit
    elif target == 0:
        p_inf = -mean  # escape rate q*f0
    else:
        # reaching level x means the all-time supremum is >= x (overshoots
        # still hit x on the skip-free way down), so the tail is P(eta < x)
        law = ladder.supremum_law(sf, target - 1)
        p_inf = float(np.sum(law.f))
    return HittingEstimate(p_inf, horizon, 0, 0.0, "hitting-tail", exact=True)


def mean_range_rate(mu: StepDistribution, n: int, samples: int, seed: int,
                    streams: int = 4, workers: int = 1):
    """Sample mean of |R_n| / n with a normal CI."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    layout = stream_layout(seed, streams, samples)
    desc = mu.group
    if groups.interval_ranges(mu):
        cum = _mc_tables(mu)
        vals = np.asarray(mu.values, dtype=np.int64)

        def run(spec, cnt):
            sizes = np.empty(cnt, dtype=np.int64)
            counts = np.zeros((cnt, mu.support_size), dtype=np.int64)
            _kernels.z_range_counts(np.uint64(spec.state0()), cnt, n, cum, vals, sizes, counts)
            return sizes

        chunks = _run_streams(run, layout, workers)
    else:
        def run(spec, cnt):
            cum = list(mu.cumulative())
            out = np.empty(cnt, dtype=np.int64)
            for j in range(cnt):
                st = Stream(spec.sample_state(j))
                acc = WalkAccumulator(desc)
                for _ in range(n):
                    acc.push(mu.values[st.next_index(cum)])
                out[j] = acc.range_size()
            return out

        chunks = _run_streams(run, layout, workers)
    sizes = np.concatenate(chunks).astype(np.float64) / n
    mean = float(sizes.mean())
    half = float(Z95 * sizes.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, half


def mc_entropy(mu: StepDistribution, n: int, samples: int, target: str, seed: int,
               streams: int = 4, workers: int = 1) -> EntropyEstimate:
    """Plug-in entropy of canonical-key counts over sampled walks."""
    if target not in ("range", "range+endpoint", "trace", "trace+endpoint"):
        raise ValidationError(f"unknown target {target!r}")
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    layout = stream_layout(seed, streams, samples)
    desc = mu.group
    values = mu.values

    interval = groups.interval_ranges(mu)

    def run(spec, cnt):
        cum = list(mu.cumulative())
        local: Counter = Counter()
        acc = WalkAccumulator(desc, interval=interval)
        for j in range(cnt):
            st = Stream(spec.sample_state(j))
            for _ in range(n):
                acc.push(values[st.next_index(cum)])
            if target == "range":
                key = acc.range_key()
            elif target == "range+endpoint":
                key = (acc.range_key(), acc.pos)
            elif target == "trace":
                key = acc.trace_key()
            else:
                key = (acc.trace_key(), acc.pos)
            local[key] += 1
            for _ in range(n):
                acc.pop()
        return local

    per_stream = _run_streams(run, layout, workers)
    merged: Counter = Counter()
    for c in per_stream:
        merged.update(c)
    value = _entropy_of_counts(merged, samples)
    stderr = _jackknife_stderr(per_stream, merged, samples)
    return EntropyEstimate(value, stderr, samples, len(merged))


def _entropy_of_counts(counts, total: int) -> float:
    return math.log(total) - math.fsum(c * math.log(c) for c in counts.values()) / total


def _jackknife_stderr(per_stream, merged, total: int) -> float:
    blocks = [c for c in per_stream if sum(c.values()) > 0]
    B = len(blocks)
    if B < 2:
        return 0.0
    h_minus = []
    for blk in blocks:
        rest = Counter(merged)
        rest.subtract(blk)
        rest = +rest
        m = total - sum(blk.values())
        h_minus.append(_entropy_of_counts(rest, m))
    mean = math.fsum(h_minus) / B
    var = (B - 1) / B * math.fsum((h - mean) ** 2 for h in h_minus)
    return math.sqrt(var)


def h_gamma_lower_bound(mu: StepDistribution, a, horizon: int, samples: int, seed: int,
                        streams: int = 4, workers: int = 1, exact: bool = False):
    """The trace-entropy floor -mu(a) ln mu(a) * P(tau_{a^-1} = inf) * gamma,
    with both probabilities replaced by truncated estimates (each an
    overestimate, so the product overestimates the floor)."""
    if isinstance(a, groups.GroupElement):
        a = a.value
    pa = mu.prob_of(a)
    if not 0.0 < pa < 1.0:
        raise ValidationError("a must lie in the support with mu(a) in (0,1)")
    a_inv = groups.inverse_value(mu.group, a)
    tail = hitting_tail(mu, a_inv, horizon, samples, seed, streams, workers, exact=exact)
    gamma = escape_rate(mu, horizon, samples, seed + 1, streams, workers, exact=exact)
    factor = -pa * math.log(pa)
    value = factor * tail.estimate * gamma.estimate
    ci = factor * (tail.ci_half_width * gamma.estimate + tail.estimate * gamma.ci_half_width)
    return {
        "value": value,
        "ci_half_width": ci,
        "step_term": factor,
        "no_hit_tail": tail,
        "escape": gamma,
        "truncation_bias": "upward (truncated tails overestimate)",
    }


def h_r_lower_bound_diag(mu: StepDistribution, g, horizon: int, samples: int, seed: int,
                         streams: int = 4, workers: int = 1):
    """Soft diagnostic for the range-entropy floor
    -P(tau_g = inf) P(reversed walk avoids {e, g} forever) ln(1 - mu(g));
    both factors are truncated-tail estimates, so the value is biased upward."""
    if isinstance(g, groups.GroupElement):
        g = g.value
    pg = mu.prob_of(g)
    if not 0.0 < pg < 1.0:
        raise ValidationError("g must lie in the support with mu(g) in (0,1)")
    tail_g = hitting_tail(mu, g, horizon, samples, seed, streams, workers)
    rev = groups.reversed_measure(mu)
    e = groups.identity_value(mu.group)
    layout = stream_layout(seed + 1, streams, samples)
    if mu.group.kind in ("Z", "Zd"):
        times = _run_streams(
            lambda sp, c: _hit_times_kernel(rev, [e, g], horizon, sp, c), layout, workers
        )
    else:
        times = _run_streams(
            lambda sp, c: _hit_times_python(rev, [e, g], horizon, sp, c), layout, workers
        )
    avoid = _tail_from_times(times, horizon, samples, "avoid-{e,g}")
    value = -tail_g.estimate * avoid.estimate * math.log1p(-pg)
    ci = -math.log1p(-pg) * (
        tail_g.ci_half_width * avoid.estimate + tail_g.estimate * avoid.ci_half_width
    )
    return {
        "value": value,
        "ci_half_width": ci,
        "tau_g_tail": tail_g,
        "avoid_tail": avoid,
        "truncation_bias": "upward (truncated tails overestimate)",
    }


def trace_upper_diagnostic(mu: StepDistribution, n: int, samples: int, seed: int,
                           streams: int = 4, workers: int = 1):
    """Monte Carlo mean of (1/n) sum_i Y_n^i, the digraph-entropy ceiling
    summands built from per-step-type counts and the range size.

    Terms with a zero count (or range size 1) use their continuous extension,
    value 0."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    layout = stream_layout(seed, streams, samples)
    desc = mu.group
    s = mu.support_size
    if groups.interval_ranges(mu):
        cum = _mc_tables(mu)
        vals = np.asarray(mu.values, dtype=np.int64)

        def run(spec, cnt):
            sizes = np.empty(cnt, dtype=np.int64)
            counts = np.zeros((cnt, s), dtype=np.int64)
            _kernels.z_range_counts(np.uint64(spec.state0()), cnt, n, cum, vals, sizes, counts)
            return sizes, counts

    else:
        def run(spec, cnt):
            cum = list(mu.cumulative())
            sizes = np.empty(cnt, dtype=np.int64)
            counts = np.zeros((cnt, s), dtype=np.int64)
            for j in range(cnt):
                st = Stream(spec.sample_state(j))
                acc = WalkAccumulator(desc)
                for _ in range(n):
                    k = st.next_index(cum)
                    counts[j, k] += 1
                    acc.push(mu.values[k])
                sizes[j] = acc.range_size()
            return sizes, counts

    parts = _run_streams(run, layout, workers)
    sizes = np.concatenate([p[0] for p in parts]).astype(np.float64)
    counts = np.concatenate([p[1] for p in parts]).astype(np.float64)
    r1 = (sizes - 1.0)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        term1 = np.where(counts > 0, counts * np.log1p(np.where(counts > 0, r1 / counts, 0.0)), 0.0)
        term2 = np.where(r1 > 0, r1 * np.log1p(np.where(r1 > 0, counts / r1, 0.0)), 0.0)
    y = (term1 + term2).sum(axis=1) / n
    mean = float(y.mean())
    half = float(Z95 * y.std(ddof=1) / math.sqrt(len(y))) if len(y) > 1 else 0.0
    return mean, half


def binomial_marginal_check(mu: StepDistribution, n: int, samples: int, i: int,
                            seed: int, streams: int = 4, workers: int = 1,
                            significance: float = 1e-3):
    """Chi-square goodness of fit of the i-th step-type count against
    Binomial(n, mu(g_i)); i is an enumeration index of a support element."""
    from scipy import stats

    g = groups.element_at(mu.group, i)
    p = mu.prob_of(g)
    if p <= 0.0:
        raise ValidationError(f"enumeration index {i} is not in the support")
    k = mu.values.index(g)
    layout = stream_layout(seed, streams, samples)
    cum = _mc_tables(mu)

    def run(spec, cnt):
        counts = np.zeros((cnt, mu.support_size), dtype=np.int64)
        _kernels.step_counts(np.uint64(spec.state0()), cnt, n, cum, counts)
        return counts[:, k]

    obs_vals = np.concatenate(_run_streams(run, layout, workers))
    observed = np.bincount(obs_vals, minlength=n + 1).astype(np.float64)
    expected = stats.binom.pmf(np.arange(n + 1), n, p) * samples
    obs_b, exp_b = _pool_bins(observed, expected)
    stat = float(np.sum((obs_b - exp_b) ** 2 / exp_b))
    dof = len(obs_b) - 1
    pvalue = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return {
        "statistic": stat,
        "dof": dof,
        "p_value": pvalue,
        "passes": pvalue > significance,
        "significance": significance,
        "index": i,
        "prob": p,
    }


def _pool_bins(observed, expected, min_expected: float = 5.0):
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 and exp_out:
        obs_out[-1] += o_acc
        exp_out[-1] += e_acc
    return np.asarray(obs_out), np.asarray(exp_out)


def sum_step_counts_is_n(mu: StepDistribution, n: int, samples: int, seed: int) -> bool:
    """Pathwise sanity: the per-type step counts always sum to n."""
    layout = stream_layout(seed, 1, samples)
    cum = _mc_tables(mu)
    for spec, cnt in layout:
        counts = np.zeros((cnt, mu.support_size), dtype=np.int64)
        _kernels.step_counts(np.uint64(spec.state0()), cnt, n, cum, counts)
        if not np.all(counts.sum(axis=1) == n):
            return False
    return True
