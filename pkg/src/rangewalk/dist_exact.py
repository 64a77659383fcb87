"""Exact finite-n laws of (range, endpoint) and trace digraphs, their
entropies, and the finite-n inequality checks.

Two exact engines are provided and cross-validated:

* path enumeration: one depth-first sweep over all |supp|^n step sequences,
  merging leaves by canonical outcome key (works for every group; on free
  groups large n is delegated to the compiled enumerator);
* state-merging dynamic programming over (range, endpoint) states, which
  reaches far larger n on the integer line where ranges are intervals.

All entropies are in nats.  In double mode probabilities carry relative
errors of order n * 2^-52; rational mode (available when the measure was
built from exact probabilities) keeps law tables exact and rounds only when
the final entropy is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import groups, trace_codec, walk
from .errors import (
    InternalConsistencyError,
    ResourceLimitError,
    ValidationError,
)
from .groups import GroupEnumeration, StepDistribution
from .walk import Trajectory, WalkAccumulator

DEFAULT_MAX_OUTCOMES = 10_000_000
DEFAULT_MAX_PATHS = 40_000_000

TARGETS = ("range", "range+endpoint", "trace", "trace+endpoint")


@dataclass
class LawTable:
    """Outcome -> probability map for one exact law.

    Small laws are held as a dict keyed by canonical outcome keys; the large
    fingerprint-merged free-group laws are held as a bare probability array
    (``entries`` is then None).
    """

    kind: str
    n: int
    mode: str  # "double" | "rational"
    entries: dict | None
    probs_array: np.ndarray | None = None

    @property
    def outcome_count(self) -> int:
        if self.entries is not None:
            return len(self.entries)
        return len(self.probs_array)

    def probabilities(self) -> np.ndarray:
        if self.entries is not None:
            return np.array([float(p) for p in self.entries.values()], dtype=np.float64)
        return self.probs_array

    def total_mass(self):
        if self.mode == "rational" and self.entries is not None:
            return sum(self.entries.values())
        return float(np.sum(self.probabilities()))

    def prob_of(self, key) -> float:
        if self.entries is None:
            raise InternalConsistencyError("fingerprint-backed laws do not support key lookup")
        return float(self.entries.get(key, 0.0))


def entropy(law) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0."""
    if isinstance(law, LawTable):
        if law.entries is not None:
            h = -math.fsum(
                float(p) * math.log(float(p)) for p in law.entries.values() if p > 0
            )
        else:
            p = law.probs_array
            h = float(-np.dot(p, np.log(p)))
    elif isinstance(law, dict):
        h = -math.fsum(float(p) * math.log(float(p)) for p in law.values() if p > 0)
    else:
        p = np.asarray(law, dtype=np.float64)
        p = p[p > 0]
        h = float(-np.dot(p, np.log(p)))
    return h + 0.0


# ---------------------------------------------------------------------------
# engine: generic path enumeration


def _step_probs(mu: StepDistribution, mode: str):
    if mode == "rational":
        if mu.fractions is None:
            raise ValidationError(
                "rational mode needs a measure built from exact probabilities"
            )
        return mu.fractions
    return mu.probs


def enumerate_paths(mu: StepDistribution, n: int, leaf, mode: str = "double",
                    max_paths: int = DEFAULT_MAX_PATHS) -> None:
    """Drive ``leaf(acc, prob)`` over every length-n step sequence.

    ``acc`` is a live WalkAccumulator positioned at the leaf; the callback
    must not keep references to its mutable internals.
    """
    s = mu.support_size
    total = s ** n
    if total > max_paths:
        raise ResourceLimitError("path_count", max_paths, total)
    probs = _step_probs(mu, mode)
    values = mu.values
    acc = WalkAccumulator(mu.group, interval=groups.interval_ranges(mu))
    one = Fraction(1) if mode == "rational" else 1.0
    prob_stack = [one] * (n + 1)
    if n == 0:
        leaf(acc, one)
        return
    choice = [0] * (n + 1)
    d = 0
    while True:
        if d == n or choice[d] == s:
            if d == n:
                leaf(acc, prob_stack[d])
            d -= 1
            if d < 0:
                break
            acc.pop()
            choice[d] += 1
            continue
        k = choice[d]
        acc.push(values[k])
        prob_stack[d + 1] = prob_stack[d] * probs[k]
        d += 1
        choice[d] = 0


def _paths_laws(mu, n, targets, mode, max_paths, enum=None):
    """One enumeration pass collecting law dicts for every requested target."""
    out = {t: {} for t in targets}
    want_codec = "trace_codec_key" in targets

    def leaf(acc: WalkAccumulator, p):
        if "range" in out or "range+endpoint" in out:
            rk = acc.range_key()
            if "range" in out:
                d = out["range"]
                d[rk] = d.get(rk, 0) + p
            if "range+endpoint" in out:
                d = out["range+endpoint"]
                k = (rk, acc.pos)
                d[k] = d.get(k, 0) + p
        if "trace" in out or "trace+endpoint" in out or want_codec:
            tk = acc.trace_key()
            if "trace" in out:
                d = out["trace"]
                d[tk] = d.get(tk, 0) + p
            if "trace+endpoint" in out:
                d = out["trace+endpoint"]
                k = (tk, acc.pos)
                d[k] = d.get(k, 0) + p
            if want_codec:
                key = trace_codec.canonical_key(acc.trace_digraph(), enum)
                d = out["trace_codec_key"]
                d[key] = d.get(key, 0) + p

    enumerate_paths(mu, n, leaf, mode, max_paths)
    return out


# ---------------------------------------------------------------------------
# engine: (range, endpoint) dynamic programming


def range_dp(mu: StepDistribution, n: int, mode: str = "double",
             max_states: int = DEFAULT_MAX_OUTCOMES) -> dict:
    """Exact law of (R_n, S_n) by per-step state merging.

    Returns a dict keyed by (range_key, endpoint).  Integer-line states are
    (lo, hi) intervals, which keeps the state space polynomial in n there.
    """
    sweep = list(range_dp_sweep(mu, n, mode, max_states, yield_each=False))
    return sweep[-1][1]


def range_dp_sweep(mu: StepDistribution, n_max: int, mode: str = "double",
                   max_states: int = DEFAULT_MAX_OUTCOMES, yield_each: bool = True):
    """Yield (n, law_dict) for n = 0..n_max from one incremental DP sweep."""
    desc = mu.group
    is_z = groups.interval_ranges(mu)
    probs = _step_probs(mu, mode)
    values = mu.values
    e = groups.identity_value(desc)
    if is_z:
        states = {(0, 0, 0): Fraction(1) if mode == "rational" else 1.0}
        to_key = lambda st: ((st[0], st[1]), st[2])
    else:
        states = {(frozenset((e,)), e): Fraction(1) if mode == "rational" else 1.0}
        skey = lambda v: groups.sort_key(desc, v)
        to_key = lambda st: (tuple(sorted(st[0], key=skey)), st[1])
    for n in range(n_max + 1):
        if yield_each or n == n_max:
            yield n, {to_key(st): p for st, p in states.items()}
        if n == n_max:
            return
        new: dict = {}
        if is_z:
            for (lo, hi, pos), p in states.items():
                for v, pv in zip(values, probs):
                    q = pos + v
                    nk = (min(lo, q), max(hi, q), q)
                    if nk in new:
                        new[nk] += p * pv
                    else:
                        new[nk] = p * pv
        else:
            for (members, pos), p in states.items():
                for v, pv in zip(values, probs):
                    q = groups.mul_values(desc, pos, v)
                    nk = (members | {q}, q) if q not in members else (members, q)
                    if nk in new:
                        new[nk] += p * pv
                    else:
                        new[nk] = p * pv
        if len(new) > max_states:
            raise ResourceLimitError("dp_state_count", max_states, len(new))
        states = new


# ---------------------------------------------------------------------------
# public law constructors


def _use_free_kernel(mu: StepDistribution, n: int, mode: str) -> bool:
    return (mu.group.kind == "free" and mode == "double"
            and mu.support_size ** n > 200_000)


def law_range_endpoint(mu: StepDistribution, n: int, mode: str = "double",
                       engine: str = "auto",
                       max_outcomes: int = DEFAULT_MAX_OUTCOMES) -> LawTable:
    """Exact law of (R_n, S_n), keyed (range_key, endpoint)."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if engine == "auto":
        engine = "kernel" if _use_free_kernel(mu, n, mode) else "dp"
    if engine == "kernel":
        from . import _freelaws

        rec = _freelaws.enumerate_records(mu, n, want_trace=False)
        probs = _freelaws.merged_probs(rec, with_endpoint=True)
        if len(probs) > max_outcomes:
            raise ResourceLimitError("law_outcomes", max_outcomes, len(probs))
        return LawTable("range+endpoint", n, mode, None, probs)
    if engine == "dp":
        entries = range_dp(mu, n, mode, max_outcomes)
    elif engine == "enumerate":
        entries = _paths_laws(mu, n, ("range+endpoint",), mode, DEFAULT_MAX_PATHS)[
            "range+endpoint"
        ]
    else:
        raise ValidationError(f"unknown engine {engine!r}")
    if len(entries) > max_outcomes:
        raise ResourceLimitError("law_outcomes", max_outcomes, len(entries))
    return LawTable("range+endpoint", n, mode, entries)


def marginal_range(law: LawTable) -> LawTable:
    """Collapse a (range, endpoint) law to the law of the range alone."""
    if law.entries is None:
        raise InternalConsistencyError("marginalizing needs a dict-backed law")
    out: dict = {}
    for (rk, _end), p in law.entries.items():
        out[rk] = out.get(rk, 0) + p
    return LawTable("range", law.n, law.mode, out)


def law_range(mu: StepDistribution, n: int, mode: str = "double",
              max_outcomes: int = DEFAULT_MAX_OUTCOMES) -> LawTable:
    if _use_free_kernel(mu, n, mode):
        from . import _freelaws

        rec = _freelaws.enumerate_records(mu, n, want_trace=False)
        probs = _freelaws.merged_probs(rec, with_endpoint=False)
        return LawTable("range", n, mode, None, probs)
    return marginal_range(law_range_endpoint(mu, n, mode, max_outcomes=max_outcomes))


def law_trace(mu: StepDistribution, n: int, with_endpoint: bool = False,
              mode: str = "double", key: str = "structural",
              max_outcomes: int = DEFAULT_MAX_OUTCOMES,
              max_paths: int = DEFAULT_MAX_PATHS) -> LawTable:
    """Exact law of the trace digraph (optionally joint with the endpoint) by
    path enumeration merged on canonical keys.

    ``key="codec"`` merges on the width-first byte code instead of the
    structural key; the two partitions coincide, which is itself a tested
    invariant.
    """
    if n < 0:
        raise ValidationError("n must be >= 0")
    kind = "trace+endpoint" if with_endpoint else "trace"
    if _use_free_kernel(mu, n, mode):
        from . import _freelaws

        rec = _freelaws.enumerate_records(mu, n, want_trace=True, max_paths=max_paths)
        probs = _freelaws.merged_probs(rec, with_endpoint=with_endpoint)
        if len(probs) > max_outcomes:
            raise ResourceLimitError("law_outcomes", max_outcomes, len(probs))
        return LawTable(kind, n, mode, None, probs)
    if key == "codec":
        if with_endpoint:
            raise ValidationError("codec keys cover the digraph alone")
        enum = GroupEnumeration(mu.group)
        entries = _paths_laws(mu, n, ("trace_codec_key",), mode, max_paths, enum)[
            "trace_codec_key"
        ]
    else:
        entries = _paths_laws(mu, n, (kind,), mode, max_paths)[kind]
    if len(entries) > max_outcomes:
        raise ResourceLimitError("law_outcomes", max_outcomes, len(entries))
    return LawTable(kind, n, mode, entries)


# ---------------------------------------------------------------------------
# entropy sequences and their checks


@dataclass
class EntropySequence:
    """Per-n entropies (nats) of the four tracked laws, n = 0..n_max."""

    mu: StepDistribution
    n_max: int
    H_R: list = field(default_factory=list)
    H_RS: list = field(default_factory=list)
    H_G: list = field(default_factory=list)
    H_GS: list = field(default_factory=list)

    @property
    def h_proxy(self) -> float | None:
        """min_n H(R_n,S_n)/n: an upper proxy for the average range entropy.

        The subadditive limit equals the infimum over n, so this finite-n
        value always dominates the limit; no convergence rate is claimed.
        """
        vals = [self.H_RS[n] / n for n in range(1, len(self.H_RS)) if self.H_RS[n] is not None]
        return min(vals) if vals else None

    def track(self, name: str) -> list:
        return {"range": self.H_R, "range+endpoint": self.H_RS,
                "trace": self.H_G, "trace+endpoint": self.H_GS}[name]

    def rows(self):
        for n in range(self.n_max + 1):
            yield (n, self.H_R[n] if n < len(self.H_R) else None,
                   self.H_RS[n] if n < len(self.H_RS) else None,
                   self.H_G[n] if n < len(self.H_G) else None,
                   self.H_GS[n] if n < len(self.H_GS) else None)


def entropy_sequence(mu: StepDistribution, n_max: int, targets=TARGETS,
                     mode: str = "double",
                     max_outcomes: int = DEFAULT_MAX_OUTCOMES,
                     max_paths: int = DEFAULT_MAX_PATHS) -> EntropySequence:
    """Exact entropies of the requested laws for every n up to n_max."""
    seq = EntropySequence(mu, n_max)
    want_r = "range" in targets
    want_rs = "range+endpoint" in targets
    want_g = "trace" in targets
    want_gs = "trace+endpoint" in targets
    use_kernel = _use_free_kernel(mu, n_max, mode)

    if (want_r or want_rs) and not use_kernel:
        for n, law in range_dp_sweep(mu, n_max, mode, max_outcomes):
            if want_rs:
                seq.H_RS.append(entropy(law))
            if want_r:
                merged: dict = {}
                for (rk, _e), p in law.items():
                    merged[rk] = merged.get(rk, 0) + p
                seq.H_R.append(entropy(merged))

    for n in range(n_max + 1):
        if use_kernel and (want_r or want_rs):
            if n == 0:
                if want_r:
                    seq.H_R.append(0.0)
                if want_rs:
                    seq.H_RS.append(0.0)
            else:
                from . import _freelaws

                rec = _freelaws.enumerate_records(mu, n, want_trace=False, max_paths=max_paths)
                joint, _starts, marginal = _freelaws.conditional_groups(rec)
                if want_rs:
                    seq.H_RS.append(entropy(joint))
                if want_r:
                    seq.H_R.append(entropy(marginal))
        if want_g or want_gs:
            if use_kernel and n > 0:
                from . import _freelaws

                rec = _freelaws.enumerate_records(mu, n, want_trace=True, max_paths=max_paths)
                joint, _starts, marginal = _freelaws.conditional_groups(rec)
                if want_gs:
                    seq.H_GS.append(entropy(joint))
                if want_g:
                    seq.H_G.append(entropy(marginal))
            else:
                kinds = [k for k, w in (("trace", want_g), ("trace+endpoint", want_gs)) if w]
                laws = _paths_laws(mu, n, tuple(kinds), mode, max_paths)
                if want_g:
                    seq.H_G.append(entropy(laws["trace"]))
                if want_gs:
                    seq.H_GS.append(entropy(laws["trace+endpoint"]))
    return seq


@dataclass
class SubadditivityReport:
    n_max: int
    tolerance: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_subadditivity(seq: EntropySequence, tolerance: float = 1e-9) -> SubadditivityReport:
    """Check H_{n+m} <= H_n + H_m on the (R,S) and (trace,S) tracks for every
    split with n+m within the computed window."""
    violations = []
    for name, track in (("range+endpoint", seq.H_RS), ("trace+endpoint", seq.H_GS)):
        if not track:
            continue
        top = len(track) - 1
        for n in range(1, top + 1):
            for m in range(n, top - n + 1):
                excess = track[n + m] - track[n] - track[m]
                if excess > tolerance:
                    violations.append((name, n, m, excess))
    return SubadditivityReport(seq.n_max, tolerance, violations)


def lemma31_bound(p, alpha: float) -> tuple[float, float]:
    """lhs = sum p_i ln^alpha(1/p_i) and its proven ceiling
    (alpha v ln n)^alpha + (alpha-1)^alpha, for a positive probability vector."""
    if alpha < 1:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValidationError("p must be a nonempty probability vector")
    if np.any(arr <= 0):
        raise ValidationError("entries must be strictly positive")
    if abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValidationError(f"entries sum to {arr.sum()}, expected 1")
    lhs = float(np.sum(arr * np.log(1.0 / arr) ** alpha))
    n = len(arr)
    rhs = max(alpha, math.log(n)) ** alpha + (alpha - 1) ** alpha
    return lhs, rhs


@dataclass
class ConditionalEndpointReport:
    n: int
    h_conditional: float
    h_conditional_bound: float
    max_sq_log_moment: float
    sq_log_moment_bound: float

    @property
    def ok(self) -> bool:
        return (self.h_conditional <= self.h_conditional_bound + 1e-9
                and self.max_sq_log_moment <= self.sq_log_moment_bound + 1e-9)


def conditional_endpoint_diagnostics(mu: StepDistribution, n: int,
                                     mode: str = "double") -> ConditionalEndpointReport:
    """Verify H(S_n | R_n) <= ln(n+1) and, for every range value A,
    sum_x P(S_n=x | A) ln^2 P(S_n=x | A) <= ln^2(n+1) + 5."""
    if _use_free_kernel(mu, n, mode):
        from . import _freelaws

        rec = _freelaws.enumerate_records(mu, n, want_trace=False)
        probs, outer_starts, range_probs = _freelaws.conditional_groups(rec)
        cond = probs / np.repeat(range_probs, np.diff(np.append(outer_starts, len(probs))))
        h_cond = float(-np.dot(probs, np.log(cond)))
        per_outcome = probs * np.log(cond) ** 2
        sums = np.add.reduceat(per_outcome, outer_starts) / range_probs
        max_moment = float(sums.max())
    else:
        law = law_range_endpoint(mu, n, mode)
        by_range: dict = {}
        for (rk, end), p in law.entries.items():
            by_range.setdefault(rk, []).append(float(p))
        h_cond = 0.0
        max_moment = 0.0
        for probs_a in by_range.values():
            pa = math.fsum(probs_a)
            h_cond += math.fsum(-p * math.log(p / pa) for p in probs_a)
            m = math.fsum((p / pa) * math.log(p / pa) ** 2 for p in probs_a)
            max_moment = max(max_moment, m)
    return ConditionalEndpointReport(
        n, h_cond, math.log(n + 1), max_moment, math.log(n + 1) ** 2 + 5.0
    )


@dataclass
class BoundaryBoundReport:
    n: int
    g: object
    mean_boundary: float
    bound: float
    h_range: float

    @property
    def ok(self) -> bool:
        return self.h_range >= self.bound - 1e-9


def boundary_lower_bound(mu: StepDistribution, n: int, g,
                         mode: str = "double") -> BoundaryBoundReport:
    """Exact E|{x in R_n : x g not in R_n}| and the induced entropy floor
    -(E - 1) ln(1 - mu(g)) <= H(R_n)."""
    if isinstance(g, groups.GroupElement):
        g = g.value
    pg = mu.prob_of(g)
    if not 0.0 < pg < 1.0:
        raise ValidationError("g must lie in the support with mu(g) strictly inside (0,1)")
    if g == groups.identity_value(mu.group):
        raise ValidationError("g must differ from the identity")
    desc = mu.group
    if _use_free_kernel(mu, n, mode):
        from . import _freelaws

        rec = _freelaws.enumerate_records(mu, n, want_trace=False, boundary=g)
        mean_bnd = _freelaws.boundary_expectation(rec)
        h_range = entropy(_freelaws.merged_probs(rec, False))
    else:
        law = marginal_range(law_range_endpoint(mu, n, mode))
        h_range = entropy(law)
        interval = groups.interval_ranges(mu)
        mean_bnd = 0.0
        for rk, p in law.entries.items():
            if interval:
                lo, hi = rk
                size = hi - lo + 1
                cnt = min(abs(g), size)
            else:
                members = set(rk)
                cnt = sum(1 for x in rk if groups.mul_values(desc, x, g) not in members)
            mean_bnd += float(p) * cnt
    bound = -(mean_bnd - 1.0) * math.log1p(-pg)
    return BoundaryBoundReport(n, g, mean_bnd, bound, h_range)


def aep_samples(mu: StepDistribution, n: int, law: LawTable,
                trajectories) -> list[float]:
    """Per-trajectory values of -ln q_n(R_n, S_n) / n against the exact law."""
    if law.entries is None:
        raise ValidationError("aep lookup needs a dict-backed (range, endpoint) law")
    if law.kind != "range+endpoint" or law.n != n:
        raise ValidationError("law must be the (R_n, S_n) law at the same n")
    out = []
    for traj in trajectories:
        if traj.n != n:
            raise ValidationError(f"trajectory has {traj.n} steps, law is at n={n}")
        if n == 0:
            out.append(0.0)
            continue
        state = walk.range_of(traj)
        q = law.entries.get(state.key())
        if q is None:
            raise InternalConsistencyError(
                "sampled outcome missing from the exact law at the same n"
            )
        out.append(-math.log(float(q)) / n)
    return out


def reversal_law_check(mu: StepDistribution, n: int, mode: str = "double") -> float:
    """Total-variation distance between the law of S_n^{-1} R_n and the range
    law of the inverted-step walk; identically zero in exact arithmetic."""
    desc = mu.group
    interval = groups.interval_ranges(mu)

    translated: dict = {}

    def leaf(acc: WalkAccumulator, p):
        if interval:
            key = (acc.lo - acc.pos, acc.hi - acc.pos)
        else:
            inv = groups.inverse_value(desc, acc.pos)
            members = [groups.mul_values(desc, inv, x) for x in acc.counts]
            key = tuple(sorted(members, key=lambda v: groups.sort_key(desc, v)))
        translated[key] = translated.get(key, 0) + p

    enumerate_paths(mu, n, leaf, mode)
    tilde = law_range(groups.reversed_measure(mu), n, mode, max_outcomes=DEFAULT_MAX_OUTCOMES)
    keys = set(translated) | set(tilde.entries)
    tv = math.fsum(
        abs(float(translated.get(k, 0)) - float(tilde.entries.get(k, 0))) for k in keys
    )
    return 0.5 * tv


def total_variation(law_a: dict, law_b: dict) -> float:
    keys = set(law_a) | set(law_b)
    return 0.5 * math.fsum(abs(float(law_a.get(k, 0)) - float(law_b.get(k, 0))) for k in keys)
