"""Exact all-time-supremum law for integer walks whose only negative step is
-1 and whose drift is negative, plus the entropy finiteness analysis of the
limiting visited set (a half-line capped by the supremum).

Infinite upward tails are admitted only through parametric rules with
certified partial sums: a pure power law  p_k = c / k^s  (s > 2) and the
borderline  p_k = c / (k^2 ln^2 k),  whose remainder sums are bracketed by
closed-form integrals.  Everything downstream carries those brackets rather
than bare float estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from . import _kernels, groups
from .errors import (
    NotEscapingError,
    PrecisionError,
    UnknownTailError,
    ValidationError,
)
from .groups import GroupDescriptor, StepDistribution
from .streams import stream_layout


@dataclass(frozen=True)
class TailRule:
    """Parametric upward tail for k >= k0."""

    kind: str  # "power" | "power_log"
    k0: int
    coeff: float
    exponent: float | None = None

    def p_at(self, k: int) -> float:
        if k < self.k0:
            return 0.0
        if self.kind == "power":
            return self.coeff / k ** self.exponent
        return self.coeff / (k * k * math.log(k) ** 2)

    def mass_from(self, k: int) -> float:
        """sum_{l >= k} p_l, with certified accuracy ~1e-12."""
        k = max(k, self.k0)
        if self.kind == "power":
            return self.coeff * float(hurwitz_zeta(self.exponent, k))
        return self.coeff * _power_log_tail_sum(k)

    def weighted_mass_from(self, k: int) -> float:
        """sum_{l >= k} l * p_l."""
        k = max(k, self.k0)
        if self.kind == "power":
            return self.coeff * float(hurwitz_zeta(self.exponent - 1, k))
        return self.coeff * _power_log_weighted_tail_sum(k)

    @property
    def x_ln_x_finite(self) -> bool:
        # power (s > 2): sum k ln k / k^s converges; power_log: sum 1/(k ln k)
        # diverges by the integral test.
        return self.kind == "power"


def _bracketed_sum(g, integral_from, start: int, terms: int = 1_000_000) -> float:
    """Midpoint of [partial + integral, partial + integral + g(N+1)] for a
    decreasing positive g with a closed-form tail integral."""
    ks = np.arange(start, start + terms, dtype=np.float64)
    partial = float(np.sum(g(ks)))
    n_next = float(start + terms)
    lo = partial + integral_from(n_next)
    hi = lo + float(g(np.array([n_next]))[0])
    return 0.5 * (lo + hi)


def _power_log_tail_sum(k: int) -> float:
    g = lambda x: 1.0 / (x * x * np.log(x) ** 2)
    # the tail integral of 1/(x^2 ln^2 x) has no elementary form; the upper
    # proxy 1/(a ln^2 a) overshoots it by O(1/(a ln^3 a)), which keeps the
    # bracket below ~1e-9 once a million terms are summed directly.
    integral = lambda a: 1.0 / a / math.log(a) ** 2
    return _bracketed_sum(g, integral, k)


def _power_log_weighted_tail_sum(k: int) -> float:
    g = lambda x: 1.0 / (x * np.log(x) ** 2)
    integral = lambda a: 1.0 / math.log(a)  # exact: d/dx(-1/ln x) = 1/(x ln^2 x)
    return _bracketed_sum(g, integral, k)


@dataclass(frozen=True)
class SkipFreeMeasure:
    """q = P(step -1) plus the law of the nonnegative part.

    ``head[k]`` is P(step = k) for k < len(head); an optional tail rule covers
    k >= len(head).  Drift must lie in (-1, 0): the walk escapes downward.
    """

    q: float
    head: tuple
    tail: TailRule | None = None

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValidationError("q must lie in (0, 1)")
        if any(p < 0 for p in self.head):
            raise ValidationError("head probabilities must be nonnegative")
        if self.tail is not None and self.tail.k0 != len(self.head):
            raise ValidationError("tail rule must start right after the head")
        total = self.q + math.fsum(self.head) + (self.tail.mass_from(self.tail.k0) if self.tail else 0.0)
        if abs(total - 1.0) > 1e-8:
            raise ValidationError(f"total mass {total!r} differs from 1 beyond certification")
        m = self.drift
        if m >= 0.0:
            raise NotEscapingError(f"drift {m} must be negative for a downward-escaping walk")
        if m <= -1.0:
            raise ValidationError("drift below -1 is impossible for a skip-free walk")

    @property
    def drift(self) -> float:
        up = math.fsum(k * p for k, p in enumerate(self.head))
        if self.tail is not None:
            up += self.tail.weighted_mass_from(self.tail.k0)
        return up - self.q

    def p_at(self, k: int) -> float:
        if k == -1:
            return self.q
        if k < 0:
            return 0.0
        if k < len(self.head):
            return self.head[k]
        if self.tail is not None:
            return self.tail.p_at(k)
        return 0.0

    def p_plus(self, k: int) -> float:
        """sum_{l >= k} p_l for k >= 1."""
        if k < 1:
            raise ValidationError("p_plus is defined for k >= 1")
        head_part = math.fsum(self.head[k:]) if k < len(self.head) else 0.0
        tail_part = self.tail.mass_from(max(k, self.tail.k0)) if self.tail else 0.0
        return head_part + tail_part

    def p_plus_array(self, n: int) -> np.ndarray:
        """p_plus(1..n) as a vector (index 0 unused)."""
        out = np.zeros(n + 1, dtype=np.float64)
        top = len(self.head)
        head = np.zeros(top + 1, dtype=np.float64)
        head[:top] = self.head
        suffix = np.cumsum(head[::-1])[::-1]
        upto = min(n, top)
        out[1:upto + 1] = suffix[1:upto + 1]
        if self.tail is not None:
            k0 = self.tail.k0
            ks = np.arange(1, n + 1)
            if self.tail.kind == "power":
                out[1:] += self.tail.coeff * hurwitz_zeta(
                    self.tail.exponent, np.maximum(ks, k0).astype(np.float64))
            else:
                grid = np.arange(k0, max(n, k0) + 1, dtype=np.float64)
                vals = self.tail.coeff / (grid * grid * np.log(grid) ** 2)
                sfx = np.concatenate((np.cumsum(vals[::-1])[::-1], [0.0]))
                rem = self.tail.mass_from(int(grid[-1]) + 1)
                idx = np.clip(ks, k0, None) - k0
                out[1:] += sfx[idx] + rem
        return out

    def p_plus_plus(self, k: int) -> float:
        """sum_{l >= k} p_plus(l) = sum_{j >= k} (j - k + 1) p_j, for k >= 1."""
        head_part = math.fsum((j - k + 1) * p for j, p in enumerate(self.head) if j >= k)
        tail_part = 0.0
        if self.tail is not None:
            start = max(k, self.tail.k0)
            tail_part = (self.tail.weighted_mass_from(start)
                         - (k - 1) * self.tail.mass_from(start))
        return head_part + tail_part

    def x_ln_x_moment(self):
        """(value-or-partial, finite flag) for E|X| ln |X|."""
        finite_part = math.fsum(k * math.log(k) * p for k, p in enumerate(self.head) if k >= 2)
        if self.tail is None:
            return finite_part, True
        if self.tail.x_ln_x_finite:
            # certified numeric tail: sum k ln k c/k^s, s > 2
            s = self.tail.exponent
            c = self.tail.coeff
            g = lambda x: np.log(x) / x ** (s - 1)
            integral = lambda a: (math.log(a) / (s - 2) + 1.0 / (s - 2) ** 2) * a ** (2 - s)
            return finite_part + c * _bracketed_sum(g, integral, self.tail.k0, 200_000), True
        return finite_part, False

    @staticmethod
    def from_step_distribution(mu: StepDistribution) -> "SkipFreeMeasure":
        """Normalize an integer-line measure to the skip-free-left frame,
        negating all steps when the witness direction is -1."""
        if mu.group.kind != "Z":
            raise ValidationError("skip-free analysis lives on the integer line")
        values = mu.values
        if min(values) == -1:
            pairs = list(zip(values, mu.probs))
        elif max(values) == 1:
            pairs = [(-v, p) for v, p in zip(values, mu.probs)]
        else:
            raise ValidationError("support must be skip-free in one direction (a -1 or +1 floor)")
        q = 0.0
        top = max(v for v, _ in pairs)
        head = [0.0] * (top + 1)
        for v, p in pairs:
            if v == -1:
                q = p
            elif v >= 0:
                head[v] = p
            else:
                raise ValidationError("unexpected negative step beyond -1")
        if q <= 0.0:
            raise ValidationError("the -1 step must carry positive mass")
        return SkipFreeMeasure(q, tuple(head))

    @staticmethod
    def with_power_tail(q: float, head, k0: int, exponent: float) -> "SkipFreeMeasure":
        if exponent <= 2.0:
            raise UnknownTailError("power tails need exponent > 2 for a finite drift")
        head = tuple(head)
        if len(head) != k0:
            raise ValidationError("head must cover exactly k = 0..k0-1")
        tail_mass = 1.0 - q - math.fsum(head)
        if tail_mass <= 0.0:
            raise ValidationError("no mass left for the tail")
        c = tail_mass / float(hurwitz_zeta(exponent, k0))
        return SkipFreeMeasure(q, head, TailRule("power", k0, c, exponent))

    @staticmethod
    def with_power_log_tail(q: float, head, k0: int) -> "SkipFreeMeasure":
        if k0 < 2:
            raise ValidationError("power-log tails start at k0 >= 2")
        head = tuple(head)
        if len(head) != k0:
            raise ValidationError("head must cover exactly k = 0..k0-1")
        tail_mass = 1.0 - q - math.fsum(head)
        if tail_mass <= 0.0:
            raise ValidationError("no mass left for the tail")
        c = tail_mass / _power_log_tail_sum(k0)
        return SkipFreeMeasure(q, head, TailRule("power_log", k0, c))

    def as_step_distribution(self) -> StepDistribution:
        if self.tail is not None:
            raise ValidationError("only finite-support measures convert to step distributions")
        pairs = [(-1, self.q)] + [(k, p) for k, p in enumerate(self.head) if p > 0]
        return StepDistribution.from_pairs(GroupDescriptor.integer_line(), pairs)


def f0(m: SkipFreeMeasure) -> float:
    """P(eta = 0) = -drift / q, from q f_0 = q - (mean positive part)."""
    return -m.drift / m.q


@dataclass
class SupremumLaw:
    """Partial law f_0..f_N of the all-time supremum."""

    f: np.ndarray
    N: int
    tail_mass_bound: float

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.f)


def supremum_law(m: SkipFreeMeasure, N: int) -> SupremumLaw:
    """f_0 from the drift identity, then the one-sided ladder recursion
    f_n = (1/q) sum_{k=1..n} p_plus(k) f_{n-k}."""
    if N < 0:
        raise ValidationError("N must be >= 0")
    f = np.zeros(N + 1, dtype=np.float64)
    f[0] = f0(m)
    pk = m.p_plus_array(N)
    for n in range(1, N + 1):
        f[n] = float(np.dot(pk[1:n + 1], f[n - 1::-1])) / m.q
    return SupremumLaw(f, N, max(0.0, 1.0 - float(np.sum(f))))


def lower_bound_terms(m: SkipFreeMeasure, n_from: int, n_to: int) -> np.ndarray:
    """The proven termwise floor f_n >= p_plus(n) f_0 / q on a range of n."""
    base = f0(m) / m.q
    if m.tail is None:
        return np.array([m.p_plus(n) * base for n in range(n_from, n_to + 1)])
    ks = np.arange(n_from, n_to + 1, dtype=np.float64)
    if m.tail.kind == "power":
        s, c = m.tail.exponent, m.tail.coeff
        tails = c * hurwitz_zeta(s, np.maximum(ks, m.tail.k0))
    else:
        # suffix sums of c/(k^2 ln^2 k) plus the certified remainder
        top = int(n_to) + 1
        grid = np.arange(m.tail.k0, top + 1, dtype=np.float64)
        vals = m.tail.coeff / (grid * grid * np.log(grid) ** 2)
        suffix = np.concatenate((np.cumsum(vals[::-1])[::-1], [0.0]))
        rem = m.tail.mass_from(top + 1)
        tails = np.array([
            suffix[max(int(k), m.tail.k0) - m.tail.k0] + rem for k in ks
        ])
    head_parts = np.array([
        math.fsum(m.head[int(k):]) if int(k) < len(m.head) else 0.0 for k in ks
    ])
    return (head_parts + tails) * base


def check_generating_function(m: SkipFreeMeasure, law: SupremumLaw, t_grid) -> dict:
    """Evaluate both closed forms of F(t) = E t^eta against the partial sum of
    the computed law; returns the worst absolute residual."""
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(not 0.0 < t < 1.0 for t in t_grid):
        raise ValidationError("t grid must lie strictly inside (0, 1)")
    t_max = max(t_grid)
    if law.tail_mass_bound * t_max ** (law.N + 1) > 1e-10:
        raise PrecisionError(
            f"law truncation at N={law.N} leaves {law.tail_mass_bound:.3e} mass; "
            "extend N for this t grid"
        )
    qf0 = m.q * f0(m)
    max_resid = 0.0
    max_cross = 0.0
    ns = np.arange(law.N + 1)
    for t in t_grid:
        lhs = float(np.dot(law.f, t ** ns))
        p_t = _power_series(m.p_at, t, mass_from=lambda k: _mass_from(m, k))
        pbar_t = _pbar_series(m, t)
        rhs_a = qf0 * (1.0 - t) / (m.q + t * p_t - t)
        rhs_b = qf0 / (m.q - pbar_t)
        max_resid = max(max_resid, abs(lhs - rhs_a), abs(lhs - rhs_b))
        max_cross = max(max_cross, abs(rhs_a - rhs_b))
    return {"max_residual": max_resid, "closed_form_gap": max_cross, "grid": t_grid}


def _mass_from(m: SkipFreeMeasure, k: int) -> float:
    head = math.fsum(m.head[k:]) if k < len(m.head) else 0.0
    return head + (m.tail.mass_from(max(k, m.tail.k0)) if m.tail else 0.0)


def _power_series(p_at, t: float, mass_from, tol: float = 1e-13) -> float:
    """sum_{n>=0} p_n t^n to absolute accuracy tol."""
    total = 0.0
    n = 0
    while True:
        total += p_at(n) * t ** n
        n += 1
        if mass_from(n) * t ** n < tol:
            return total
        if n > 10_000_000:
            raise PrecisionError("power series did not certify convergence")


def _pbar_series(m: SkipFreeMeasure, t: float, tol: float = 1e-13) -> float:
    total = 0.0
    n = 1
    while True:
        pn = m.p_plus(n)
        total += pn * t ** n
        n += 1
        # p_plus is nonincreasing, so the remainder is under pn * t^n/(1-t)
        if pn * t ** n / (1.0 - t) < tol:
            return total
        if n > 10_000_000:
            raise PrecisionError("ladder series did not certify convergence")


LEMMA_CONSTANT_TERMS = 1_000_000


def lemma61_constant() -> tuple[float, float, float]:
    """(lower, mid, upper) certification of C = e^-1 + 2 sum_{n>=2} ln n / n^2."""
    ns = np.arange(2, LEMMA_CONSTANT_TERMS + 1, dtype=np.float64)
    partial = float(np.sum(np.log(ns) / ns ** 2))
    a = float(LEMMA_CONSTANT_TERMS + 1)
    integral = (math.log(a) + 1.0) / a  # exact tail integral of ln x / x^2
    g_next = math.log(a) / a ** 2
    lo = math.exp(-1) + 2.0 * (partial + integral)
    hi = lo + 2.0 * g_next
    return lo, 0.5 * (lo + hi), hi


@dataclass
class EtaEntropyReport:
    partial_entropy: float
    N: int
    tail_bound: float | None
    criterion_finite: bool

    @property
    def total_upper(self) -> float | None:
        return None if self.tail_bound is None else self.partial_entropy + self.tail_bound


def entropy_eta(law: SupremumLaw, m: SkipFreeMeasure | None = None) -> EtaEntropyReport:
    """Partial entropy of the supremum plus, when E|X| ln|X| is certified
    finite, a rigorous bound on the truncated-away contribution."""
    f = law.f[law.f > 0]
    partial = float(-np.dot(f, np.log(f)))
    if m is None:
        return EtaEntropyReport(partial, law.N, None, True)
    _, finite = m.x_ln_x_moment()
    if not finite:
        return EtaEntropyReport(partial, law.N, None, False)
    mass = law.tail_mass_bound
    if mass <= 0.0:
        return EtaEntropyReport(partial, law.N, 0.0, True)
    # E ln(1+eta) <= (1/(q f0)) sum_k p_plus_plus(k)/k  (integrated ladder
    # comparison), so the log-mass beyond N is the gap between that bound and
    # the computed partial sum; the conditional-entropy constant C then caps
    # the tail entropy by  mass*C + 2*gap - mass*ln(mass).
    qf0 = m.q * f0(m)
    kmax = max(2000, 2 * len(m.head) + 4)
    series = math.fsum(m.p_plus_plus(k) / k for k in range(1, kmax))
    if m.tail is not None and m.tail.kind == "power":
        s, c = m.tail.exponent, m.tail.coeff
        series += c * (kmax - 1) ** (2 - s) / (s - 2) ** 2  # tail of the comparison series
    ln_total_bound = series / qf0
    ns = np.arange(law.N + 1, dtype=np.float64)
    ln_partial = float(np.dot(law.f, np.log1p(ns)))
    gap = max(0.0, ln_total_bound - ln_partial)
    _, c_mid, c_hi = lemma61_constant()
    tail_bound = mass * c_hi + 2.0 * gap - mass * math.log(mass)
    return EtaEntropyReport(partial, law.N, tail_bound, True)


def tail_criterion(m: SkipFreeMeasure) -> dict:
    """Finiteness of E|X| ln|X| and the induced prediction for the entropy of
    the limiting visited set."""
    value, finite = m.x_ln_x_moment()
    return {
        "criterion": "Finite" if finite else "Infinite",
        "x_ln_x": value if finite else None,
        "x_ln_x_partial": value,
        "predicts_finite_range_entropy": finite,
    }


@dataclass
class IntegralBoundsReport:
    h: float
    e_ln: float
    c_interval: tuple[float, float, float]
    upper_ok: bool
    decreasing: bool
    lower_ok: bool | None


def entropy_integral_bounds(p) -> IntegralBoundsReport:
    """For a law on {1, 2, ...}: H(Y) <= C + 2 E ln Y always; and when the
    law is nonincreasing from the start, E ln Y <= H(Y)."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or len(arr) == 0 or np.any(arr < 0):
        raise ValidationError("p must be a nonnegative vector over {1, 2, ...}")
    total = float(arr.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"law sums to {total}, expected 1")
    pos = arr[arr > 0]
    h = float(-np.dot(pos, np.log(pos)))
    ns = np.arange(1, len(arr) + 1, dtype=np.float64)
    e_ln = float(np.dot(arr, np.log(ns)))
    lo, mid, hi = lemma61_constant()
    upper_ok = h <= lo + 2.0 * e_ln + 1e-12
    decreasing = bool(np.all(np.diff(arr) <= 1e-15))
    lower_ok = (e_ln <= h + 1e-12) if decreasing else None
    return IntegralBoundsReport(h, e_ln, (lo, mid, hi), upper_ok, decreasing, lower_ok)


def entropy_growth_diagnostic(m: SkipFreeMeasure, N: int, base: int = 2000) -> dict:
    """Lower bounds on H_N - H_{N/2} from the termwise floor on f.

    Valid because beyond ``base`` every f_n is at most the remaining mass
    (checked <= 1/e), where -x ln x is increasing, so floor terms can only
    undershoot."""
    law = supremum_law(m, base)
    if law.tail_mass_bound > math.exp(-1):
        raise PrecisionError("base law leaves too much mass to certify monotonicity")
    lo_half = max(base + 1, N // 2 + 1)
    terms = lower_bound_terms(m, lo_half, N)
    terms = np.clip(terms, 0.0, math.exp(-1))
    growth = float(np.sum(-terms * np.log(np.where(terms > 0, terms, 1.0))))
    return {
        "N": N,
        "window": (lo_half, N),
        "entropy_growth_lower_bound": growth,
        "base_tail_mass": law.tail_mass_bound,
    }


def mc_supremum_check(m: SkipFreeMeasure, horizon: int, samples: int, seed: int,
                      streams: int = 4, law_N: int | None = None) -> dict:
    """Total-variation gap between the law of max_{k<=horizon} S_k over
    sampled paths and the computed supremum law, plus the distributional
    self-check of eta =d max(0, X_1 + eta')."""
    sd = m.as_step_distribution()
    vals = np.asarray(sd.values, dtype=np.int64)
    cum = sd.cumulative()
    max_up = int(vals.max())
    if law_N is None:
        law_N = 60
        while True:
            law = supremum_law(m, law_N)
            if law.tail_mass_bound < 1e-9 or law_N > 200_000:
                break
            law_N *= 2
    else:
        law = supremum_law(m, law_N)

    layout = stream_layout(seed, streams, samples)
    maxima = []
    unfinalized = 0
    for spec, cnt in layout:
        out = np.empty(cnt, dtype=np.int64)
        flags = np.zeros(cnt, dtype=np.int8)
        _kernels.z_path_max(np.uint64(spec.state0()), cnt, horizon, cum, vals, max_up, out, flags)
        maxima.append(out)
        unfinalized += int(np.count_nonzero(flags == 0))
    maxima = np.concatenate(maxima)
    emp = np.bincount(maxima, minlength=law.N + 1).astype(np.float64) / samples
    tv = 0.5 * (float(np.abs(emp[: law.N + 1] - law.f).sum())
                + float(emp[law.N + 1:].sum()) + law.tail_mass_bound)

    # distributional recursion: eta =d max(0, X_1 + eta')
    u = np.empty(samples, dtype=np.float64)
    _kernels.bulk_uniforms(np.uint64(stream_layout(seed + 1, 1, samples)[0][0].state0()),
                           samples, u)
    eta_resample = np.searchsorted(np.cumsum(law.f), u, side="right")
    u2 = np.empty(samples, dtype=np.float64)
    _kernels.bulk_uniforms(np.uint64(stream_layout(seed + 2, 1, samples)[0][0].state0()),
                           samples, u2)
    x1 = vals[np.searchsorted(cum, u2, side="right").clip(max=len(vals) - 1)]
    recur = np.maximum(0, x1 + eta_resample)
    emp2 = np.bincount(recur, minlength=law.N + 1).astype(np.float64) / samples
    tv2 = 0.5 * (float(np.abs(emp2[: law.N + 1] - law.f).sum())
                 + float(emp2[law.N + 1:].sum()) + law.tail_mass_bound)
    return {
        "tv_empirical_vs_f": tv,
        "tv_recursion_vs_f": tv2,
        "horizon": horizon,
        "samples": samples,
        "truncation_bias_bound": unfinalized / samples,
        "law_N": law.N,
    }
