"""Walk classification (recurrent / transient variants), vanishing
predictions for the average range and trace entropies, and desk-scale
theorem reports.

Recurrence is decided by a criteria table over the supported group kinds,
never by simulation; Monte Carlo escape estimates only corroborate the
Unknown fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import dist_exact, groups, walk
from .errors import CertificateError, PredictionError, UnsupportedGroupError, ValidationError
from .groups import StepDistribution
from .streams import RngStreamSpec

RECURRENT = "recurrent"
TRANSIENT_NO_LEFT_JUMP = "transient_no_left_jump"
TRANSIENT_OTHER = "transient_other"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class WalkClass:
    kind: str
    witness: int | None = None  # the no-left-jump direction a, when applicable
    evidence: tuple = ()

    def describe(self) -> str:
        if self.kind == TRANSIENT_NO_LEFT_JUMP:
            return f"transient, escaping without left jump (witness a = {self.witness:+d})"
        return self.kind


def _mean(mu: StepDistribution) -> float:
    if mu.fractions is not None:
        return float(sum(f * _as_scalar(v) for f, v in zip(mu.fractions, mu.values)))
    return math.fsum(p * _as_scalar(v) for p, v in zip(mu.probs, mu.values))


def _as_scalar(v) -> int:
    return v


def detect_no_left_jump(mu: StepDistribution) -> int | None:
    """Witness a in {+1, -1} such that the support sits inside
    {a^-1, e, a, a^2, ...}, the single backward step a^-1 has positive mass,
    and the drift (measured in powers of a) is negative."""
    if mu.group.kind != "Z":
        raise UnsupportedGroupError("no-left-jump detection lives on the integer line")
    for a in (1, -1):
        exponents = [v * a for v in mu.values]
        if min(exponents) != -1:
            continue  # needs the exact backward step a^-1 in the support
        drift = math.fsum(p * k for p, k in zip(mu.probs, exponents))
        if drift < 0:
            return a
    return None


def _lattice_dimension_spanned(mu: StepDistribution) -> int:
    """Rank of the real span of the support (not of the generated lattice)."""
    import numpy as np

    mat = np.asarray(mu.values, dtype=np.float64)
    return int(np.linalg.matrix_rank(mat))


def classify(mu: StepDistribution, escape_evidence: bool = True,
             seed: int = 20_260_811) -> WalkClass:
    """Decision table over the supported kinds; simulation never decides, it
    only annotates the Unknown fallback."""
    desc = mu.group
    evidence = []
    if desc.kind == "cyclic":
        return WalkClass(RECURRENT, evidence=("finite group",))
    if desc.kind == "Z" or (desc.kind == "free" and desc.rank == 1):
        if desc.kind == "free":
            mu = StepDistribution.from_pairs(
                groups.GroupDescriptor.integer_line(),
                [(_word_exponent(v), p) for v, p in zip(mu.values, mu.probs)],
            )
        mean = _mean(mu)
        if mean == 0.0:
            return WalkClass(RECURRENT, evidence=("integer line, zero mean, finite support",))
        a = detect_no_left_jump(mu)
        if a is not None:
            return WalkClass(TRANSIENT_NO_LEFT_JUMP, witness=a,
                             evidence=(f"drift {mean:+.6g} with single backward step",))
        return WalkClass(TRANSIENT_OTHER, evidence=(f"integer line, drift {mean:+.6g}",))
    if desc.kind == "Zd":
        dim = _lattice_dimension_spanned(mu)
        genuinely = dim == desc.d
        mean_vec = [math.fsum(p * v[i] for p, v in zip(mu.probs, mu.values))
                    for i in range(desc.d)]
        zero_mean = all(abs(c) < 1e-15 for c in mean_vec)
        if desc.d == 1:
            flat = StepDistribution.from_pairs(
                groups.GroupDescriptor.integer_line(),
                [(v[0], p) for v, p in zip(mu.values, mu.probs)])
            return classify(flat, escape_evidence, seed)
        if genuinely and desc.d == 2 and zero_mean:
            return WalkClass(RECURRENT, evidence=("genuinely 2-dimensional, zero mean",))
        if genuinely and desc.d == 2 and not zero_mean:
            return WalkClass(TRANSIENT_OTHER, evidence=(f"drift {mean_vec}",))
        if genuinely and desc.d >= 3:
            return WalkClass(TRANSIENT_OTHER, evidence=(f"genuinely {desc.d}-dimensional",))
        evidence.append(f"support spans only {dim} of {desc.d} dimensions")
    elif desc.kind == "free" and desc.rank >= 2:
        return WalkClass(TRANSIENT_OTHER, evidence=(f"free group of rank {desc.rank}",))
    if escape_evidence:
        from . import estimate_mc

        est = estimate_mc.escape_rate(mu, horizon=2000, samples=20_000, seed=seed, streams=4)
        evidence.append(f"truncated escape estimate {est.estimate:.4f} at horizon {est.horizon}")
    return WalkClass(UNKNOWN, evidence=tuple(evidence))


def _word_exponent(word: tuple) -> int:
    return sum(1 if s > 0 else -1 for s in word)


def predict_vanishing(cls: WalkClass) -> tuple[bool, bool]:
    """(average range entropy vanishes?, average trace entropy vanishes?)."""
    if cls.kind == UNKNOWN:
        raise PredictionError("no prediction for an Unknown walk class")
    h_r_zero = cls.kind in (RECURRENT, TRANSIENT_NO_LEFT_JUMP)
    h_gamma_zero = cls.kind == RECURRENT
    return h_r_zero, h_gamma_zero


# ---------------------------------------------------------------------------
# escape-rate-one certificates and the extreme-case check


def find_positive_grading(mu: StepDistribution):
    w = groups.positive_grading(mu)
    if w is None:
        raise CertificateError(
            "no strictly positive grading found; cannot certify escape rate 1"
        )
    return w


@dataclass
class ExtremeCaseReport:
    n_max: int
    grading: tuple
    max_entropy_gap: float
    reconstructions_checked: int
    reconstructions_ok: bool

    @property
    def ok(self) -> bool:
        return self.max_entropy_gap <= 1e-9 and self.reconstructions_ok


def check_gamma_escape_one(mu: StepDistribution, n_max: int,
                           reconstruct_samples: int = 50,
                           seed: int = 7_042) -> ExtremeCaseReport:
    """With a positive grading in hand (so every step strictly raises a
    homomorphic height and the walk never returns), verify the extreme case:
    H(R_n) = H(R_n, S_n) = n H(step) exactly, and recover sampled paths from
    their ranges by sorting along the grading."""
    w = find_positive_grading(mu)
    desc = mu.group
    h_step = mu.step_entropy()
    gap = 0.0
    for n, law in dist_exact.range_dp_sweep(mu, n_max):
        h_rs = dist_exact.entropy(law)
        merged: dict = {}
        for (rk, _e), p in law.items():
            merged[rk] = merged.get(rk, 0) + p
        h_r = dist_exact.entropy(merged)
        gap = max(gap, abs(h_rs - n * h_step), abs(h_r - n * h_step))
    ok = True
    for s in range(reconstruct_samples):
        traj = walk.sample_trajectory(mu, n_max, RngStreamSpec(seed, s))
        state = walk.range_of(traj)
        ordered = sorted(state.visited, key=lambda v: groups.grade_value(desc, w, v))
        if tuple(ordered) != tuple(traj.positions):
            ok = False
            break
        steps = [
            groups.mul_values(desc, groups.inverse_value(desc, u), v)
            for u, v in zip(ordered, ordered[1:])
        ]
        if tuple(steps) != tuple(traj.steps):
            ok = False
            break
    return ExtremeCaseReport(n_max, w, gap, reconstruct_samples, ok)


# ---------------------------------------------------------------------------
# assembled reports


@dataclass
class TheoremReport:
    walk_class: WalkClass
    predicts_h_r_zero: bool
    predicts_h_gamma_zero: bool
    h_rs_over_n: list = field(default_factory=list)
    h_gs_over_n: list = field(default_factory=list)
    lower_bound_constant: float | None = None
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "class": self.walk_class.kind,
            "witness": self.walk_class.witness,
            "evidence": list(self.walk_class.evidence),
            "predicts_h_R_zero": self.predicts_h_r_zero,
            "predicts_h_trace_zero": self.predicts_h_gamma_zero,
            "H_RS_over_n": self.h_rs_over_n,
            "H_traceS_over_n": self.h_gs_over_n,
            "lower_bound_constant": self.lower_bound_constant,
            "checks": self.checks,
        }


def trend_report(seq: dist_exact.EntropySequence, cls: WalkClass,
                 bound_c: float | None = None, tolerance: float = 1e-9) -> TheoremReport:
    """Check the finite-n consequences the classification predicts.

    A positive trace-entropy prediction is tested as H(Gamma_n, S_n)/n >= c
    for every computed n, valid because subadditive sequences dominate their
    limits; vanishing predictions are tested as strict decrease along
    n -> 2n."""
    h_r_zero, h_g_zero = predict_vanishing(cls)
    report = TheoremReport(cls, h_r_zero, h_g_zero)
    rs = [seq.H_RS[n] / n for n in range(1, len(seq.H_RS))] if seq.H_RS else []
    gs = [seq.H_GS[n] / n for n in range(1, len(seq.H_GS))] if seq.H_GS else []
    report.h_rs_over_n = rs
    report.h_gs_over_n = gs
    report.lower_bound_constant = bound_c
    if not h_g_zero and bound_c is not None and gs:
        report.checks["trace_rate_dominates_limit_bound"] = all(
            v >= bound_c - tolerance for v in gs
        )
    if h_g_zero and gs:
        report.checks["trace_rate_strictly_decreasing_on_doubling"] = _doubling_decrease(gs)
    if h_r_zero and rs:
        report.checks["range_rate_strictly_decreasing_on_doubling"] = _doubling_decrease(rs)
    if not h_r_zero and rs:
        # the finite-n rate can only sit above a positive limit
        report.checks["range_rate_positive"] = all(v > tolerance for v in rs)
    return report


def _doubling_decrease(rates: list, margin: float = 1e-9) -> bool:
    """Strict decrease at the widest available doubling window.

    The first couple of doublings can sit at exact equality (every short path
    is still distinguishable from its range), so only the deepest window is a
    meaningful vanishing signal."""
    n = len(rates) // 2
    if n < 1:
        return False
    return rates[2 * n - 1] < rates[n - 1] - margin
