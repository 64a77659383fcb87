"""Command-line interface: config ingestion, dispatch, reproducible run
manifests, CSV/JSON reports.

Exit codes: 0 success, 2 config or validation problem, 3 resource cap
exceeded, 4 failed assertion under --assert.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__, classify as classify_mod, dist_exact, estimate_mc, groups, ladder, trace_codec, walk
from .errors import RangewalkError, ResourceLimitError, ValidationError
from .groups import GroupDescriptor, GroupEnumeration, StepDistribution
from .streams import RngStreamSpec

GROUP_KINDS = {"Z", "Zd", "free", "cyclic"}


@dataclass
class RunConfig:
    group: GroupDescriptor
    mu: StepDistribution
    seed: int
    raw: dict


def _fail(msg: str) -> None:
    raise ValidationError(msg)


def parse_config(path: str | Path) -> RunConfig:
    """Parse and validate the JSON run configuration; unknown keys rejected."""
    path = Path(path)
    if not path.exists():
        _fail(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        _fail(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}")
    if not isinstance(raw, dict):
        _fail("config: top level must be an object")
    unknown = set(raw) - {"group", "mu", "seed"}
    if unknown:
        _fail(f"config: unknown keys {sorted(unknown)}")
    for key in ("group", "mu", "seed"):
        if key not in raw:
            _fail(f"config: missing required key {key!r}")
    desc = _parse_group(raw["group"])
    mu = _parse_measure(desc, raw["mu"])
    seed = raw["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 1 << 64:
        _fail("config.seed: must be an unsigned 64-bit integer")
    return RunConfig(desc, mu, seed, raw)


def _parse_group(node) -> GroupDescriptor:
    if not isinstance(node, dict) or "kind" not in node:
        _fail("config.group: must be an object with a 'kind'")
    kind = node["kind"]
    if kind not in GROUP_KINDS:
        _fail(f"config.group.kind: {kind!r} not one of {sorted(GROUP_KINDS)}")
    extra = set(node) - {"kind", "d", "rank", "moduli"}
    if extra:
        _fail(f"config.group: unknown keys {sorted(extra)}")
    if kind == "Z":
        return GroupDescriptor.integer_line()
    if kind == "Zd":
        if "d" not in node:
            _fail("config.group: kind 'Zd' requires 'd'")
        return GroupDescriptor.integer_lattice(node["d"])
    if kind == "free":
        if "rank" not in node:
            _fail("config.group: kind 'free' requires 'rank'")
        return GroupDescriptor.free_group(node["rank"])
    if "moduli" not in node:
        _fail("config.group: kind 'cyclic' requires 'moduli'")
    return GroupDescriptor.cyclic_product(node["moduli"])


def parse_element(desc: GroupDescriptor, node):
    """Config element syntax -> canonical payload."""
    if desc.kind == "Z":
        if not isinstance(node, int) or isinstance(node, bool):
            _fail(f"element {node!r}: integer-line elements are plain ints")
        return node
    if desc.kind in ("Zd", "cyclic"):
        if not isinstance(node, list) or not all(isinstance(x, int) for x in node):
            _fail(f"element {node!r}: expected an integer array")
        if desc.kind == "cyclic":
            return tuple(x % m for x, m in zip(node, desc.moduli))
        return tuple(node)
    if not isinstance(node, str):
        _fail(f"element {node!r}: free-group elements are words like 'abA'")
    word = []
    for ch in node:
        if "a" <= ch <= "z":
            sym = ord(ch) - ord("a") + 1
        elif "A" <= ch <= "Z":
            sym = -(ord(ch) - ord("A") + 1)
        else:
            _fail(f"element {node!r}: characters must be latin letters (uppercase = inverse)")
        if abs(sym) > desc.rank:
            _fail(f"element {node!r}: generator {ch!r} beyond rank {desc.rank}")
        word.append(sym)
    return groups.reduce_word(word)


def _parse_measure(desc: GroupDescriptor, node) -> StepDistribution:
    if not isinstance(node, list) or not node:
        _fail("config.mu: must be a nonempty array of {elem, prob} entries")
    pairs = []
    for i, entry in enumerate(node):
        if not isinstance(entry, dict) or set(entry) != {"elem", "prob"}:
            _fail(f"config.mu[{i}]: expected exactly the keys 'elem' and 'prob'")
        value = parse_element(desc, entry["elem"])
        prob = entry["prob"]
        if isinstance(prob, str):
            try:
                prob = Fraction(prob)
            except (ValueError, ZeroDivisionError):
                _fail(f"config.mu[{i}].prob: cannot parse {entry['prob']!r} as a rational")
        elif not isinstance(prob, (int, float)) or isinstance(prob, bool):
            _fail(f"config.mu[{i}].prob: expected a number or rational string")
        pairs.append((value, prob))
    return StepDistribution.from_pairs(desc, pairs)


# ---------------------------------------------------------------------------
# report bundle plumbing


class ReportBundle:
    """Output directory with CSV tables, JSON summaries and the manifest."""

    def __init__(self, out_dir: str | Path):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def write_csv(self, name: str, header, rows) -> Path:
        path = self.dir / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_csv_cell(x) for x in row])
        self.files.append(name)
        return path

    def write_json(self, name: str, payload) -> Path:
        path = self.dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.files.append(name)
        return path

    def manifest(self, command: str, config: RunConfig, options: dict) -> Path:
        payload = {
            "command": command,
            "config": config.raw,
            "options": options,
            "package_version": __version__,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "outputs": sorted(self.files),
        }
        path = self.dir / "run_manifest.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _csv_cell(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            raise RangewalkError(f"non-finite value {x!r} would leak into a CSV")
        return repr(x)
    return x


def _serialize_key(key) -> str:
    if isinstance(key, bytes):
        return key.hex()
    return repr(key).encode().hex()


# ---------------------------------------------------------------------------
# commands


def _cmd_exact(cfg: RunConfig, args, bundle: ReportBundle) -> int:
    targets = tuple(args.targets.split(","))
    for t in targets:
        if t not in dist_exact.TARGETS:
            _fail(f"--targets: unknown target {t!r}")
    seq = dist_exact.entropy_sequence(cfg.mu, args.n_max, targets, mode=args.mode,
                                      max_outcomes=args.max_outcomes)
    bundle.write_csv("entropy_sequence.csv", ("n", "H_R", "H_RS", "H_G", "H_GS"),
                     seq.rows())
    sub = dist_exact.check_subadditivity(seq)
    summary = {
        "h_proxy_min_HRS_over_n": seq.h_proxy,
        "h_proxy_caveat": "finite-n upper proxy; no convergence rate is claimed",
        "subadditivity_ok": sub.ok,
        "subadditivity_violations": sub.violations,
        "step_entropy": cfg.mu.step_entropy(),
    }
    bundle.write_json("exact_summary.json", summary)
    if args.assert_checks and not sub.ok:
        return 4
    return 0


def _cmd_mc(cfg: RunConfig, args, bundle: ReportBundle) -> int:
    q = args.quantity
    rows = []
    summary: dict = {"quantity": q, "seed": cfg.seed}
    if q == "entropy":
        est = estimate_mc.mc_entropy(cfg.mu, args.n, args.samples, args.target,
                                     cfg.seed, args.streams, args.workers)
        rows.append((args.target, args.n, args.samples, est.value, est.stderr,
                     "plug-in", cfg.seed))
        rows.append((args.target, args.n, args.samples, est.miller_madow, est.stderr,
                     "plug-in+miller-madow", cfg.seed))
        summary["distinct_outcomes"] = est.distinct
    elif q == "escape":
        est = estimate_mc.escape_rate(cfg.mu, args.horizon, args.samples, cfg.seed,
                                      args.streams, args.workers, exact=args.exact)
        rows.append(("escape", args.horizon, args.samples, est.estimate,
                     est.ci_half_width, "exact" if est.exact else "truncated-mc", cfg.seed))
    elif q == "mean-range":
        mean, half = estimate_mc.mean_range_rate(cfg.mu, args.n, args.samples,
                                                 cfg.seed, args.streams, args.workers)
        rows.append(("mean-range-rate", args.n, args.samples, mean, half, "mc", cfg.seed))
    elif q == "hitting-tail":
        x = parse_element(cfg.group, json.loads(args.element))
        est = estimate_mc.hitting_tail(cfg.mu, x, args.horizon, args.samples, cfg.seed,
                                       args.streams, args.workers, exact=args.exact)
        rows.append(("hitting-tail", args.horizon, args.samples, est.estimate,
                     est.ci_half_width, "exact" if est.exact else "truncated-mc", cfg.seed))
    elif q == "h-gamma-bound":
        a = parse_element(cfg.group, json.loads(args.element))
        rep = estimate_mc.h_gamma_lower_bound(cfg.mu, a, args.horizon, args.samples,
                                              cfg.seed, args.streams, args.workers,
                                              exact=args.exact)
        rows.append(("h-trace-lower-bound", args.horizon, args.samples, rep["value"],
                     rep["ci_half_width"], "truncated-mc", cfg.seed))
        summary["truncation_bias"] = rep["truncation_bias"]
    elif q == "h-r-bound":
        g = parse_element(cfg.group, json.loads(args.element))
        rep = estimate_mc.h_r_lower_bound_diag(cfg.mu, g, args.horizon, args.samples,
                                               cfg.seed, args.streams, args.workers)
        rows.append(("h-range-lower-diagnostic", args.horizon, args.samples, rep["value"],
                     rep["ci_half_width"], "truncated-mc", cfg.seed))
        summary["truncation_bias"] = rep["truncation_bias"]
    elif q == "trace-upper":
        mean, half = estimate_mc.trace_upper_diagnostic(cfg.mu, args.n, args.samples,
                                                        cfg.seed, args.streams, args.workers)
        rows.append(("trace-upper-diagnostic", args.n, args.samples, mean, half, "mc", cfg.seed))
    elif q == "binomial-check":
        rep = estimate_mc.binomial_marginal_check(cfg.mu, args.n, args.samples,
                                                  args.index, cfg.seed, args.streams,
                                                  args.workers)
        rows.append(("binomial-gof", args.n, args.samples, rep["p_value"], 0.0,
                     "chi-square", cfg.seed))
        summary.update(rep)
    else:
        _fail(f"unknown mc quantity {q!r}")
    bundle.write_csv("mc.csv", ("target", "n", "samples", "estimate", "stderr",
                                "method", "seed"), rows)
    bundle.write_json("mc_summary.json", summary)
    return 0


def _cmd_classify(cfg: RunConfig, args, bundle: ReportBundle) -> int:
    cls = classify_mod.classify(cfg.mu, seed=cfg.seed)
    payload = {
        "class": cls.kind,
        "witness": cls.witness,
        "evidence": list(cls.evidence),
    }
    if cls.kind != classify_mod.UNKNOWN:
        h_r_zero, h_g_zero = classify_mod.predict_vanishing(cls)
        payload["predicts_h_R_zero"] = h_r_zero
        payload["predicts_h_trace_zero"] = h_g_zero
    if args.trend_n > 0:
        seq = dist_exact.entropy_sequence(
            cfg.mu, args.trend_n, ("range+endpoint", "trace+endpoint"))
        report = classify_mod.trend_report(seq, cls, args.bound)
        payload["trend"] = report.to_dict()
        if args.assert_checks and not report.ok:
            bundle.write_json("classify.json", payload)
            return 4
    bundle.write_json("classify.json", payload)
    return 0


def _cmd_ladder(cfg: RunConfig, args, bundle: ReportBundle) -> int:
    sf = ladder.SkipFreeMeasure.from_step_distribution(cfg.mu)
    law = ladder.supremum_law(sf, args.n)
    partial_h = []
    acc = 0.0
    for fn in law.f:
        acc += -fn * math.log(fn) if fn > 0 else 0.0
        partial_h.append(acc)
    cum = law.cumulative()
    bundle.write_csv("ladder.csv", ("n", "f_n", "cum", "partial_H"),
                     ((i, float(law.f[i]), float(cum[i]), partial_h[i])
                      for i in range(args.n + 1)))
    t_grid = _parse_grid(args.t_grid)
    gf = ladder.check_generating_function(sf, law, t_grid)
    eta = ladder.entropy_eta(law, sf)
    crit = ladder.tail_criterion(sf)
    summary = {
        "f0": float(law.f[0]),
        "drift": sf.drift,
        "tail_mass_bound": law.tail_mass_bound,
        "generating_function_max_residual": gf["max_residual"],
        "closed_form_gap": gf["closed_form_gap"],
        "entropy_partial": eta.partial_entropy,
        "entropy_tail_bound": eta.tail_bound,
        "entropy_total_upper": eta.total_upper,
        "tail_criterion": crit["criterion"],
    }
    bundle.write_json("ladder_summary.json", summary)
    if args.assert_checks and gf["max_residual"] > 1e-8:
        return 4
    return 0


def _parse_grid(spec: str):
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        _fail(f"--t-grid: expected start:stop:count, got {spec!r}")
    if count < 1:
        _fail("--t-grid: count must be >= 1")
    if count == 1:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _cmd_codec_fuzz(cfg: RunConfig, args, bundle: ReportBundle) -> int:
    enum = GroupEnumeration(cfg.group)
    failures = 0
    keys: dict = {}
    collisions = 0
    for case in range(args.cases):
        n = 1 + (case * 193) % args.n_max
        traj = walk.sample_trajectory(cfg.mu, n, RngStreamSpec(cfg.seed, case))
        digraph = walk.trace_of(traj)
        code = trace_codec.encode(digraph, enum)
        if trace_codec.decode(code, enum) != digraph:
            failures += 1
            continue
        key = trace_codec.code_bytes(code)
        prior = keys.get(key)
        if prior is not None and prior != digraph.key():
            collisions += 1
        keys[key] = digraph.key()
    summary = {
        "cases": args.cases,
        "n_max": args.n_max,
        "round_trip_failures": failures,
        "key_collisions": collisions,
        "distinct_digraphs": len(keys),
    }
    bundle.write_json("codec_fuzz.json", summary)
    if args.assert_checks and (failures or collisions):
        return 4
    return 0


def _cmd_check(cfg: RunConfig, args, bundle: ReportBundle) -> int:
    suite = args.suite
    result = run_named_suite(cfg, suite, n_max=args.n_max, samples=args.samples)
    bundle.write_json(f"check_{suite}.json", result)
    if args.assert_checks and not result["ok"]:
        return 4
    return 0


def run_named_suite(cfg: RunConfig, suite: str, n_max: int = 8,
                    samples: int = 10_000) -> dict:
    """The named property suites behind the `check` command."""
    import numpy as np

    mu = cfg.mu
    if suite == "subadditivity":
        seq = dist_exact.entropy_sequence(mu, n_max, ("range+endpoint", "trace+endpoint"))
        rep = dist_exact.check_subadditivity(seq)
        return {"suite": suite, "ok": rep.ok, "violations": rep.violations}
    if suite == "reversal":
        worst = max(dist_exact.reversal_law_check(mu, n) for n in range(n_max + 1))
        return {"suite": suite, "ok": worst <= 1e-9, "max_tv": worst}
    if suite == "lemma31":
        rng = np.random.default_rng(cfg.seed)
        bad = 0
        worst = -math.inf
        for _ in range(samples):
            k = int(rng.integers(1, 101))
            p = rng.dirichlet(np.ones(k) * rng.uniform(0.2, 3.0))
            p = np.clip(p, 1e-300, None)
            p /= p.sum()
            alpha = float(rng.uniform(1.0, 3.0))
            lhs, rhs = dist_exact.lemma31_bound(p, alpha)
            worst = max(worst, lhs - rhs)
            bad += lhs > rhs + 1e-9
        return {"suite": suite, "ok": bad == 0, "cases": samples, "worst_excess": worst}
    if suite == "lemma61":
        rng = np.random.default_rng(cfg.seed)
        bad = 0
        for _ in range(samples):
            k = int(rng.integers(1, 60))
            p = rng.dirichlet(np.ones(k))
            rep = ladder.entropy_integral_bounds(p)
            if not rep.upper_ok:
                bad += 1
            rep2 = ladder.entropy_integral_bounds(np.sort(p)[::-1])
            if rep2.lower_ok is False:
                bad += 1
        lo, mid, hi = ladder.lemma61_constant()
        return {"suite": suite, "ok": bad == 0, "cases": samples,
                "constant": {"lower": lo, "mid": mid, "upper": hi}}
    if suite == "boundary":
        results = []
        ok = True
        for g, pg in zip(mu.values, mu.probs):
            if pg >= 1.0 or g == groups.identity_value(mu.group):
                continue
            for n in range(n_max + 1):
                rep = dist_exact.boundary_lower_bound(mu, n, g)
                ok = ok and rep.ok
                results.append((repr(g), n, rep.mean_boundary, rep.bound, rep.h_range))
        return {"suite": suite, "ok": ok, "rows": results}
    if suite == "aep":
        law = dist_exact.law_range_endpoint(mu, n_max)
        trajs = [walk.sample_trajectory(mu, n_max, RngStreamSpec(cfg.seed, s))
                 for s in range(min(samples, 200))]
        vals = dist_exact.aep_samples(mu, n_max, law, trajs)
        return {"suite": suite, "ok": True, "n": n_max,
                "mean": sum(vals) / len(vals),
                "min": min(vals), "max": max(vals)}
    _fail(f"unknown check suite {suite!r}")


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rangewalk",
        description="Exact and Monte Carlo analysis of range and trace entropies "
                    "of random walks on discrete groups.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default="rangewalk-out", help="output directory")
        p.add_argument("--workers", type=int,
                       default=int(os.environ.get("RANGEWALK_WORKERS", "1")),
                       help="parallel workers (default: RANGEWALK_WORKERS or 1)")
        p.add_argument("--assert", dest="assert_checks", action="store_true",
                       help="exit 4 when a checked property fails")

    p = sub.add_parser("exact", help="exact entropy sequences")
    common(p)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--targets", default="range,range+endpoint,trace,trace+endpoint")
    p.add_argument("--mode", choices=("double", "rational"), default="double")
    p.add_argument("--max-outcomes", type=int, default=dist_exact.DEFAULT_MAX_OUTCOMES)

    p = sub.add_parser("mc", help="Monte Carlo estimates")
    common(p)
    p.add_argument("--quantity", required=True,
                   choices=("entropy", "escape", "mean-range", "hitting-tail",
                            "h-gamma-bound", "h-r-bound", "trace-upper", "binomial-check"))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--streams", type=int, default=4)
    p.add_argument("--target", default="range+endpoint",
                   choices=("range", "range+endpoint", "trace", "trace+endpoint"))
    p.add_argument("--element", default="null",
                   help="JSON element (target of hitting/bound quantities)")
    p.add_argument("--index", type=int, default=1,
                   help="enumeration index for binomial-check")
    p.add_argument("--exact", action="store_true",
                   help="closed forms instead of simulation (skip-free Z only)")

    p = sub.add_parser("classify", help="walk classification and predictions")
    common(p)
    p.add_argument("--trend-n", type=int, default=0,
                   help="when > 0, attach an exact trend report to this depth")
    p.add_argument("--bound", type=float, default=None,
                   help="positive trace-entropy floor to verify in the trend report")

    p = sub.add_parser("ladder", help="skip-free supremum law analysis")
    common(p)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--t-grid", default="0.1:0.9:9")

    p = sub.add_parser("codec-fuzz", help="trace codec round-trip fuzzing")
    common(p)
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--n-max", type=int, default=300)

    p = sub.add_parser("check", help="named property suites")
    common(p)
    p.add_argument("--suite", required=True,
                   choices=("subadditivity", "reversal", "lemma31", "lemma61",
                            "boundary", "aep"))
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--samples", type=int, default=10_000)

    return parser


COMMANDS = {
    "exact": _cmd_exact,
    "mc": _cmd_mc,
    "classify": _cmd_classify,
    "ladder": _cmd_ladder,
    "codec-fuzz": _cmd_codec_fuzz,
    "check": _cmd_check,
}


def run(command: str, cfg: RunConfig, args) -> int:
    bundle = ReportBundle(args.out)
    code = COMMANDS[command](cfg, args, bundle)
    options = {k: v for k, v in vars(args).items() if k not in ("command",)}
    bundle.manifest(command, cfg, options)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        return run(args.command, cfg, args)
    except ResourceLimitError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, RangewalkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
