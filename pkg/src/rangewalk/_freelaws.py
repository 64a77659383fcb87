"""Exact free-group laws from the exhaustive enumeration kernel.

The kernel emits one record per length-n step sequence; this module merges
records into outcome probabilities with numpy.  Outcome identities are
128-bit fingerprints, so these laws support entropy, mass and grouping
computations but not structural inspection of individual outcomes (the
pure-Python engines cover that regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InternalConsistencyError, ResourceLimitError
from .groups import StepDistribution


@dataclass
class FreeRecords:
    """Per-path records of one enumeration run."""

    n: int
    fp1: np.ndarray
    fp2: np.ndarray
    end: np.ndarray
    comp: np.ndarray          # composition codes, base n+1
    bnd: np.ndarray | None    # |boundary| per path, when requested
    row_weights: np.ndarray   # path probability per record
    uniform_path_prob: float | None


def _ball_volume(two_r: int, radius: int) -> int:
    if two_r <= 1:
        return 2 * radius + 1
    total = 1
    layer = two_r
    for _ in range(radius):
        total += layer
        layer *= two_r - 1
        if total > 1 << 40:
            return total
    return total


def _letters_arrays(values) -> tuple[np.ndarray, np.ndarray]:
    flat = []
    offsets = [0]
    for w in values:
        flat.extend(w)
        offsets.append(len(flat))
    return np.asarray(flat, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def enumerate_records(mu: StepDistribution, n: int, want_trace: bool,
                      boundary=None, max_paths: int = 40_000_000) -> FreeRecords:
    """Run the kernel over all |supp|^n paths of a free-group walk (n >= 1)."""
    s = mu.support_size
    total = s ** n
    if total > max_paths:
        raise ResourceLimitError("path_count", max_paths, total)
    if (n + 1) ** s >= 1 << 62:
        raise ResourceLimitError("composition_code_width", 1 << 62, (n + 1) ** s)
    letters, offsets = _letters_arrays(mu.values)
    bnd_letters = np.asarray(boundary if boundary is not None else (), dtype=np.int64)
    max_len = max(int(offsets[i + 1] - offsets[i]) for i in range(s))
    sym_max = max((int(abs(x)) for x in letters), default=1)
    if bnd_letters.size:
        sym_max = max(sym_max, int(np.abs(bnd_letters).max()))
    radius = n * max_len + len(bnd_letters)
    node_cap = min(_ball_volume(2 * sym_max, radius), total * max_len + len(bnd_letters) * (n + 2) + 2)
    node_cap = int(node_cap) + 2
    if node_cap > 50_000_000:
        raise ResourceLimitError("cayley_nodes", 50_000_000, node_cap)

    fp1 = np.empty(total, dtype=np.uint64)
    fp2 = np.empty(total, dtype=np.uint64)
    end = np.empty(total, dtype=np.uint64)
    comp = np.empty(total, dtype=np.uint64)
    bnd = np.zeros(total if bnd_letters.size else 1, dtype=np.int64)
    comp_pows = np.array([(n + 1) ** k for k in range(s)], dtype=np.int64)

    salt = 0
    while True:
        h1 = np.zeros(node_cap, dtype=np.uint64)
        h2 = np.zeros(node_cap, dtype=np.uint64)
        count = _kernels.free_enum_records(
            n, letters, offsets, node_cap, 1 if want_trace else 0,
            bnd_letters, salt, fp1, fp2, end, comp, bnd, comp_pows, h1, h2)
        if count < 0:
            raise ResourceLimitError("cayley_nodes", node_cap, node_cap + 1)
        pairs = np.empty((count, 2), dtype=np.uint64)
        pairs[:, 0] = h1[:count]
        pairs[:, 1] = h2[:count]
        if len(np.unique(pairs, axis=0)) == count:
            break
        salt += 1
        if salt > 8:
            raise InternalConsistencyError("node hash uniqueness unreachable; this should never happen")

    if mu.is_uniform():
        weights = None
        upp = mu.probs[0] ** n
    else:
        upp = None
        uc, inv = np.unique(comp, return_inverse=True)
        uc_prob = np.empty(len(uc), dtype=np.float64)
        for i, code in enumerate(uc):
            c = int(code)
            p = 1.0
            for k in range(s):
                c, digit = divmod(c, n + 1)
                p *= mu.probs[k] ** digit
            uc_prob[i] = p
        weights = uc_prob[inv]
    row_weights = weights if weights is not None else np.full(total, upp)
    return FreeRecords(n, fp1, fp2, end, comp,
                       bnd if bnd_letters.size else None, row_weights, upp)


def _group_starts(cols: list[np.ndarray]) -> np.ndarray:
    m = len(cols[0])
    change = np.zeros(m, dtype=bool)
    change[0] = True
    for c in cols:
        change[1:] |= c[1:] != c[:-1]
    return np.flatnonzero(change)


def merged_probs(rec: FreeRecords, with_endpoint: bool) -> np.ndarray:
    """Outcome probabilities, merged over paths sharing a fingerprint."""
    cols = [rec.fp1, rec.fp2] + ([rec.end] if with_endpoint else [])
    order = np.lexsort(cols[::-1])
    sorted_cols = [c[order] for c in cols]
    starts = _group_starts(sorted_cols)
    if rec.uniform_path_prob is not None:
        counts = np.diff(np.append(starts, len(order)))
        return counts.astype(np.float64) * rec.uniform_path_prob
    return np.add.reduceat(rec.row_weights[order], starts)


def conditional_groups(rec: FreeRecords) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For range records: per-(R, S) outcome probabilities sorted so that
    outcomes of one range value are contiguous.

    Returns (probs, outer_starts_into_probs, range_probs)."""
    cols = [rec.fp1, rec.fp2, rec.end]
    order = np.lexsort(cols[::-1])
    sorted_cols = [c[order] for c in cols]
    inner_starts = _group_starts(sorted_cols)
    if rec.uniform_path_prob is not None:
        counts = np.diff(np.append(inner_starts, len(order)))
        probs = counts.astype(np.float64) * rec.uniform_path_prob
    else:
        probs = np.add.reduceat(rec.row_weights[order], inner_starts)
    outer_at_inner = _group_starts([c[inner_starts] for c in sorted_cols[:2]])
    range_probs = np.add.reduceat(probs, outer_at_inner)
    return probs, outer_at_inner, range_probs


def boundary_expectation(rec: FreeRecords) -> float:
    if rec.bnd is None:
        raise InternalConsistencyError("records were built without a boundary element")
    return float(np.dot(rec.row_weights, rec.bnd))
