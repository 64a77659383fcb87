"""Compiled inner loops: exhaustive free-group law enumeration and the
long-horizon walk simulators.

All randomness uses the counter-based stream arithmetic of
:mod:`rangewalk.streams`, mirrored here in uint64 numba code so that the
Python samplers and the kernels draw identical variates.

The free-group enumerator walks every length-n step sequence once,
maintaining the explored Cayley-tree nodes in flat arrays.  Outcome
identities are 128-bit order-independent fingerprints (two independent
summed-hash lanes over the weighted edge multiset or the visited set);
per-run node hashes are checked for uniqueness by the caller, which makes
fingerprint collisions the only error source, at probability around 2^-90
per law.
"""

from __future__ import annotations

import numpy as np
from numba import njit

UMASK = np.uint64(0xFFFFFFFFFFFFFFFF)
GAMMA_U = np.uint64(0x9E3779B97F4A7C15)
GAMMA2_U = np.uint64(0xD1B54A32D192ED03)
M1_U = np.uint64(0xBF58476D1CE4E5B9)
M2_U = np.uint64(0x94D049BB133111EB)
INV53 = 1.0 / 9007199254740992.0
U1 = np.uint64(1)
U11 = np.uint64(11)
U27 = np.uint64(27)
U30 = np.uint64(30)
U31 = np.uint64(31)

# fingerprint lane constants
R_SALT1 = np.uint64(0x8E2B_8C5F_1D34_77A1)
R_SALT2 = np.uint64(0x3C79_AC49_2F8E_11B5)
E_SALT1 = np.uint64(0xB5D4_91E2_6A03_FD27)
E_SALT2 = np.uint64(0x6F1D_3B85_C2E9_4A63)
ROOT_BASE = np.uint64(0x51AF_8E3D_29C4_B671)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U30)) * M1_U
    z = (z ^ (z >> U27)) * M2_U
    return z ^ (z >> U31)


@njit(cache=True, inline="always")
def _sample_state(state0, j):
    return _mix64(state0 ^ _mix64((np.uint64(j) + U1) * GAMMA2_U))


@njit(cache=True, inline="always")
def _next_u64(state):
    state = state + GAMMA_U
    return state, _mix64(state)


@njit(cache=True, inline="always")
def _next_double(state):
    state, z = _next_u64(state)
    return state, np.float64(z >> U11) * INV53


@njit(cache=True, inline="always")
def _pick(cum, u):
    for k in range(cum.shape[0] - 1):
        if u < cum[k]:
            return k
    return cum.shape[0] - 1


# ---------------------------------------------------------------------------
# Monte Carlo simulators.  Every kernel derives one substream per sample, so
# results do not depend on how much randomness another sample consumed.
# Early exits are exact: a sample is finalized only when the event can no
# longer occur within the horizon (distance bound) or at all (monotone walks).


@njit(cache=True)
def z_hit_times(state0, samples, horizon, cum, vals, targets, max_abs, monotone, out):
    """First time in 1..horizon the integer walk sits on any target;
    horizon+1 when it provably cannot within the horizon."""
    t_lo = targets.min()
    t_hi = targets.max()
    for j in range(samples):
        st = _sample_state(state0, j)
        pos = np.int64(0)
        hit = horizon + 1
        for t in range(1, horizon + 1):
            st, u = _next_double(st)
            pos += vals[_pick(cum, u)]
            found = False
            for k in range(targets.shape[0]):
                if pos == targets[k]:
                    found = True
                    break
            if found:
                hit = t
                break
            if monotone == 1 and pos > t_hi:
                break
            if monotone == -1 and pos < t_lo:
                break
            dist = pos - t_hi if pos > t_hi else (t_lo - pos if pos < t_lo else np.int64(0))
            for k in range(targets.shape[0]):
                dk = pos - targets[k]
                if dk < 0:
                    dk = -dk
                if dk < dist:
                    dist = dk
            if dist > (horizon - t) * max_abs:
                break
        out[j] = hit


@njit(cache=True)
def z_path_max(state0, samples, horizon, cum, vals, max_up, out, finalized):
    """Maximum position over steps 0..horizon; exact early exit once the
    remaining steps cannot top the current max (finalized=1 marks samples
    whose horizon maximum provably equals the all-time maximum bound)."""
    for j in range(samples):
        st = _sample_state(state0, j)
        pos = np.int64(0)
        m = np.int64(0)
        done = np.int8(0)
        for t in range(1, horizon + 1):
            st, u = _next_double(st)
            pos += vals[_pick(cum, u)]
            if pos > m:
                m = pos
            if pos + (horizon - t) * max_up <= m:
                done = np.int8(1)
                break
        out[j] = m
        finalized[j] = done


@njit(cache=True)
def bulk_uniforms(state0, count, out):
    """count uniforms from per-sample substreams (draw 0 of each)."""
    for j in range(count):
        st = _sample_state(state0, j)
        st, u = _next_double(st)
        out[j] = u


@njit(cache=True)
def z_range_counts(state0, samples, nsteps, cum, vals, sizes, counts):
    """Per-sample |R_n| (interval width) and per-support step counts."""
    for j in range(samples):
        st = _sample_state(state0, j)
        pos = np.int64(0)
        lo = np.int64(0)
        hi = np.int64(0)
        for t in range(nsteps):
            st, u = _next_double(st)
            k = _pick(cum, u)
            counts[j, k] += 1
            pos += vals[k]
            if pos < lo:
                lo = pos
            elif pos > hi:
                hi = pos
        sizes[j] = hi - lo + 1


@njit(cache=True)
def step_counts(state0, samples, nsteps, cum, counts):
    """Per-support step counts only (group-independent)."""
    for j in range(samples):
        st = _sample_state(state0, j)
        for t in range(nsteps):
            st, u = _next_double(st)
            counts[j, _pick(cum, u)] += 1


@njit(cache=True)
def lattice_hit_times(state0, samples, horizon, cum, vecs, targets, max_abs,
                      grades, grades_nonneg, tgrade_max, out):
    """Lattice analogue of z_hit_times with an optional grading certificate:
    when every step grade is >= 0 and the position grade exceeds every target
    grade, no target is reachable again."""
    d = vecs.shape[1]
    pos = np.zeros(d, dtype=np.int64)
    for j in range(samples):
        st = _sample_state(state0, j)
        for i in range(d):
            pos[i] = 0
        g = np.int64(0)
        hit = horizon + 1
        for t in range(1, horizon + 1):
            st, u = _next_double(st)
            k = _pick(cum, u)
            for i in range(d):
                pos[i] += vecs[k, i]
            g += grades[k]
            found = False
            for q in range(targets.shape[0]):
                same = True
                for i in range(d):
                    if pos[i] != targets[q, i]:
                        same = False
                        break
                if same:
                    found = True
                    break
            if found:
                hit = t
                break
            if grades_nonneg == 1 and g > tgrade_max:
                break
            dist = np.int64(0x7FFFFFFFFFFFFFF)
            for q in range(targets.shape[0]):
                dq = np.int64(0)
                for i in range(d):
                    c = pos[i] - targets[q, i]
                    if c < 0:
                        c = -c
                    if c > dq:
                        dq = c
                if dq < dist:
                    dist = dq
            if dist > (horizon - t) * max_abs:
                break
        out[j] = hit


@njit(cache=True)
def free_hit_times(state0, samples, horizon, cum, letters, offsets, target, max_len, out):
    """First time the reduced word equals ``target``; stack-based simulation."""
    stack = np.empty(horizon * max_len + 4, dtype=np.int64)
    tlen = target.shape[0]
    for j in range(samples):
        st = _sample_state(state0, j)
        slen = 0
        hit = horizon + 1
        for t in range(1, horizon + 1):
            st, u = _next_double(st)
            k = _pick(cum, u)
            for p in range(offsets[k], offsets[k + 1]):
                s = letters[p]
                if slen > 0 and stack[slen - 1] == -s:
                    slen -= 1
                else:
                    stack[slen] = s
                    slen += 1
            if slen == tlen:
                same = True
                for p in range(tlen):
                    if stack[p] != target[p]:
                        same = False
                        break
                if same:
                    hit = t
                    break
            gap = slen - tlen
            if gap < 0:
                gap = -gap
            if gap > (horizon - t) * max_len:
                break
        out[j] = hit


@njit(cache=True)
def cyclic_hit_times(state0, samples, horizon, cum, vecs, moduli, target, out):
    d = vecs.shape[1]
    pos = np.zeros(d, dtype=np.int64)
    for j in range(samples):
        st = _sample_state(state0, j)
        for i in range(d):
            pos[i] = 0
        hit = horizon + 1
        for t in range(1, horizon + 1):
            st, u = _next_double(st)
            k = _pick(cum, u)
            same = True
            for i in range(d):
                pos[i] = (pos[i] + vecs[k, i]) % moduli[i]
                if pos[i] != target[i]:
                    same = False
            if same:
                hit = t
                break
        out[j] = hit


# ---------------------------------------------------------------------------
# exhaustive free-group enumeration


@njit(cache=True, inline="always")
def _edge_contrib(hu, hv, c, salt):
    x = hu ^ ((hv << np.uint64(19)) | (hv >> np.uint64(45))) ^ (np.uint64(c) * GAMMA_U) ^ salt
    return _mix64(x)


@njit(cache=True)
def free_enum_records(n, letters, offsets, node_cap, want_trace, bnd_letters, salt,
                      fp1_out, fp2_out, end_out, comp_out, bnd_out, comp_pows, h1, h2):
    """Visit all |supp|^n step sequences (n >= 1) of a free-group walk.

    Per leaf, emit a 128-bit fingerprint of the visited set (want_trace=0) or
    of the weighted edge multiset (want_trace=1), the endpoint node hash, the
    step-composition code and, when bnd_letters is nonempty, the count of
    visited x whose translate x*g leaves the visited set.

    Returns the number of Cayley-tree nodes created (callers audit their
    hashes for uniqueness), or -1 if node_cap was too small.
    """
    s = offsets.shape[0] - 1
    two_r = 2
    for p in range(letters.shape[0]):
        a = letters[p]
        if a < 0:
            a = -a
        if 2 * a > two_r:
            two_r = 2 * a
    for p in range(bnd_letters.shape[0]):
        a = bnd_letters[p]
        if a < 0:
            a = -a
        if 2 * a > two_r:
            two_r = 2 * a

    child = np.full((node_cap, two_r), -1, dtype=np.int32)
    parent = np.full(node_cap, -1, dtype=np.int32)
    par_code = np.full(node_cap, -1, dtype=np.int32)
    h1[0] = _mix64(ROOT_BASE + np.uint64(salt))
    h2[0] = _mix64(h1[0] ^ GAMMA2_U)
    node_count = 1

    # current-path bookkeeping (at most n edges / n+1 vertices)
    edge_u = np.zeros(n + 1, dtype=np.int32)
    edge_v = np.zeros(n + 1, dtype=np.int32)
    edge_c = np.zeros(n + 1, dtype=np.int64)
    edge_len = 0
    vis_node = np.zeros(n + 2, dtype=np.int32)
    vis_cnt = np.zeros(n + 2, dtype=np.int64)
    vis_node[0] = 0
    vis_cnt[0] = 1
    vis_len = 1

    node_at = np.zeros(n + 1, dtype=np.int32)
    choice = np.zeros(n + 1, dtype=np.int64)
    u_edge_slot = np.zeros(n, dtype=np.int32)
    u_edge_new = np.zeros(n, dtype=np.int8)
    u_vis_slot = np.zeros(n, dtype=np.int32)
    u_vis_new = np.zeros(n, dtype=np.int8)
    sup_cnt = np.zeros(s, dtype=np.int64)

    fpR1 = _mix64(h1[0] ^ R_SALT1)
    fpR2 = _mix64(h2[0] ^ R_SALT2)
    fpG1 = np.uint64(0)
    fpG2 = np.uint64(0)

    row = 0
    d = 0
    choice[0] = 0
    while True:
        if d == n or choice[d] == s:
            if d == n:
                # emit one leaf record
                cur = node_at[d]
                if want_trace == 1:
                    fp1_out[row] = fpG1
                    fp2_out[row] = fpG2
                else:
                    fp1_out[row] = fpR1
                    fp2_out[row] = fpR2
                end_out[row] = h1[cur]
                code = np.int64(0)
                for k in range(s):
                    code += sup_cnt[k] * comp_pows[k]
                comp_out[row] = np.uint64(code)
                if bnd_letters.shape[0] > 0:
                    b = 0
                    for q in range(vis_len):
                        y = vis_node[q]
                        for p in range(bnd_letters.shape[0]):
                            sym = bnd_letters[p]
                            c = 2 * (sym if sym > 0 else -sym) - 2 + (1 if sym < 0 else 0)
                            if y != 0 and par_code[y] == (c ^ 1):
                                y = parent[y]
                            else:
                                w = child[y, c]
                                if w < 0:
                                    if node_count >= node_cap:
                                        return -1
                                    w = node_count
                                    node_count += 1
                                    parent[w] = y
                                    par_code[w] = c
                                    h1[w] = _mix64(h1[y] + (np.uint64(c) + U1) * M1_U)
                                    h2[w] = _mix64(h2[y] + (np.uint64(c) + U1) * M2_U)
                                    child[y, c] = w
                                y = w
                        present = False
                        for q2 in range(vis_len):
                            if vis_node[q2] == y:
                                present = True
                                break
                        if not present:
                            b += 1
                    bnd_out[row] = b
                row += 1
            # backtrack one level and undo the step taken there
            d -= 1
            if d < 0:
                break
            k = choice[d]
            sup_cnt[k] -= 1
            slot = u_vis_slot[d]
            if u_vis_new[d] == 1:
                v = vis_node[slot]
                fpR1 = fpR1 - _mix64(h1[v] ^ R_SALT1)
                fpR2 = fpR2 - _mix64(h2[v] ^ R_SALT2)
                vis_len -= 1
            else:
                vis_cnt[slot] -= 1
            es = u_edge_slot[d]
            hu = h1[edge_u[es]]
            hv = h1[edge_v[es]]
            gu = h2[edge_u[es]]
            gv = h2[edge_v[es]]
            c = edge_c[es]
            fpG1 = fpG1 - _edge_contrib(hu, hv, c, E_SALT1)
            fpG2 = fpG2 - _edge_contrib(gu, gv, c, E_SALT2)
            if u_edge_new[d] == 1:
                edge_len -= 1
            else:
                edge_c[es] = c - 1
                fpG1 = fpG1 + _edge_contrib(hu, hv, c - 1, E_SALT1)
                fpG2 = fpG2 + _edge_contrib(gu, gv, c - 1, E_SALT2)
            choice[d] += 1
            continue
        # apply step choice[d] at depth d
        k = choice[d]
        u = node_at[d]
        v = u
        for p in range(offsets[k], offsets[k + 1]):
            sym = letters[p]
            c = 2 * (sym if sym > 0 else -sym) - 2 + (1 if sym < 0 else 0)
            if v != 0 and par_code[v] == (c ^ 1):
                v = parent[v]
            else:
                w = child[v, c]
                if w < 0:
                    if node_count >= node_cap:
                        return -1
                    w = node_count
                    node_count += 1
                    parent[w] = v
                    par_code[w] = c
                    h1[w] = _mix64(h1[v] + (np.uint64(c) + U1) * M1_U)
                    h2[w] = _mix64(h2[v] + (np.uint64(c) + U1) * M2_U)
                    child[v, c] = w
                v = w
        node_at[d + 1] = v
        sup_cnt[k] += 1
        es = -1
        for q in range(edge_len):
            if edge_u[q] == u and edge_v[q] == v:
                es = q
                break
        if es < 0:
            es = edge_len
            edge_u[es] = u
            edge_v[es] = v
            edge_c[es] = 1
            edge_len += 1
            u_edge_new[d] = 1
            fpG1 = fpG1 + _edge_contrib(h1[u], h1[v], 1, E_SALT1)
            fpG2 = fpG2 + _edge_contrib(h2[u], h2[v], 1, E_SALT2)
        else:
            c = edge_c[es]
            fpG1 = fpG1 - _edge_contrib(h1[u], h1[v], c, E_SALT1)
            fpG2 = fpG2 - _edge_contrib(h2[u], h2[v], c, E_SALT2)
            edge_c[es] = c + 1
            fpG1 = fpG1 + _edge_contrib(h1[u], h1[v], c + 1, E_SALT1)
            fpG2 = fpG2 + _edge_contrib(h2[u], h2[v], c + 1, E_SALT2)
            u_edge_new[d] = 0
        u_edge_slot[d] = es
        vs = -1
        for q in range(vis_len):
            if vis_node[q] == v:
                vs = q
                break
        if vs < 0:
            vs = vis_len
            vis_node[vs] = v
            vis_cnt[vs] = 1
            vis_len += 1
            u_vis_new[d] = 1
            fpR1 = fpR1 + _mix64(h1[v] ^ R_SALT1)
            fpR2 = fpR2 + _mix64(h2[v] ^ R_SALT2)
        else:
            vis_cnt[vs] += 1
            u_vis_new[d] = 0
        u_vis_slot[d] = vs
        d += 1
        choice[d] = 0

    return node_count
