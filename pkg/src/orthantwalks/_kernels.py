"""Compiled inner loops (numba).

The scan screen below only rejects a step set when the exact Python
classifier would reject it too; everything it lets through is re-examined
by :mod:`orthantwalks.scan` with the reference code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba as nb
import numpy as np

from .algebra import MERSENNE61

SCREEN_PRIME = (1 << 31) - 1

# stage codes, in the order the filters are applied
STAGE_CANONICAL = 0
STAGE_UNUSED = 1
STAGE_HADAMARD = 2
STAGE_DIMENSION = 3
STAGE_GROUP = 4
STAGE_PASSED = 5
N_STAGES = 6


@dataclass(frozen=True)
class Tables:
    D: int
    n: int
    steps: np.ndarray  # (n, D) int64
    perm_table: np.ndarray  # (D!, n) int64


@lru_cache(maxsize=None)
def tables(D: int) -> Tables:
    from .stepset import _perm_bit_table, step_array

    steps = step_array(D).astype(np.int64)
    return Tables(D, steps.shape[0], steps, _perm_bit_table(D).copy())


# --------------------------------------------------------------------------
# enumeration and canonical forms


@nb.njit(cache=True)
def _next_colex(c, m, limit):
    for j in range(m):
        nxt = c[j + 1] if j + 1 < m else limit
        if c[j] + 1 < nxt:
            c[j] += 1
            for l in range(j):
                c[l] = l
            return True
    return False


@nb.njit(cache=True)
def _is_canonical(idx, k, perm_table, img):
    # mask comparison == lexicographic comparison of descending index lists
    for q in range(1, perm_table.shape[0]):
        for t in range(k):
            v = perm_table[q, idx[t]]
            u = t
            while u > 0 and img[u - 1] > v:
                img[u] = img[u - 1]
                u -= 1
            img[u] = v
        for t in range(k - 1, -1, -1):
            if img[t] < idx[t]:
                return False
            if img[t] > idx[t]:
                break
    return True


@nb.njit(cache=True)
def _fill_idx(idx, c, m, top, t):
    for j in range(m):
        idx[j] = c[j]
    for j in range(t):
        idx[m + j] = top[t - 1 - j]


@nb.njit(cache=True)
def _canonical_combos(perm_table, n, k, top, capacity):
    t = top.shape[0]
    m = k - t
    limit = top[t - 1] if t > 0 else n
    out = np.empty((capacity, k), dtype=np.int64)
    c = np.empty(max(m, 1), dtype=np.int64)
    for j in range(m):
        c[j] = j
    idx = np.empty(max(k, 1), dtype=np.int64)
    img = np.empty(max(k, 1), dtype=np.int64)
    raw = 0
    n_out = 0
    if m > limit:
        return 0, out[:0]
    while True:
        raw += 1
        _fill_idx(idx, c, m, top, t)
        if _is_canonical(idx, k, perm_table, img):
            for j in range(k):
                out[n_out, j] = idx[j]
            n_out += 1
        if not _next_colex(c, m, limit):
            break
    return raw, out[:n_out]


def _chunk_capacity(n: int, k: int, top) -> int:
    t = len(top)
    limit = top[-1] if t else n
    return max(math.comb(limit, k - t), 1)


def canonical_combos(tab: Tables, k: int, top: np.ndarray):
    """(raw count, canonical index rows) for one enumeration chunk."""
    return _canonical_combos(tab.perm_table, tab.n, k, top, _chunk_capacity(tab.n, k, top))


# --------------------------------------------------------------------------
# unused steps


@nb.njit(cache=True)
def _used_pass(steps, sel, kept, k, D, bound, visited, stamp, queue, used):
    """One BFS in [0, bound]^D from the origin; returns number of kept steps used."""
    side = bound + 1
    n_kept = 0
    for j in range(k):
        used[j] = 0
        if kept[j]:
            n_kept += 1
    n_used = 0
    head = 0
    tail = 1
    for d in range(D):
        queue[0, d] = 0
    visited[0] = stamp
    pos = np.empty(D, dtype=np.int64)
    while head < tail:
        for j in range(k):
            if not kept[j]:
                continue
            ok = True
            inside = True
            lin = 0
            for d in range(D):
                v = queue[head, d] + steps[sel[j], d]
                if v < 0:
                    ok = False
                    break
                if v > bound:
                    inside = False
                pos[d] = v
                lin = lin * side + v
            if not ok:
                continue
            if used[j] == 0:
                used[j] = 1
                n_used += 1
                if n_used == n_kept:
                    return n_used
            if inside and visited[lin] != stamp:
                visited[lin] = stamp
                for d in range(D):
                    queue[tail, d] = pos[d]
                tail += 1
        head += 1
    return n_used


@nb.njit(cache=True)
def _unused_fixed_point(steps, sel, k, D, bound, visited, stamp, queue, used, kept):
    for j in range(k):
        kept[j] = 1
    while True:
        n_kept = 0
        for j in range(k):
            n_kept += kept[j]
        if n_kept == 0:
            return stamp
        n_used = _used_pass(steps, sel, kept, k, D, bound, visited, stamp, queue, used)
        stamp += 1
        if n_used == n_kept:
            return stamp
        for j in range(k):
            if kept[j] and not used[j]:
                kept[j] = 0


def kept_steps(tab: Tables, indices, bound: int) -> np.ndarray:
    """Flags (per given index) of steps surviving the unused-step fixed point."""
    sel = np.asarray(indices, dtype=np.int64)
    k = len(sel)
    cells = (bound + 1) ** tab.D
    visited = np.zeros(cells, dtype=np.int64)
    queue = np.empty((cells, tab.D), dtype=np.int64)
    kept = np.zeros(max(k, 1), dtype=np.int64)
    used = np.zeros(max(k, 1), dtype=np.int64)
    _unused_fixed_point(tab.steps, sel, k, tab.D, bound, visited, 1, queue, used, kept)
    return kept[:k].astype(bool)


# --------------------------------------------------------------------------
# Hadamard splits


@nb.njit(cache=True)
def _hadamard_first(steps, sel, k, D):
    n_codes = 1
    for _ in range(D):
        n_codes *= 3
    seen_u = np.zeros(n_codes, dtype=np.int64)
    seen_w = np.zeros(n_codes, dtype=np.int64)
    stamp = 0
    for part in range(1, (1 << D) - 1):
        stamp += 1
        n_r = 0
        n_u = 0
        n_w = 0
        for j in range(k):
            cu = 0
            cw = 0
            w_nonzero = False
            for d in range(D):
                v = steps[sel[j], d]
                if part >> d & 1:
                    cu = 3 * cu + v + 1
                else:
                    cw = 3 * cw + v + 1
                    if v != 0:
                        w_nonzero = True
            if not w_nonzero:
                continue
            n_r += 1
            if seen_u[cu] != stamp:
                seen_u[cu] = stamp
                n_u += 1
            if seen_w[cw] != stamp:
                seen_w[cw] = stamp
                n_w += 1
        if n_r > 0 and n_r == n_u * n_w:
            return part
    return 0


def hadamard_part(tab: Tables, indices) -> int:
    sel = np.asarray(indices, dtype=np.int64)
    return int(_hadamard_first(tab.steps, sel, len(sel), tab.D))


# --------------------------------------------------------------------------
# model dimension, same decision as filters.model_dimension


@nb.njit(cache=True)
def _det(M, m):
    if m == 1:
        return M[0, 0]
    if m == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
            - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
            + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))


@nb.njit(cache=True)
def _certified(steps, sel, k, D, i, A, b, c, M, lam):
    """Nonnegative multipliers with s_i >= sum_j lambda_j s_j on every step exist.

    The feasible region lies in the nonnegative orthant, so it is empty or
    has a vertex; vertices are found by Cramer's rule on every choice of
    D - 1 tight constraints, in integers.
    """
    m = D - 1
    n_rows = 0
    all_nonneg = True
    for j in range(k):
        u = 0
        for d in range(D):
            if d != i:
                A[n_rows, u] = steps[sel[j], d]
                u += 1
        b[n_rows] = steps[sel[j], i]
        if b[n_rows] < 0:
            all_nonneg = False
        n_rows += 1
    if all_nonneg:
        return True
    for u in range(m):
        for w in range(m):
            A[n_rows, w] = -1 if w == u else 0
        b[n_rows] = 0
        n_rows += 1
    for q in range(m):
        c[q] = q
    while True:
        for r in range(m):
            for w in range(m):
                M[r, w] = A[c[r], w]
        det = _det(M, m)
        if det != 0:
            for w in range(m):
                for r in range(m):
                    M[r, w] = b[c[r]]
                lam[w] = _det(M, m)
                for r in range(m):
                    M[r, w] = A[c[r], w]
            if det < 0:
                det = -det
                for w in range(m):
                    lam[w] = -lam[w]
            ok = True
            for r in range(n_rows):
                acc = 0
                for w in range(m):
                    acc += A[r, w] * lam[w]
                if acc > b[r] * det:
                    ok = False
                    break
            if ok:
                return True
        if not _next_colex(c, m, n_rows):
            return False


@nb.njit(cache=True)
def _missing_witnesses(steps, sel, k, D, pending, depth, visited, stamp, queue, dist):
    """Coordinates (bit mask, from ``pending``) whose constraint no walk of length <= depth violates.

    Totals with and without the constraint on i differ at some length up to
    ``depth`` exactly when a confined walk of length < depth reaches a point
    with x_i = 0 from which a step with s_i = -1 keeps the other coordinates
    nonnegative.
    """
    side = depth
    head = 0
    tail = 1
    for d in range(D):
        queue[0, d] = 0
    dist[0] = 0
    visited[0] = stamp
    while head < tail:
        for i in range(D):
            if not (pending >> i & 1) or queue[head, i] != 0:
                continue
            for j in range(k):
                if steps[sel[j], i] != -1:
                    continue
                ok = True
                for d in range(D):
                    if d != i and queue[head, d] + steps[sel[j], d] < 0:
                        ok = False
                        break
                if ok:
                    pending &= ~(1 << i)
                    break
        if pending == 0:
            return 0
        if dist[head] < depth - 1:
            for j in range(k):
                ok = True
                lin = 0
                for d in range(D):
                    v = queue[head, d] + steps[sel[j], d]
                    if v < 0:
                        ok = False
                        break
                    lin = lin * side + v
                if ok and visited[lin] != stamp:
                    visited[lin] = stamp
                    for d in range(D):
                        queue[tail, d] = queue[head, d] + steps[sel[j], d]
                    dist[tail] = dist[head] + 1
                    tail += 1
        head += 1
    return pending


@nb.njit(cache=True)
def _dimension_reduced(steps, sel, k, D, depth, A, b, c, M, lam, visited, stamp, queue, dist):
    pending = 0
    for i in range(D):
        if _certified(steps, sel, k, D, i, A, b, c, M, lam):
            return True
        pending |= 1 << i
    return _missing_witnesses(steps, sel, k, D, pending, depth, visited, stamp, queue, dist) != 0


def _dimension_buffers(D: int, k: int, depth: int):
    cells = depth**D
    return (np.empty((k + D, max(D - 1, 1)), dtype=np.int64), np.empty(k + D, dtype=np.int64),
            np.empty(max(D - 1, 1), dtype=np.int64), np.empty((3, 3), dtype=np.int64),
            np.empty(max(D - 1, 1), dtype=np.int64), np.zeros(cells, dtype=np.int64),
            np.empty((cells, D), dtype=np.int64), np.empty(cells, dtype=np.int64))


def dimension_reduced(tab: Tables, indices, depth: int = 12) -> bool:
    """Whether the exact dimension filter finds a redundant coordinate."""
    sel = np.asarray(indices, dtype=np.int64)
    A, b, c, M, lam, visited, queue, dist = _dimension_buffers(tab.D, len(sel), depth)
    return bool(_dimension_reduced(tab.steps, sel, len(sel), tab.D, depth, A, b, c, M, lam,
                                   visited, 1, queue, dist))


# --------------------------------------------------------------------------
# group orbit screen, modulo a 31-bit prime


@nb.njit(cache=True)
def _inv31(a, p):
    # extended Euclid; a in [1, p)
    t, nt = 0, 1
    r, nr = p, a
    while nr != 0:
        q = r // nr
        t, nt = nt, t - q * nt
        r, nr = nr, r - q * nr
    if t < 0:
        t += p
    return t


@nb.njit(cache=True)
def _a_sum(steps, sel, k, D, i, sign, x, xi, p):
    total = 0
    for j in range(k):
        s = steps[sel[j]]
        if s[i] != sign:
            continue
        term = 1
        for d in range(D):
            if d == i:
                continue
            if s[d] == 1:
                term = term * x[d] % p
            elif s[d] == -1:
                term = term * xi[d] % p
        total += term
    return total % p


@nb.njit(cache=True)
def _orbit_size(steps, sel, k, D, start, bound, p, X, XI, table):
    """Size of the orbit of ``start``; bound+1 if larger; -1 on a singular map."""
    hmask = table.shape[0] - 1
    for h in range(table.shape[0]):
        table[h] = -1
    for d in range(D):
        X[0, d] = start[d]
        XI[0, d] = _inv31(start[d], p)
    h = 0
    for d in range(D):
        h = (h * 1000003 + X[0, d]) & 0x7FFFFFFFFFFF
    table[h & hmask] = 0
    size = 1
    head = 0
    x = np.empty(D, dtype=np.int64)
    xi = np.empty(D, dtype=np.int64)
    while head < size:
        for i in range(D):
            for d in range(D):
                x[d] = X[head, d]
                xi[d] = XI[head, d]
            ap = _a_sum(steps, sel, k, D, i, 1, x, xi, p)
            am = _a_sum(steps, sel, k, D, i, -1, x, xi, p)
            xa = x[i] * ap % p
            den = xa * am % p
            if den == 0:
                return -1
            t = _inv31(den, p)
            x[i] = am * am % p * t % p
            xi[i] = xa * xa % p * t % p
            h = 0
            for d in range(D):
                h = (h * 1000003 + x[d]) & 0x7FFFFFFFFFFF
            slot = h & hmask
            found = False
            while table[slot] >= 0:
                e = table[slot]
                same = True
                for d in range(D):
                    if X[e, d] != x[d]:
                        same = False
                        break
                if same:
                    found = True
                    break
                slot = (slot + 1) & hmask
            if not found:
                if size > bound:
                    return bound + 1
                table[slot] = size
                for d in range(D):
                    X[size, d] = x[d]
                    XI[size, d] = xi[d]
                size += 1
        head += 1
    return size


def _screen_buffers(D: int, bound: int):
    cap = bound + 2
    size = 1
    while size < 4 * cap:
        size <<= 1
    return (np.empty((cap, D), dtype=np.int64), np.empty((cap, D), dtype=np.int64),
            np.empty(size, dtype=np.int64))


def orbit_size_screen(tab: Tables, indices, start, bound: int) -> int:
    sel = np.asarray(indices, dtype=np.int64)
    X, XI, table = _screen_buffers(tab.D, bound)
    return int(_orbit_size(tab.steps, sel, len(sel), tab.D, np.asarray(start, dtype=np.int64),
                           bound, SCREEN_PRIME, X, XI, table))


# --------------------------------------------------------------------------
# scan screen


@nb.njit(cache=True)
def _kept_all(kept, k):
    for j in range(k):
        kept[j] = 1
    return kept


@nb.njit(cache=True)
def _screen_chunk(steps, perm_table, n, D, k, top, box_bound, group_bound, start,
                  capacity, record_all, depth):
    t = top.shape[0]
    m = k - t
    limit = top[t - 1] if t > 0 else n
    counts = np.zeros(N_STAGES + 1, dtype=np.int64)  # [raw, per-stage rejections..., passed]
    passed = np.empty((capacity if record_all else 1024, k), dtype=np.int64)
    codes = np.empty(passed.shape[0], dtype=np.int64)
    n_passed = 0
    if m > limit:
        return counts, passed[:0], codes[:0]
    c = np.empty(max(m, 1), dtype=np.int64)
    for j in range(m):
        c[j] = j
    idx = np.empty(max(k, 1), dtype=np.int64)
    img = np.empty(max(k, 1), dtype=np.int64)
    cells = 1
    for _ in range(D):
        cells *= box_bound + 1
    visited = np.zeros(cells, dtype=np.int64)
    queue = np.empty((cells, D), dtype=np.int64)
    kept = np.zeros(max(k, 1), dtype=np.int64)
    used = np.zeros(max(k, 1), dtype=np.int64)
    stamp = 1
    cap = group_bound + 2
    X = np.empty((cap, D), dtype=np.int64)
    XI = np.empty((cap, D), dtype=np.int64)
    hsize = 1
    while hsize < 4 * cap:
        hsize <<= 1
    htable = np.empty(hsize, dtype=np.int64)
    A = np.empty((k + D, max(D - 1, 1)), dtype=np.int64)
    b = np.empty(k + D, dtype=np.int64)
    cc = np.empty(max(D - 1, 1), dtype=np.int64)
    M = np.empty((3, 3), dtype=np.int64)
    lam = np.empty(max(D - 1, 1), dtype=np.int64)
    dcells = 1
    for _ in range(D):
        dcells *= depth
    dvisited = np.zeros(dcells, dtype=np.int64)
    dqueue = np.empty((dcells, D), dtype=np.int64)
    ddist = np.empty(dcells, dtype=np.int64)
    dstamp = 1
    full = (1 << (2 * D)) - 1
    while True:
        counts[0] += 1
        _fill_idx(idx, c, m, top, t)
        if not _is_canonical(idx, k, perm_table, img):
            code = STAGE_CANONICAL
        else:
            cover = 0
            for j in range(k):
                for d in range(D):
                    v = steps[idx[j], d]
                    if v == -1:
                        cover |= 1 << d
                    elif v == 1:
                        cover |= 1 << (D + d)
            code = STAGE_PASSED
            # a coordinate with -1 steps but no +1 step makes those steps unused
            for d in range(D):
                if (cover >> d & 1) and not (cover >> (D + d) & 1):
                    code = STAGE_UNUSED
                    break
            if code == STAGE_PASSED:
                v_used = _used_pass(steps, idx, _kept_all(kept, k), k, D, box_bound,
                                    visited, stamp, queue, used)
                stamp += 1
                if v_used < k:
                    code = STAGE_UNUSED
            if code == STAGE_PASSED and _hadamard_first(steps, idx, k, D) != 0:
                code = STAGE_HADAMARD
            # a coordinate without -1 steps is redundant (zero multipliers); otherwise the full test
            if code == STAGE_PASSED and (cover & ((1 << D) - 1)) != (1 << D) - 1:
                code = STAGE_DIMENSION
            if code == STAGE_PASSED:
                if _dimension_reduced(steps, idx, k, D, depth, A, b, cc, M, lam, dvisited, dstamp, dqueue, ddist):
                    code = STAGE_DIMENSION
                dstamp += 1
            if code == STAGE_PASSED and cover == full:
                size = _orbit_size(steps, idx, k, D, start, group_bound, SCREEN_PRIME, X, XI, htable)
                if size > group_bound:
                    code = STAGE_GROUP
        if code != STAGE_CANONICAL:
            if record_all or code == STAGE_PASSED:
                if n_passed == passed.shape[0]:
                    bigger = np.empty((2 * n_passed, k), dtype=np.int64)
                    bigger[:n_passed] = passed
                    passed = bigger
                    bigger_codes = np.empty(2 * n_passed, dtype=np.int64)
                    bigger_codes[:n_passed] = codes
                    codes = bigger_codes
                for j in range(k):
                    passed[n_passed, j] = idx[j]
                codes[n_passed] = code
                n_passed += 1
        counts[1 + code] += 1
        if not _next_colex(c, m, limit):
            break
    return counts, passed[:n_passed], codes[:n_passed]


def screen_chunk(tab: Tables, k: int, top, box_bound: int, group_bound: int, start, record_all: bool,
                 depth: int = 12):
    """Run the cheap filters on one enumeration chunk.

    Returns ``(counts, rows, codes)``: ``counts[0]`` is the number of raw sets
    and ``counts[1 + stage]`` the number stopped at each stage (the last slot
    counts sets passed on).  ``rows`` lists the passed sets, or every
    canonical set when ``record_all``; ``codes`` gives each row's stage.
    ``depth`` is the count-comparison depth of the dimension filter.
    """
    top = np.asarray(top, dtype=np.int64)
    capacity = _chunk_capacity(tab.n, k, tuple(top)) if record_all else 1
    return _screen_chunk(tab.steps, tab.perm_table, tab.n, tab.D, k, top, box_bound, group_bound,
                         np.asarray(start, dtype=np.int64), capacity, record_all, depth)


# --------------------------------------------------------------------------
# modular contraction for Laurent polynomial evaluation


@nb.njit(cache=True)
def _mulmod61(a, b):
    mask32 = np.uint64(0xFFFFFFFF)
    a_hi = a >> np.uint64(32)
    a_lo = a & mask32
    b_hi = b >> np.uint64(32)
    b_lo = b & mask32
    p = np.uint64(MERSENNE61)
    hi = a_hi * b_hi  # < 2^58
    mid = a_hi * b_lo + a_lo * b_hi  # < 2^62
    lo = a_lo * b_lo  # < 2^64
    # 2^64 = 2^3, 2^61 = 1 (mod p)
    r = (hi << np.uint64(3)) + (mid >> np.uint64(29)) + ((mid & np.uint64((1 << 29) - 1)) << np.uint64(32))
    r = (r & p) + (r >> np.uint64(61))
    r = r + (lo & p) + (lo >> np.uint64(61))
    r = (r & p) + (r >> np.uint64(61))
    if r >= p:
        r -= p
    return r


@nb.njit(cache=True)
def _mulmod(a, b, p):
    if p == np.uint64(MERSENNE61):
        return _mulmod61(a, b)
    return (a * b) % p


@nb.njit(cache=True)
def _matvec_mod(A, v, p):
    rows, cols = A.shape
    out = np.empty(rows, dtype=np.uint64)
    for r in range(rows):
        acc = np.uint64(0)
        for c in range(cols):
            acc += _mulmod(A[r, c], v[c], p)
            if acc >= p:
                acc -= p
        out[r] = acc
    return out


def check_kernel_prime(p: int) -> None:
    if p != MERSENNE61 and p >= 1 << 32:
        raise ValueError("compiled arithmetic supports 2^61-1 or primes below 2^32")


def contract_mod(table: np.ndarray, vectors, p: int) -> int:
    """``sum_e table[e] * prod_i vectors[i][e_i]`` modulo ``p``.

    ``table`` holds residues; ``vectors[i]`` has length ``table.shape[i]``.
    """
    check_kernel_prime(p)
    pp = np.uint64(p)
    cur = np.ascontiguousarray(table, dtype=np.uint64).reshape(-1)
    for axis in range(table.ndim - 1, -1, -1):
        v = np.asarray(vectors[axis], dtype=np.uint64)
        cur = _matvec_mod(cur.reshape(-1, table.shape[axis]), v, pp)
    return int(cur[0])
