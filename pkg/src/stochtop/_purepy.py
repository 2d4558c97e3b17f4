"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin in ``_core.pyx`` with the same signature and
the same floating-point operation order, so both backends make identical
decisions.  The scenario kernel is the one exception: numpy's vectorized
``exp``/``log`` may differ from libm in the last ulp.
"""
from __future__ import annotations

import math

import numpy as np

MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
ARC_SALT = 0xD1B54A32D192ED03
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
TWO_OPT_TOL = 1e-10
BOUNDARY_TOL = 1e-9

# Wichura AS241 (PPND16) coefficients
_A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
      13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
      33430.575583588128105, 2509.0809287301226727)
_B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
      21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
      5226.495278852545925)
_C = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
      3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
      0.0227238449892691845833, 7.7454501427834140764e-4)
_D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
      0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4,
      1.05075007164441684324e-9)
_E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
      0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
      7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
      2.04426310338993978564e-15)


def _poly(c, x):
    acc = c[7]
    for k in range(6, -1, -1):
        acc = acc * x + c[k]
    return acc


# -- counter-based normal deviates (scalar reference) ------------------------

def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


def arc_hash(seed: int, s: int, lo: int, hi: int) -> int:
    k = mix64(seed + GOLDEN)
    k = mix64(k ^ (((s + 1) * GOLDEN) & MASK))
    return mix64(k ^ mix64(((lo << 32) | hi) ^ ARC_SALT))


def to_uniform(h: int) -> float:
    # top 52 bits plus one half is exact in a double, so the result is never 0 or 1
    return ((h >> 12) + 0.5) * 2.220446049250313e-16


def ndtri(p: float) -> float:
    """Inverse standard normal CDF for 0 < p < 1."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val


def sample_value(seed: int, s: int, lo: int, hi: int, t: float, mu: float, sigma: float) -> float:
    if sigma == 0.0:
        return t
    z = ndtri(to_uniform(arc_hash(seed, s, lo, hi)))
    return math.exp(mu + sigma * z)


# -- vectorized scenario kernel ----------------------------------------------

def _mix64_arr(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def _ndtri_arr(p: np.ndarray) -> np.ndarray:
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.where(qt < 0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0, -val, val)
    return out


def normals(seed: int, lo: int, hi: int, s_start: int, s_stop: int) -> np.ndarray:
    s = np.arange(s_start, s_stop, dtype=np.uint64)
    k = np.uint64(mix64(seed + GOLDEN))
    k = _mix64_arr(k ^ ((s + np.uint64(1)) * np.uint64(GOLDEN)))
    h = _mix64_arr(k ^ np.uint64(mix64(((lo << 32) | hi) ^ ARC_SALT)))
    u = ((h >> np.uint64(12)).astype(np.float64) + 0.5) * 2.220446049250313e-16
    return _ndtri_arr(u)


def durations(seed, lo, hi, t, mu, sigma, offsets, s_start, s_stop):
    """Realized duration of every route in scenarios ``s_start..s_stop-1``.

    Arcs of route ``r`` are ``offsets[r]:offsets[r+1]`` in the flat arrays;
    each row is summed in arc order.
    """
    n_routes = len(offsets) - 1
    out = np.zeros((n_routes, s_stop - s_start), dtype=np.float64)
    seed = int(seed) & MASK
    for r in range(n_routes):
        acc = out[r]
        for a in range(offsets[r], offsets[r + 1]):
            if sigma[a] == 0.0:
                acc += t[a]
            else:
                acc += np.exp(mu[a] + sigma[a] * normals(seed, int(lo[a]), int(hi[a]), s_start, s_stop))
    return out


# -- routing kernels ----------------------------------------------------------

def route_length(route, dist) -> float:
    total = 0.0
    for k in range(len(route) - 1):
        total += dist[route[k], route[k + 1]]
    return float(total)


def fits(approx: float, t_max: float, seq, dist) -> bool:
    """Budget test for a candidate route whose length was computed incrementally.

    Away from the boundary the incremental value decides; within
    ``BOUNDARY_TOL`` the canonical left-to-right sum of ``seq()`` does.
    """
    tol = BOUNDARY_TOL * max(1.0, t_max)
    if approx <= t_max - tol:
        return True
    if approx > t_max + tol:
        return False
    return route_length(seq(), dist) <= t_max


def _route_seq(start, succ, first, end):
    seq = [start]
    v = first
    while v != -1:
        seq.append(v)
        v = succ[v]
    seq.append(end)
    return seq


def merge_savings(order_i, order_j, customers, dist, t_max, l_top, pick):
    """Savings merge phase.

    ``order_i``/``order_j`` list the candidate arcs ``i -> j`` in ranked
    order.  At each step the first ``l_top`` admissible entries form the
    window and ``pick(w)`` chooses one (``pick=None`` takes the head).  An
    inadmissible entry never becomes admissible again (routes only grow and
    endpoints only become interior), so dead entries are dropped for good.
    Returns the routes as customer lists, depots excluded.
    """
    size = dist.shape[0]
    end = size - 1
    succ = [-1] * size
    route_of = [-1] * size
    first, last, length, members = {}, {}, {}, {}
    for c in customers:
        route_of[c] = c
        first[c] = last[c] = c
        members[c] = [c]
        length[c] = route_length((0, c, end), dist)
    n_entries = len(order_i)
    alive = bytearray(b"\x01") * n_entries
    head = 0
    while True:
        window = []
        pos = head
        while pos < n_entries and len(window) < l_top:
            if alive[pos]:
                i = order_i[pos]
                j = order_j[pos]
                ri = route_of[i]
                rj = route_of[j]
                ok = ri != rj and last[ri] == i and first[rj] == j
                if ok:
                    approx = ((length[ri] + length[rj]) - (dist[i, end] + dist[0, j])) + dist[i, j]
                    ok = fits(approx, t_max,
                              lambda: _route_seq(0, succ, first[ri], end)[:-1]
                              + _route_seq(0, succ, j, end)[1:], dist)
                if ok:
                    window.append(pos)
                else:
                    alive[pos] = 0
            pos += 1
        while head < n_entries and not alive[head]:
            head += 1
        if not window:
            break
        chosen = window[0] if pick is None or len(window) == 1 else window[pick(len(window))]
        alive[chosen] = 0
        i = order_i[chosen]
        j = order_j[chosen]
        ri = route_of[i]
        rj = route_of[j]
        succ[i] = j
        for v in members[rj]:
            route_of[v] = ri
        members[ri].extend(members.pop(rj))
        last[ri] = last.pop(rj)
        del first[rj], length[rj]
        length[ri] = route_length(_route_seq(0, succ, first[ri], end), dist)
    return [members[r] for r in sorted(members)]


def two_opt(route, dist):
    """First-improvement 2-opt on a start-to-end path; endpoints stay fixed."""
    r = list(route)
    size = len(r)
    improved = True
    while improved:
        improved = False
        for i in range(1, size - 2):
            a = r[i - 1]
            b = r[i]
            for k in range(i + 1, size - 1):
                c = r[k]
                d = r[k + 1]
                delta = (dist[a, c] + dist[b, d]) - (dist[a, b] + dist[c, d])
                if delta < -TWO_OPT_TOL:
                    r[i:k + 1] = r[i:k + 1][::-1]
                    improved = True
                    break
            if improved:
                break
    return r


def insertion_deltas(route, cands, dist):
    """Insertion cost of every candidate at every gap of ``route``."""
    route = np.asarray(route, dtype=np.intp)
    cands = np.asarray(cands, dtype=np.intp)
    a = route[:-1]
    b = route[1:]
    return (dist[a][:, cands].T + dist[cands][:, b]) - dist[a, b]


def replacement_moves(route, cands, rewards, dist, t_max):
    """All improving, budget-feasible swaps of a visited node for a candidate.

    For each interior position ``p`` of ``route`` and each candidate ``j``
    with a larger reward than ``route[p]``, ``j`` goes to its cheapest gap of
    the reduced route (lowest gap on ties).  Returns parallel arrays
    ``(h_pos, j, ins_pos, new_len)``.
    """
    route = list(route)
    cands = np.asarray(cands, dtype=np.intp)
    out_h, out_j, out_pos, out_len = [], [], [], []
    if len(cands) == 0:
        return (np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0, np.intp),
                np.empty(0, np.float64))
    cand_rewards = rewards[cands]
    for p in range(1, len(route) - 1):
        h = route[p]
        better = np.nonzero(cand_rewards > rewards[h])[0]
        if len(better) == 0:
            continue
        reduced = route[:p] + route[p + 1:]
        base = route_length(reduced, dist)
        deltas = insertion_deltas(reduced, cands[better], dist)
        best = np.argmin(deltas, axis=1)
        for row, idx in enumerate(better):
            gap = int(best[row])
            new_len = base + deltas[row, gap]
            j = int(cands[idx])
            if fits(new_len, t_max, lambda: reduced[:gap + 1] + [j] + reduced[gap + 1:], dist):
                out_h.append(p)
                out_j.append(j)
                out_pos.append(gap)
                out_len.append(new_len)
    return (np.asarray(out_h, np.intp), np.asarray(out_j, np.intp),
            np.asarray(out_pos, np.intp), np.asarray(out_len, np.float64))
