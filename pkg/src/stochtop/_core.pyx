# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_purepy`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t ARC_SALT = 0xD1B54A32D192ED03ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double TWO_OPT_TOL = 1e-10
cdef double BOUNDARY_TOL = 1e-9

cdef double[8] A = [3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
                    13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
                    33430.575583588128105, 2509.0809287301226727]
cdef double[8] B = [1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
                    21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
                    5226.495278852545925]
cdef double[8] C = [1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
                    3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
                    0.0227238449892691845833, 7.7454501427834140764e-4]
cdef double[8] D = [1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
                    0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4,
                    1.05075007164441684324e-9]
cdef double[8] E = [6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
                    0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
                    2.71155556874348757815e-5, 2.01033439929228813265e-7]
cdef double[8] F = [1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
                    7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
                    2.04426310338993978564e-15]


cdef inline double _poly(double* c, double x) noexcept nogil:
    cdef double acc = c[7]
    cdef int k
    for k in range(6, -1, -1):
        acc = acc * x + c[k]
    return acc


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline double _ndtri(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, val
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(A, r) / _poly(B, r)
    r = p if q < 0 else 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(C, r) / _poly(D, r)
    else:
        r -= 5.0
        val = _poly(E, r) / _poly(F, r)
    return -val if q < 0 else val


cdef inline double _normal(uint64_t kseed, uint64_t karc, uint64_t s) noexcept nogil:
    cdef uint64_t k = _mix64(kseed ^ ((s + 1) * GOLDEN))
    cdef uint64_t h = _mix64(k ^ karc)
    return _ndtri((<double>(h >> 12) + 0.5) * 2.220446049250313e-16)


cdef inline uint64_t _seed_key(object seed):
    return _mix64(<uint64_t>((int(seed) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF))


cdef inline uint64_t _arc_key(int64_t lo, int64_t hi) noexcept nogil:
    return _mix64(((<uint64_t>lo << 32) | <uint64_t>hi) ^ ARC_SALT)


def ndtri(double p):
    return _ndtri(p)


def sample_value(seed, long s, long lo, long hi, double t, double mu, double sigma):
    if sigma == 0.0:
        return t
    return exp(mu + sigma * _normal(_seed_key(seed), _arc_key(lo, hi), <uint64_t>s))


def normals(seed, long lo, long hi, long s_start, long s_stop):
    cdef uint64_t kseed = _seed_key(seed)
    cdef uint64_t karc = _arc_key(lo, hi)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(s_stop - s_start)
    cdef double[::1] ov = out
    cdef long s
    with nogil:
        for s in range(s_start, s_stop):
            ov[s - s_start] = _normal(kseed, karc, <uint64_t>s)
    return out


def durations(seed, lo, hi, t, mu, sigma, offsets, long s_start, long s_stop):
    cdef const int64_t[::1] lov = np.ascontiguousarray(lo, dtype=np.int64)
    cdef const int64_t[::1] hiv = np.ascontiguousarray(hi, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] muv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef const double[::1] sgv = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef const int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t n_routes = off.shape[0] - 1
    cdef Py_ssize_t n_arcs = lov.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n_routes, s_stop - s_start))
    cdef double[:, ::1] ov = out
    cdef uint64_t kseed = _seed_key(seed)
    cdef uint64_t[::1] karc = np.empty(n_arcs, dtype=np.uint64)
    cdef Py_ssize_t r, a
    cdef long s
    cdef double acc
    for a in range(n_arcs):
        karc[a] = _arc_key(lov[a], hiv[a])
    with nogil:
        for r in range(n_routes):
            for s in range(s_start, s_stop):
                acc = 0.0
                for a in range(off[r], off[r + 1]):
                    if sgv[a] == 0.0:
                        acc = acc + tv[a]
                    else:
                        acc = acc + exp(muv[a] + sgv[a] * _normal(kseed, karc[a], <uint64_t>s))
                ov[r, s - s_start] = acc
    return out


cdef inline double _length(const int64_t* seq, Py_ssize_t size, const double[:, ::1] d) noexcept nogil:
    cdef double total = 0.0
    cdef Py_ssize_t k
    for k in range(size - 1):
        total = total + d[seq[k], seq[k + 1]]
    return total


def route_length(route, dist):
    cdef const int64_t[::1] seq = np.ascontiguousarray(route, dtype=np.int64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    if seq.shape[0] < 2:
        return 0.0
    return _length(&seq[0], seq.shape[0], d)


cdef inline int _decide(double approx, double t_max) noexcept nogil:
    """1 feasible, 0 infeasible, -1 too close to call."""
    cdef double tol = BOUNDARY_TOL * (t_max if t_max > 1.0 else 1.0)
    if approx <= t_max - tol:
        return 1
    if approx > t_max + tol:
        return 0
    return -1


def merge_savings(order_i, order_j, customers, dist, double t_max, long l_top, pick):
    cdef const int64_t[::1] oi = np.ascontiguousarray(order_i, dtype=np.int64)
    cdef const int64_t[::1] oj = np.ascontiguousarray(order_j, dtype=np.int64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t size = d.shape[0]
    cdef int64_t end = size - 1
    cdef int64_t[::1] succ = np.full(size, -1, dtype=np.int64)
    cdef int64_t[::1] route_of = np.full(size, -1, dtype=np.int64)
    cdef int64_t[::1] first = np.full(size, -1, dtype=np.int64)
    cdef int64_t[::1] last = np.full(size, -1, dtype=np.int64)
    cdef double[::1] length = np.zeros(size)
    cdef int64_t[::1] buf = np.empty(size + 2, dtype=np.int64)
    cdef Py_ssize_t n_entries = oi.shape[0]
    cdef cnp.uint8_t[::1] alive = np.ones(n_entries, dtype=np.uint8)
    cdef long w_cap = l_top if l_top < n_entries else n_entries
    cdef int64_t[::1] window = np.empty(w_cap if w_cap > 0 else 1, dtype=np.int64)
    cdef Py_ssize_t head = 0, pos, nb
    cdef long nw, chosen
    cdef int64_t i, j, ri, rj, v, c
    cdef int ok
    cdef double approx
    for c in customers:
        route_of[c] = c
        first[c] = c
        last[c] = c
        buf[0] = 0
        buf[1] = c
        buf[2] = end
        length[c] = _length(&buf[0], 3, d)
    while True:
        nw = 0
        pos = head
        while pos < n_entries and nw < l_top:
            if alive[pos]:
                i = oi[pos]
                j = oj[pos]
                ri = route_of[i]
                rj = route_of[j]
                ok = ri != rj and last[ri] == i and first[rj] == j
                if ok:
                    approx = ((length[ri] + length[rj]) - (d[i, end] + d[0, j])) + d[i, j]
                    ok = _decide(approx, t_max)
                    if ok == -1:
                        nb = 0
                        buf[nb] = 0
                        nb += 1
                        v = first[ri]
                        while v != -1:
                            buf[nb] = v
                            nb += 1
                            v = succ[v]
                        v = j
                        while v != -1:
                            buf[nb] = v
                            nb += 1
                            v = succ[v]
                        buf[nb] = end
                        nb += 1
                        ok = _length(&buf[0], nb, d) <= t_max
                if ok:
                    window[nw] = pos
                    nw += 1
                else:
                    alive[pos] = 0
            pos += 1
        while head < n_entries and not alive[head]:
            head += 1
        if nw == 0:
            break
        if pick is None or nw == 1:
            chosen = window[0]
        else:
            chosen = window[<long>pick(nw)]
        alive[chosen] = 0
        i = oi[chosen]
        j = oj[chosen]
        ri = route_of[i]
        rj = route_of[j]
        succ[i] = j
        v = j
        while v != -1:
            route_of[v] = ri
            v = succ[v]
        last[ri] = last[rj]
        first[rj] = -1
        nb = 0
        buf[nb] = 0
        nb += 1
        v = first[ri]
        while v != -1:
            buf[nb] = v
            nb += 1
            v = succ[v]
        buf[nb] = end
        nb += 1
        length[ri] = _length(&buf[0], nb, d)
    routes = []
    for c in sorted(customers):
        if first[c] == c and route_of[c] == c:
            members = []
            v = c
            while v != -1:
                members.append(v)
                v = succ[v]
            routes.append(members)
    return routes


def two_opt(route, dist):
    cdef int64_t[::1] r = np.array(route, dtype=np.int64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t size = r.shape[0]
    cdef Py_ssize_t i, k, lo, hi
    cdef int64_t a, b, c, e, tmp
    cdef double delta
    cdef bint improved = True
    with nogil:
        while improved:
            improved = False
            for i in range(1, size - 2):
                a = r[i - 1]
                b = r[i]
                for k in range(i + 1, size - 1):
                    c = r[k]
                    e = r[k + 1]
                    delta = (d[a, c] + d[b, e]) - (d[a, b] + d[c, e])
                    if delta < -TWO_OPT_TOL:
                        lo = i
                        hi = k
                        while lo < hi:
                            tmp = r[lo]
                            r[lo] = r[hi]
                            r[hi] = tmp
                            lo += 1
                            hi -= 1
                        improved = True
                        break
                if improved:
                    break
    return [int(x) for x in r]


def insertion_deltas(route, cands, dist):
    cdef int64_t[::1] r = np.ascontiguousarray(route, dtype=np.int64)
    cdef const int64_t[::1] cv = np.ascontiguousarray(cands, dtype=np.int64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t n_gaps = r.shape[0] - 1
    cdef Py_ssize_t n_c = cv.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n_c, n_gaps))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t x, l
    cdef int64_t j
    with nogil:
        for x in range(n_c):
            j = cv[x]
            for l in range(n_gaps):
                ov[x, l] = (d[r[l], j] + d[j, r[l + 1]]) - d[r[l], r[l + 1]]
    return out


def replacement_moves(route, cands, rewards, dist, double t_max):
    cdef int64_t[::1] r = np.ascontiguousarray(route, dtype=np.int64)
    cdef const int64_t[::1] cv = np.ascontiguousarray(cands, dtype=np.int64)
    cdef const double[::1] u = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef const double[:, ::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t size = r.shape[0]
    cdef Py_ssize_t n_c = cv.shape[0]
    cdef int64_t[::1] red = np.empty(size + 1, dtype=np.int64)
    cdef Py_ssize_t p, q, x, l, best_l, nr
    cdef int64_t h, j
    cdef double base, delta, best, new_len
    cdef int ok
    out_h, out_j, out_pos, out_len = [], [], [], []
    for p in range(1, size - 1):
        h = r[p]
        nr = 0
        for q in range(size):
            if q != p:
                red[nr] = r[q]
                nr += 1
        base = _length(&red[0], nr, d)
        for x in range(n_c):
            j = cv[x]
            if not u[j] > u[h]:
                continue
            best_l = 0
            best = (d[red[0], j] + d[j, red[1]]) - d[red[0], red[1]]
            for l in range(1, nr - 1):
                delta = (d[red[l], j] + d[j, red[l + 1]]) - d[red[l], red[l + 1]]
                if delta < best:
                    best = delta
                    best_l = l
            new_len = base + best
            ok = _decide(new_len, t_max)
            if ok == -1:
                # shift the tail right by one to splice j in, measure, then undo
                for q in range(nr, best_l + 1, -1):
                    red[q] = red[q - 1]
                red[best_l + 1] = j
                ok = _length(&red[0], nr + 1, d) <= t_max
                for q in range(best_l + 1, nr):
                    red[q] = red[q + 1]
            if ok:
                out_h.append(p)
                out_j.append(j)
                out_pos.append(best_l)
                out_len.append(new_len)
    return (np.asarray(out_h, np.intp), np.asarray(out_j, np.intp),
            np.asarray(out_pos, np.intp), np.asarray(out_len, np.float64))
