# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical core kernels.

Mirrors ``_kernels_py`` operation for operation; both backends must produce
identical pivot sequences and intersection results.  Compile with
-ffp-contract=off so the arithmetic matches numpy's (no FMA contraction).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport NAN

cnp.import_array()

NB_LO, NB_HI, BASIC, NB_FREE = 0, 1, 2, 3

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_MAXITER = 2

DEF C_NB_LO = 0
DEF C_NB_HI = 1
DEF C_BASIC = 2
DEF C_NB_FREE = 3


DEF FEAS_EPS = 1e-11  # Harris ratio-test feasibility window
DEF PIV_FLOOR = 1e-8  # columns whose best pivot is below this are numerically zero


def simplex_iterate(double[:, ::1] W, double[::1] xB, double[::1] z,
                    long long[::1] basis, signed char[::1] vstat,
                    double[::1] lo, double[::1] hi,
                    long long maxiter, double tol_d, double tol_piv,
                    long long stall_limit):
    """See ``_kernels_py.simplex_iterate``; same contract, compiled."""
    cdef Py_ssize_t k = W.shape[0]
    cdef Py_ssize_t ncol = W.shape[1]
    cdef long long iters = 0
    cdef bint bland = stall_limit <= 0
    cdef long long stall = 0
    cdef Py_ssize_t j, r, c, r_best
    cdef long long b_best, lvar
    cdef double best_score, s, zj, dirn, enter_from, t_best, wr, wa, room, t, tj
    cdef double piv, f, improvement, flip_span, limit, wmax
    cdef bint leave_lo
    cdef double INF = float("inf")
    cdef long long LLMAX = 9223372036854775807

    while iters < maxiter:
        # --- pricing ---
        j = -1
        best_score = tol_d
        if bland:
            for c in range(ncol):
                if vstat[c] == C_NB_LO:
                    if hi[c] - lo[c] > 0.0 and z[c] > tol_d:
                        j = c
                        break
                elif vstat[c] == C_NB_HI:
                    if hi[c] - lo[c] > 0.0 and -z[c] > tol_d:
                        j = c
                        break
                elif vstat[c] == C_NB_FREE:
                    if z[c] > tol_d or -z[c] > tol_d:
                        j = c
                        break
        else:
            for c in range(ncol):
                if vstat[c] == C_NB_LO:
                    s = z[c]
                    if hi[c] - lo[c] <= 0.0:
                        continue
                elif vstat[c] == C_NB_HI:
                    s = -z[c]
                    if hi[c] - lo[c] <= 0.0:
                        continue
                elif vstat[c] == C_NB_FREE:
                    s = z[c] if z[c] > 0.0 else -z[c]
                else:
                    continue
                if s > best_score:
                    best_score = s
                    j = c
        if j < 0:
            return STATUS_OPTIMAL, iters

        if vstat[j] == C_NB_LO:
            dirn = 1.0
            enter_from = lo[j]
        elif vstat[j] == C_NB_HI:
            dirn = -1.0
            enter_from = hi[j]
        else:
            dirn = 1.0 if z[j] > 0.0 else -1.0
            enter_from = 0.0

        # --- ratio test (Harris two-pass outside Bland mode) ---
        if vstat[j] != C_NB_FREE:
            flip_span = hi[j] - lo[j]
        else:
            flip_span = INF
        r_best = -1
        b_best = LLMAX
        t_best = flip_span
        if bland:
            for r in range(k):
                wr = W[r, j] * dirn
                if wr > tol_piv:
                    room = xB[r] - lo[basis[r]]
                elif wr < -tol_piv:
                    room = hi[basis[r]] - xB[r]
                else:
                    continue
                if room != room or room == INF:
                    continue
                if room < 0.0:
                    room = 0.0
                wa = wr if wr > 0.0 else -wr
                t = room / wa
                if t < t_best or (t == t_best and basis[r] < b_best):
                    t_best = t
                    r_best = r
                    b_best = basis[r]
        else:
            limit = flip_span
            for r in range(k):
                wr = W[r, j] * dirn
                if wr > tol_piv:
                    room = xB[r] - lo[basis[r]]
                elif wr < -tol_piv:
                    room = hi[basis[r]] - xB[r]
                else:
                    continue
                if room != room or room == INF:
                    continue
                if room < 0.0:
                    room = 0.0
                wa = wr if wr > 0.0 else -wr
                t = (room + FEAS_EPS) / wa
                if t < limit:
                    limit = t
            wmax = -1.0
            for r in range(k):
                wr = W[r, j] * dirn
                if wr > tol_piv:
                    room = xB[r] - lo[basis[r]]
                elif wr < -tol_piv:
                    room = hi[basis[r]] - xB[r]
                else:
                    continue
                if room != room or room == INF:
                    continue
                if room < 0.0:
                    room = 0.0
                wa = wr if wr > 0.0 else -wr
                t = room / wa
                if t <= limit:
                    if wa > wmax or (wa == wmax and basis[r] < b_best):
                        wmax = wa
                        r_best = r
                        b_best = basis[r]
            if r_best >= 0:
                wr = W[r_best, j] * dirn
                wa = wr if wr > 0.0 else -wr
                if wr > 0.0:
                    room = xB[r_best] - lo[basis[r_best]]
                else:
                    room = hi[basis[r_best]] - xB[r_best]
                if room < 0.0:
                    room = 0.0
                t_best = room / wa
        if t_best == INF:
            return STATUS_UNBOUNDED, iters
        if r_best >= 0 and not bland:
            wr = W[r_best, j] * dirn
            wa = wr if wr > 0.0 else -wr
            if wa < PIV_FLOOR:
                z[j] = 0.0
                iters += 1
                continue
        leave_lo = r_best >= 0 and W[r_best, j] * dirn > 0.0

        zj = z[j]
        tj = t_best * dirn
        if t_best > 0.0:
            for r in range(k):
                xB[r] = xB[r] - tj * W[r, j]
        if r_best < 0:
            vstat[j] = C_NB_HI if vstat[j] == C_NB_LO else C_NB_LO
        else:
            lvar = basis[r_best]
            vstat[lvar] = C_NB_LO if leave_lo else C_NB_HI
            basis[r_best] = j
            vstat[j] = C_BASIC
            xB[r_best] = enter_from + tj
            piv = W[r_best, j]
            for c in range(ncol):
                W[r_best, c] = W[r_best, c] / piv
            for r in range(k):
                if r == r_best:
                    continue
                f = W[r, j]
                if f != 0.0:
                    for c in range(ncol):
                        W[r, c] = W[r, c] - f * W[r_best, c]
            for c in range(ncol):
                z[c] = z[c] - zj * W[r_best, c]
            z[j] = 0.0
        iters += 1
        improvement = (zj if zj >= 0.0 else -zj) * t_best
        if improvement > 1e-12:
            stall = 0
        else:
            stall += 1
            if stall >= stall_limit:
                bland = True
    return STATUS_MAXITER, iters


cdef inline double _mt_one(double ox, double oy, double oz,
                           double dx, double dy, double dz,
                           double ax, double ay, double az,
                           double e1x, double e1y, double e1z,
                           double e2x, double e2y, double e2z,
                           double eps_det, double eps_bary) nogil:
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    cdef double inv, tvx, tvy, tvz, u, qx, qy, qz, v, t
    if det <= eps_det and det >= -eps_det:
        return NAN
    inv = 1.0 / det
    tvx = ox - ax
    tvy = oy - ay
    tvz = oz - az
    u = (tvx * px + tvy * py + tvz * pz) * inv
    if u < -eps_bary or u > 1.0 + eps_bary:
        return NAN
    qx = tvy * e1z - tvz * e1y
    qy = tvz * e1x - tvx * e1z
    qz = tvx * e1y - tvy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -eps_bary or u + v > 1.0 + eps_bary:
        return NAN
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    return t


def tri_intersect_pairs(double[:, ::1] o, double[:, ::1] d,
                        double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                        double eps_det=1e-14, double eps_bary=1e-12):
    """See ``_kernels_py.tri_intersect_pairs``."""
    cdef Py_ssize_t K = o.shape[0]
    out = np.empty(K, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t i
    for i in range(K):
        res[i] = _mt_one(o[i, 0], o[i, 1], o[i, 2],
                         d[i, 0], d[i, 1], d[i, 2],
                         v0[i, 0], v0[i, 1], v0[i, 2],
                         e1[i, 0], e1[i, 1], e1[i, 2],
                         e2[i, 0], e2[i, 1], e2[i, 2],
                         eps_det, eps_bary)
    return out


def segments_blocked(double[:, ::1] a, double[:, ::1] b,
                     double[:, ::1] v0, double[:, ::1] e1, double[:, ::1] e2,
                     long long[::1] skip_a, long long[::1] skip_b,
                     double lo_frac, double hi_frac):
    """See ``_kernels_py.segments_blocked``."""
    cdef Py_ssize_t K = a.shape[0]
    cdef Py_ssize_t F = v0.shape[0]
    out = np.zeros(K, dtype=bool)
    cdef signed char[::1] res = out.view(np.int8)
    cdef Py_ssize_t i, f
    cdef double dx, dy, dz, t
    for i in range(K):
        dx = b[i, 0] - a[i, 0]
        dy = b[i, 1] - a[i, 1]
        dz = b[i, 2] - a[i, 2]
        for f in range(F):
            if f == skip_a[i] or f == skip_b[i]:
                continue
            t = _mt_one(a[i, 0], a[i, 1], a[i, 2], dx, dy, dz,
                        v0[f, 0], v0[f, 1], v0[f, 2],
                        e1[f, 0], e1[f, 1], e1[f, 2],
                        e2[f, 0], e2[f, 1], e2[f, 2],
                        1e-14, 1e-12)
            if t == t and t > lo_frac and t < hi_frac:
                res[i] = 1
                break
    return out
