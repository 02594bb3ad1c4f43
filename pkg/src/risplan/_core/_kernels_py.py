"""Pure-numpy implementations of the numerical core kernels.

This module mirrors the compiled extension ``_kernels`` exactly: same
signatures, same arithmetic, same tie-breaking, so that a run produces the
same pivot sequences and intersection results on either backend.  Keep the
two files in sync when touching either.
"""

from __future__ import annotations

import numpy as np

NB_LO, NB_HI, BASIC, NB_FREE = 0, 1, 2, 3

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_MAXITER = 2


FEAS_EPS = 1e-11  # Harris ratio-test feasibility window
PIV_FLOOR = 1e-8  # columns whose best pivot is below this are numerically zero


def simplex_iterate(W, xB, z, basis, vstat, lo, hi, maxiter, tol_d, tol_piv, stall_limit):
    """Run bounded-variable primal simplex pivots in place.

    ``W`` is the dense tableau B^-1 [A | I] over all columns, ``xB`` the
    basic-variable values, ``z`` the reduced costs of a maximization
    objective.  Pricing is Dantzig with lowest-index tie-breaks; after
    ``stall_limit`` consecutive non-improving pivots the rule switches to
    Bland's (lowest eligible index) for the rest of the solve, which makes
    the method anti-cycling while keeping the common case fast.

    The ratio test is a two-pass Harris test: pass one finds the tightest
    step allowing a FEAS_EPS bound excursion, pass two takes the largest
    pivot element within that step (ties to the lowest basis index).  An
    entering column whose best available pivot is below PIV_FLOOR is
    numerically zero: its reduced cost is cleared and pricing moves on.
    In Bland mode the exact lowest-index rules are used instead.

    Returns (status, iterations).
    """
    k, ncol = W.shape
    iters = 0
    bland = stall_limit <= 0
    stall = 0
    span = hi - lo
    while iters < maxiter:
        at_lo = vstat == NB_LO
        at_hi = vstat == NB_HI
        free = vstat == NB_FREE
        score = np.full(ncol, -np.inf)
        score[at_lo] = z[at_lo]
        score[at_hi] = -z[at_hi]
        score[free] = np.abs(z[free])
        movable = span > 0.0
        score[~movable & ~free] = -np.inf
        if bland:
            eligible = score > tol_d
            if not eligible.any():
                return STATUS_OPTIMAL, iters
            j = int(np.argmax(eligible))
        else:
            j = int(np.argmax(score))
            if score[j] <= tol_d:
                return STATUS_OPTIMAL, iters
        if vstat[j] == NB_LO:
            dirn = 1.0
            enter_from = lo[j]
        elif vstat[j] == NB_HI:
            dirn = -1.0
            enter_from = hi[j]
        else:
            dirn = 1.0 if z[j] > 0.0 else -1.0
            enter_from = 0.0

        col = W[:, j].copy()
        w = col * dirn
        blo = lo[basis]
        bhi = hi[basis]
        flip_span = span[j] if vstat[j] != NB_FREE else np.inf

        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(w > tol_piv, xB - blo, np.where(w < -tol_piv, bhi - xB, np.inf))
        room = np.where(np.isfinite(room), np.maximum(room, 0.0), np.inf)
        wabs = np.abs(w)
        cand = (wabs > tol_piv) & np.isfinite(room)
        ratio = np.where(cand, room / np.where(cand, wabs, 1.0), np.inf)

        r_best = -1
        b_best = np.iinfo(np.int64).max
        t_best = flip_span
        if bland:
            if cand.any():
                tmin = float(ratio[cand].min())
                if tmin <= flip_span:
                    hits = np.nonzero(cand & (ratio == tmin))[0]
                    r_best = int(hits[np.argmin(basis[hits])])
                    b_best = int(basis[r_best])
                    t_best = tmin
        else:
            limit = float(np.minimum(flip_span, ((room + FEAS_EPS) / np.where(cand, wabs, 1.0))[cand].min() if cand.any() else np.inf))
            ok = cand & (ratio <= limit)
            if ok.any():
                wsel = np.where(ok, wabs, -1.0)
                wmax = float(wsel.max())
                hits = np.nonzero(wsel == wmax)[0]
                r_best = int(hits[np.argmin(basis[hits])])
                b_best = int(basis[r_best])
                t_best = float(ratio[r_best])
        if not np.isfinite(t_best):
            return STATUS_UNBOUNDED, iters
        if r_best >= 0 and wabs[r_best] < PIV_FLOOR and not bland:
            z[j] = 0.0
            iters += 1
            continue
        leave_lo = r_best >= 0 and w[r_best] > 0.0

        zj = z[j]
        tj = t_best * dirn
        if t_best > 0.0:
            xB -= tj * col
        if r_best < 0:
            vstat[j] = NB_HI if vstat[j] == NB_LO else NB_LO
        else:
            lvar = basis[r_best]
            vstat[lvar] = NB_LO if leave_lo else NB_HI
            basis[r_best] = j
            vstat[j] = BASIC
            xB[r_best] = enter_from + tj
            piv = W[r_best, j]
            Wr = W[r_best]
            Wr /= piv
            f = W[:, j].copy()
            f[r_best] = 0.0
            W -= f[:, None] * Wr
            z -= zj * Wr
            z[j] = 0.0
        iters += 1
        improvement = abs(zj) * t_best
        if improvement > 1e-12:
            stall = 0
        else:
            stall += 1
            if stall >= stall_limit:
                bland = True
    return STATUS_MAXITER, iters


def tri_intersect_pairs(o, d, v0, e1, e2, eps_det=1e-14, eps_bary=1e-12):
    """Moller-Trumbore for K (ray, triangle) pairs, elementwise.

    Returns the ray parameter t per pair (point = o + t d) or NaN when the
    ray misses its triangle.  Edges are inclusive up to ``eps_bary``.
    """
    px = d[:, 1] * e2[:, 2] - d[:, 2] * e2[:, 1]
    py = d[:, 2] * e2[:, 0] - d[:, 0] * e2[:, 2]
    pz = d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]
    det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
    ok = np.abs(det) > eps_det
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = o - v0
    u = (tv[:, 0] * px + tv[:, 1] * py + tv[:, 2] * pz) * inv
    qx = tv[:, 1] * e1[:, 2] - tv[:, 2] * e1[:, 1]
    qy = tv[:, 2] * e1[:, 0] - tv[:, 0] * e1[:, 2]
    qz = tv[:, 0] * e1[:, 1] - tv[:, 1] * e1[:, 0]
    v = (d[:, 0] * qx + d[:, 1] * qy + d[:, 2] * qz) * inv
    t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
    ok &= (u >= -eps_bary) & (u <= 1.0 + eps_bary)
    ok &= (v >= -eps_bary) & (u + v <= 1.0 + eps_bary)
    return np.where(ok, t, np.nan)


def segments_blocked(a, b, v0, e1, e2, skip_a, skip_b, lo_frac, hi_frac):
    """Occlusion query: does any triangle cut the open segment a->b?

    ``skip_a``/``skip_b`` hold triangle ids touching the segment endpoints
    (reflection triangles), excluded from the test; -1 means no exclusion.
    The parametric window (lo_frac, hi_frac) trims the endpoints.
    """
    K = a.shape[0]
    F = v0.shape[0]
    out = np.zeros(K, dtype=bool)
    if F == 0:
        return out
    for i in range(K):
        d = b[i] - a[i]
        ts = tri_intersect_pairs(
            np.broadcast_to(a[i], (F, 3)),
            np.broadcast_to(d, (F, 3)),
            v0,
            e1,
            e2,
        )
        hit = (ts > lo_frac) & (ts < hi_frac)
        if skip_a[i] >= 0:
            hit[skip_a[i]] = False
        if skip_b[i] >= 0:
            hit[skip_b[i]] = False
        out[i] = bool(hit.any())
    return out
