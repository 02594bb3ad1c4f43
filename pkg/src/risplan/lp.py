"""Dense linear programming for the planner's max-min subproblems.

A small, deterministic, two-phase bounded-variable primal simplex.  No
external solver: problem sizes stay within dense reach (a few thousand
variables), determinism matters more than raw speed, and the pivot loop is
compiled (see ``_core``).  Pricing is Dantzig with lowest-index ties and a
permanent switch to Bland's rule after a stall, which prevents cycling.

Equality rows are handled as paired inequalities, so the tableau only ever
contains ``<=`` rows plus slacks.  Rows and the objective are scaled to unit
max magnitude before solving and results are reported in original units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _core

FEAS_TOL = 1e-7
COST_TOL = 1e-9
PIVOT_TOL = 1e-9
STALL_LIMIT = 200


class LpError(ValueError):
    pass


@dataclass
class LinearProgram:
    """maximize c @ v  s.t.  a_ub v <= b_ub,  a_eq v = b_eq,  lo <= v <= hi.

    ``lo`` entries of -inf mark free variables; ``hi`` may be +inf.  All
    coefficients must be finite.
    """

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        n = self.c.shape[0]
        self.a_ub = np.asarray(self.a_ub, dtype=np.float64).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=np.float64).reshape(-1)
        self.a_eq = np.asarray(self.a_eq, dtype=np.float64).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=np.float64).reshape(-1)
        self.lo = np.asarray(self.lo, dtype=np.float64).reshape(-1)
        self.hi = np.asarray(self.hi, dtype=np.float64).reshape(-1)
        if self.a_ub.shape[0] != self.b_ub.shape[0]:
            raise LpError("a_ub/b_ub row mismatch")
        if self.a_eq.shape[0] != self.b_eq.shape[0]:
            raise LpError("a_eq/b_eq row mismatch")
        if self.lo.shape[0] != n or self.hi.shape[0] != n:
            raise LpError("bounds arrays do not match the variable count")
        for name, arr in (("c", self.c), ("a_ub", self.a_ub), ("b_ub", self.b_ub),
                          ("a_eq", self.a_eq), ("b_eq", self.b_eq)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise LpError(f"non-finite coefficients in {name}")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)):
            raise LpError("NaN in bounds")
        if np.any(self.lo > self.hi):
            raise LpError("lo > hi for some variable")
        if np.any(np.isposinf(self.lo)) or np.any(np.isneginf(self.hi)):
            raise LpError("lo may not be +inf, hi may not be -inf")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int = 0


class SimplexWorkspace:
    """Owns the tableau for one LP; supports re-solving after an objective
    swap without losing the current (still primal-feasible) basis."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.n_vars
        a = np.vstack([lp.a_ub, lp.a_eq, -lp.a_eq])
        b = np.concatenate([lp.b_ub, lp.b_eq, -lp.b_eq])
        k = a.shape[0]
        row_max = np.max(np.abs(a), axis=1, initial=0.0) if k else np.zeros(0)
        self.row_scale = np.where(row_max > 0.0, row_max, 1.0)
        self.A = a / self.row_scale[:, None]
        self.b = b / self.row_scale
        self.n = n
        self.k = k
        self.ncol = n + k
        self.lo = np.concatenate([lp.lo, np.zeros(k)])
        self.hi = np.concatenate([lp.hi, np.full(k, np.inf)])
        self.solved = False
        self.W = None
        self.xB = None
        self.z = None
        self.basis = None
        self.vstat = None
        self._set_cost(lp.c)

    def _set_cost(self, c):
        c = np.asarray(c, dtype=np.float64)
        cmax = float(np.max(np.abs(c), initial=0.0))
        self.c_scale = cmax if cmax > 0.0 else 1.0
        self.c_orig = c.copy()
        self.c_ext = np.zeros(self.ncol)
        self.c_ext[: self.n] = c / self.c_scale

    def set_objective(self, c) -> None:
        if c.shape[0] != self.n:
            raise LpError("objective length mismatch")
        self._set_cost(c)
        if self.W is not None and self.W.shape[1] > self.ncol:
            # keep pinned artificial columns at zero cost
            pad = self.W.shape[1] - self.ncol
            self.c_ext = np.concatenate([self.c_ext, np.zeros(pad)])

    def _nonbasic_values(self, vstat, lo, hi):
        vals = np.where(vstat == _core.NB_HI, hi, lo)
        vals = np.where(vstat == _core.NB_FREE, 0.0, vals)
        return np.where(np.isfinite(vals), vals, 0.0)

    def solve(self, start_hint: Optional[np.ndarray] = None, maxiter: int = 200_000,
              stall_limit: int = STALL_LIMIT) -> LpSolution:
        """Two-phase solve from scratch (optionally from a bound-status crash
        hint for the structural variables)."""
        n, k = self.n, self.k
        vstat = np.empty(self.ncol, dtype=np.int8)
        vstat[:n] = np.where(np.isneginf(self.lp.lo), _core.NB_FREE, _core.NB_LO)
        if start_hint is not None:
            hint = np.asarray(start_hint, dtype=np.int8)
            if hint.shape[0] != n:
                raise LpError("start hint length mismatch")
            vstat[:n] = hint
        vstat[n:] = _core.BASIC
        basis = np.arange(n, n + k, dtype=np.int64)
        W = np.concatenate([self.A, np.eye(k)], axis=1)
        xN = self._nonbasic_values(vstat[:n], self.lp.lo, self.lp.hi)
        xB = self.b - self.A @ xN

        n_art = 0
        if k and float(xB.min()) < -FEAS_TOL:
            bad = np.nonzero(xB < -FEAS_TOL)[0]
            n_art = bad.size
            art = np.zeros((k, n_art))
            lo = np.concatenate([self.lo, np.zeros(n_art)])
            hi = np.concatenate([self.hi, np.full(n_art, np.inf)])
            c1 = np.zeros(self.ncol + n_art)
            for idx, r in enumerate(bad):
                art[r, idx] = -1.0
                c1[self.ncol + idx] = -1.0
            W = np.concatenate([W, art], axis=1)
            vstat = np.concatenate([vstat, np.full(n_art, _core.NB_LO, dtype=np.int8)])
            for idx, r in enumerate(bad):
                # pivot the artificial straight into the basis
                W[r] = -W[r]
                xB[r] = -xB[r]
                vstat[basis[r]] = _core.NB_LO
                basis[r] = self.ncol + idx
                vstat[self.ncol + idx] = _core.BASIC
            z = c1 - c1[basis] @ W
            status, it1 = _core.simplex_iterate(
                W, xB, z, basis, vstat, lo, hi, maxiter, COST_TOL, PIVOT_TOL, stall_limit
            )
            if status == _core.STATUS_MAXITER:
                raise LpError("phase-1 iteration cap reached")
            art_vals = xB[np.isin(basis, np.arange(self.ncol, self.ncol + n_art))]
            infeas = float(np.sum(art_vals)) if art_vals.size else 0.0
            if infeas > FEAS_TOL:
                self.solved = False
                return LpSolution("infeasible", None, None, it1)
            hi[self.ncol:] = 0.0  # pin artificials
            self.W, self.xB, self.basis, self.vstat = W, xB, basis, vstat
            self.lo_ext, self.hi_ext = lo, hi
            self.c_ext = np.concatenate([self.c_ext, np.zeros(n_art)])
        else:
            self.W, self.xB, self.basis, self.vstat = W, xB, basis, vstat
            self.lo_ext, self.hi_ext = self.lo.copy(), self.hi.copy()
        return self._phase2(maxiter, stall_limit)

    def _repair_xb(self) -> float:
        """Rebuild the basic values from the tableau's slack block (which is
        exactly B^-1): clears drift the Harris ratio test accrues over long
        pivot runs.  Returns the drift that was removed."""
        n, k = self.n, self.k
        xs = np.zeros(n)
        nb = self.vstat[:n] != _core.BASIC
        xs[nb] = self._nonbasic_values(self.vstat[:n][nb], self.lp.lo[nb], self.lp.hi[nb])
        rhs = self.b - self.A @ xs
        x_true = self.W[:, n : n + k] @ rhs
        drift = float(np.max(np.abs(self.xB - x_true), initial=0.0))
        self.xB[:] = x_true
        return drift

    def _phase2(self, maxiter: int = 200_000, stall_limit: int = STALL_LIMIT) -> LpSolution:
        iters = 0
        for _ in range(4):
            z = self.c_ext - self.c_ext[self.basis] @ self.W
            status, it = _core.simplex_iterate(
                self.W, self.xB, z, self.basis, self.vstat,
                self.lo_ext, self.hi_ext, maxiter, COST_TOL, PIVOT_TOL, stall_limit
            )
            iters += it
            if status == _core.STATUS_UNBOUNDED:
                self.solved = False
                return LpSolution("unbounded", None, None, iters)
            if status == _core.STATUS_MAXITER:
                raise LpError("phase-2 iteration cap reached")
            if self._repair_xb() <= 1e-10:
                break
        self.solved = True
        x = self._assemble()
        return LpSolution("optimal", x, float(self.c_orig @ x), iters)

    def resolve(self) -> LpSolution:
        """Continue pivoting with the current basis (objective may have been
        swapped; the basis stays primal feasible because constraints are
        unchanged)."""
        if self.W is None:
            return self.solve()
        return self._phase2()

    def _assemble(self) -> np.ndarray:
        vals = self._nonbasic_values(self.vstat, self.lo_ext, self.hi_ext)
        vals[self.basis] = self.xB
        x = vals[: self.n]
        # snap to bounds within feasibility noise
        x = np.minimum(np.maximum(x, self.lp.lo), self.lp.hi)
        return x


def _verify(lp: LinearProgram, x: np.ndarray, tol: float = FEAS_TOL) -> float:
    viol = 0.0
    if lp.a_ub.shape[0]:
        viol = max(viol, float(np.max(lp.a_ub @ x - lp.b_ub, initial=0.0)))
    if lp.a_eq.shape[0]:
        viol = max(viol, float(np.max(np.abs(lp.a_eq @ x - lp.b_eq), initial=0.0)))
    viol = max(viol, float(np.max(lp.lo - x, initial=0.0)))
    viol = max(viol, float(np.max(x - lp.hi, initial=0.0)))
    return viol


def solve(lp: LinearProgram, start_hint: Optional[np.ndarray] = None) -> LpSolution:
    """Solve the LP; statuses are reported, never raised.

    When optimal, the returned point is primal feasible within 1e-7 in
    original units (re-checked here; a failed check triggers one careful
    re-solve under Bland's rule before giving up).
    """
    ws = SimplexWorkspace(lp)
    sol = ws.solve(start_hint=start_hint)
    if sol.status != "optimal":
        return sol
    if _verify(lp, sol.x) > FEAS_TOL:
        ws = SimplexWorkspace(lp)
        sol = ws.solve(stall_limit=0)  # Bland's rule from the first pivot
        if sol.status == "optimal" and _verify(lp, sol.x) > FEAS_TOL:
            raise LpError("solver returned an infeasible point twice")
    return sol


def maxmin_epigraph(terms: Sequence[tuple[np.ndarray, float]], base: LinearProgram) -> LinearProgram:
    """Epigraph lift of max_v min_t (coeffs_t @ v + const_t) over ``base``.

    Appends one scalar variable t as the LAST variable, maximizes it, and
    adds a row t <= term for every term.  The base objective is discarded.
    """
    if len(terms) == 0:
        raise LpError("maxmin_epigraph needs at least one term")
    n = base.n_vars
    rows = []
    rhs = []
    for coeffs, const in terms:
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (n,):
            raise LpError("term coefficient length mismatch")
        rows.append(np.concatenate([-coeffs, [1.0]]))
        rhs.append(float(const))
    a_ub = np.vstack([np.concatenate([base.a_ub, np.zeros((base.a_ub.shape[0], 1))], axis=1),
                      np.array(rows)])
    b_ub = np.concatenate([base.b_ub, np.array(rhs)])
    a_eq = np.concatenate([base.a_eq, np.zeros((base.a_eq.shape[0], 1))], axis=1)
    c = np.zeros(n + 1)
    c[n] = 1.0
    return LinearProgram(
        c=c,
        a_ub=a_ub,
        b_ub=b_ub,
        a_eq=a_eq,
        b_eq=base.b_eq.copy(),
        lo=np.concatenate([base.lo, [-np.inf]]),
        hi=np.concatenate([base.hi, [np.inf]]),
    )


def dump_lp(lp: LinearProgram) -> str:
    """Plain-text dump, one row per line, for offline inspection.

    Format:
        vars <n>
        max <c_0> ... <c_{n-1}>
        bnd <lo_i> <hi_i>            (n lines, variable order)
        ub <a_0> ... <a_{n-1}> | <b> (one line per inequality row)
        eq <e_0> ... <e_{n-1}> | <f> (one line per equality row)
    """
    out = [f"vars {lp.n_vars}"]
    out.append("max " + " ".join(repr(v) for v in lp.c))
    for lo_i, hi_i in zip(lp.lo, lp.hi):
        out.append(f"bnd {lo_i!r} {hi_i!r}")
    for row, rhs in zip(lp.a_ub, lp.b_ub):
        out.append("ub " + " ".join(repr(v) for v in row) + f" | {rhs!r}")
    for row, rhs in zip(lp.a_eq, lp.b_eq):
        out.append("eq " + " ".join(repr(v) for v in row) + f" | {rhs!r}")
    return "\n".join(out) + "\n"
