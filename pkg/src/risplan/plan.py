"""Deployment planning: block coordinate ascent over placement, association
and beam spans, followed by binary rounding.

The relaxed problem maximizes the worst-case test-point gain term

    min_t  sum_{m,n} y_tmn * c_tmn / (dx_n * dy_n)

over fractional placements x in [0,1]^N (sum = L), associations y and
direction-cosine spans (dx, dy).  The outer ascent loop alternates an exact
LP solve in (x, y) with inner loops in dx and dy that use the quadratic
transform 1/d -> 2 z - z^2 d with the auxiliary z refreshed between solves.
Every block is solved exactly, so the objective trace never decreases; as a
belt-and-braces guard an outer step that would decrease the objective is
rolled back and the loop reports convergence.

Rounding activates the top-L sites, associates test points greedily along a
deterministic order, recomputes each deployed surface's spans from the set
it actually serves, and emits widened-beam configurations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import lp
from .channel import (
    ArrayGeometry,
    RisConfig,
    broadened_gain_g1,
    broadening_config,
    freq_window,
    min_spans,
    spans_for_subarea,
)
from .geom import Frame3, fronting
from .report import CoverageReport


class PlanningError(ValueError):
    def __init__(self, message, uncovered: Optional[int] = None):
        super().__init__(message)
        self.uncovered = uncovered


@dataclass
class PlanningInstance:
    """Geometry and budget of one planning problem.

    ``bss`` holds (frame, antenna count) per base station; ``css`` the
    candidate-site frames; ``test_points`` a (T, 3) array.  Instances are
    validated eagerly: every test point must be fronted by at least one
    candidate site that also fronts some base station.
    """

    bss: list
    css: list
    test_points: np.ndarray
    budget: int
    ris_geom: ArrayGeometry
    beta: float
    power_w: float
    noise_w: float

    def __post_init__(self):
        self.test_points = np.asarray(self.test_points, dtype=np.float64).reshape(-1, 3)
        n, t = len(self.css), self.test_points.shape[0]
        if t < 1:
            raise PlanningError("instance needs at least one test point")
        if not self.bss:
            raise PlanningError("instance needs at least one base station")
        if not 1 <= self.budget <= n:
            raise PlanningError(f"budget {self.budget} outside [1, {n}]")
        reachable = (self.front_pt_cs & self.cs_has_bs[None, :]).any(axis=1)
        if not reachable.all():
            bad = int(np.nonzero(~reachable)[0][0])
            raise PlanningError(
                f"test point {bad} is not fronted by any base-station-fronted candidate site"
            )

    @property
    def n_sites(self) -> int:
        return len(self.css)

    @property
    def n_bss(self) -> int:
        return len(self.bss)

    @property
    def n_points(self) -> int:
        return self.test_points.shape[0]

    def _cache(self):
        if not hasattr(self, "_geom_cache"):
            m, n, t = self.n_bss, self.n_sites, self.n_points
            front_bs_cs = np.zeros((m, n), dtype=bool)
            d_bs_cs = np.zeros((m, n))
            for j, cs in enumerate(self.css):
                for i, (bs, _) in enumerate(self.bss):
                    front_bs_cs[i, j] = fronting(cs, bs.origin)
                    d_bs_cs[i, j] = np.linalg.norm(bs.origin - cs.origin)
            front_pt_cs = np.zeros((t, n), dtype=bool)
            d_pt_cs = np.zeros((t, n))
            omega = np.zeros((t, n))
            psi = np.zeros((t, n))
            for j, cs in enumerate(self.css):
                loc = (self.test_points - cs.origin) @ cs.rotation
                norms = np.linalg.norm(loc, axis=1)
                if np.any(norms == 0.0):
                    raise PlanningError(f"test point coincides with candidate site {j}")
                front_pt_cs[:, j] = loc[:, 2] >= 0.0
                omega[:, j] = loc[:, 0] / norms
                psi[:, j] = loc[:, 1] / norms
                d_pt_cs[:, j] = norms
            self._geom_cache = dict(
                front_bs_cs=front_bs_cs, d_bs_cs=d_bs_cs, front_pt_cs=front_pt_cs,
                d_pt_cs=d_pt_cs, omega=omega, psi=psi,
            )
        return self._geom_cache

    @property
    def front_bs_cs(self) -> np.ndarray:
        return self._cache()["front_bs_cs"]

    @property
    def front_pt_cs(self) -> np.ndarray:
        return self._cache()["front_pt_cs"]

    @property
    def cs_has_bs(self) -> np.ndarray:
        return self.front_bs_cs.any(axis=0)

    @property
    def omega(self) -> np.ndarray:
        """(T, N) direction cosines of each test point along each site's x' axis."""
        return self._cache()["omega"]

    @property
    def psi(self) -> np.ndarray:
        return self._cache()["psi"]

    @property
    def dist_bs_cs(self) -> np.ndarray:
        return self._cache()["d_bs_cs"]

    @property
    def dist_pt_cs(self) -> np.ndarray:
        return self._cache()["d_pt_cs"]


def build_coefficients(inst: PlanningInstance) -> np.ndarray:
    """Pathloss products c[t, m, n] = d_mn^-beta * d_n(u_t)^-beta, zeroed
    wherever the test point or the base station does not front site n."""
    g_bs = np.where(inst.front_bs_cs, inst.dist_bs_cs ** (-inst.beta), 0.0)
    g_pt = np.where(inst.front_pt_cs, inst.dist_pt_cs ** (-inst.beta), 0.0)
    return g_pt[:, None, :] * g_bs[None, :, :]


def best_bs_per_site(inst: PlanningInstance, c: np.ndarray) -> np.ndarray:
    """Strongest fronting base station per site (-1 if none).

    The ratio c_tmn across m at fixed n is d_mn^-beta, independent of t, so
    for every test point the association mass of site n belongs to the same
    station; this lets the relaxed LP carry one aggregated association
    variable per (t, n) pair and expand it back afterwards.
    """
    gains = np.where(inst.front_bs_cs, inst.dist_bs_cs ** (-inst.beta), -1.0)
    best = np.argmax(gains, axis=0)
    best[~inst.cs_has_bs] = -1
    return best.astype(np.int64)


class _XyProblem:
    """Cached structure of the (x, y)-block LP for one instance."""

    def __init__(self, inst: PlanningInstance, c: np.ndarray):
        t_cnt, n_cnt = inst.n_points, inst.n_sites
        self.best_m = best_bs_per_site(inst, c)
        q = np.zeros((t_cnt, n_cnt))
        for n in range(n_cnt):
            if self.best_m[n] >= 0:
                q[:, n] = c[:, self.best_m[n], n]
        self.q = q
        pair_t, pair_n = np.nonzero(q > 0.0)
        self.pair_t = pair_t
        self.pair_n = pair_n
        self.n_pairs = pair_t.size
        self.inst = inst
        nv = n_cnt + self.n_pairs
        rows = []
        # coverage: sum_n Y_tn = 1 per test point
        a_eq = np.zeros((t_cnt + 1, nv))
        for k in range(self.n_pairs):
            a_eq[pair_t[k], n_cnt + k] = 1.0
        b_eq = np.ones(t_cnt + 1)
        # budget: sum_n x_n = L
        a_eq[t_cnt, :n_cnt] = 1.0
        b_eq[t_cnt] = float(inst.budget)
        # deployment coupling: Y_tn <= x_n (aggregated over stations)
        a_ub = np.zeros((self.n_pairs, nv))
        for k in range(self.n_pairs):
            a_ub[k, n_cnt + k] = 1.0
            a_ub[k, pair_n[k]] = -1.0
        self.base = lp.LinearProgram(
            c=np.zeros(nv),
            a_ub=a_ub,
            b_ub=np.zeros(self.n_pairs),
            a_eq=a_eq,
            b_eq=b_eq,
            lo=np.zeros(nv),
            hi=np.ones(nv),
        )

    def crash_hint(self, x_active: np.ndarray) -> np.ndarray:
        """Bound-status vertex: binary x, each point on its best active site.

        Returns None when the given activation cannot cover every point.
        """
        from . import _core

        n_cnt = self.inst.n_sites
        hint = np.full(n_cnt + self.n_pairs + 1, _core.NB_LO, dtype=np.int8)
        hint[-1] = _core.NB_FREE  # epigraph variable
        hint[:n_cnt][x_active] = _core.NB_HI
        chosen = np.full(self.inst.n_points, -1, dtype=np.int64)
        val = np.full(self.inst.n_points, -1.0)
        for k in range(self.n_pairs):
            t, n = self.pair_t[k], self.pair_n[k]
            if x_active[n] and self.q[t, n] > val[t]:
                val[t] = self.q[t, n]
                chosen[t] = k
        if np.any(chosen < 0):
            return None
        hint[n_cnt + chosen] = _core.NB_HI
        return hint

    def greedy_cover(self) -> Optional[np.ndarray]:
        """Deterministic activation of <= L sites covering all points, padded
        to exactly L by lowest index; None if greedy fails within L."""
        n_cnt, L = self.inst.n_sites, self.inst.budget
        usable = self.q > 0.0
        active = np.zeros(n_cnt, dtype=bool)
        covered = np.zeros(self.inst.n_points, dtype=bool)
        while not covered.all():
            gains = (usable[~covered]).sum(axis=0)
            gains[active] = -1
            pick = int(np.argmax(gains))
            if gains[pick] <= 0:
                return None
            active[pick] = True
            covered |= usable[:, pick]
            if active.sum() > L:
                return None
        for n in range(n_cnt):
            if active.sum() >= L:
                break
            active[n] = True
        return active


def solve_xy_block(inst: PlanningInstance, c: np.ndarray, dx: np.ndarray, dy: np.ndarray,
                   problem: Optional[_XyProblem] = None,
                   hint_active: Optional[np.ndarray] = None):
    """Exact LP solve of the placement/association block at fixed spans.

    Returns (x, y, tau, problem).  ``y`` is expanded to the full (T, M, N)
    tensor with each site's mass on its strongest fronting station.
    """
    if problem is None:
        problem = _XyProblem(inst, c)
    gain = 1.0 / (dx * dy)
    qg = problem.q * gain[None, :]
    scale = float(qg.max())
    if scale <= 0.0:
        raise PlanningError("all gain terms vanish; no fronting-feasible pair")
    terms = []
    for t in range(inst.n_points):
        coeffs = np.zeros(problem.base.n_vars)
        sel = problem.pair_t == t
        # unit-max scaling keeps the epigraph rows well conditioned; the
        # objective is rescaled on the way out
        coeffs[inst.n_sites + np.nonzero(sel)[0]] = qg[t, problem.pair_n[sel]] / scale
        terms.append((coeffs, 0.0))
    lifted = lp.maxmin_epigraph(terms, problem.base)
    hint = None
    active = hint_active if hint_active is not None else problem.greedy_cover()
    if active is not None:
        hint = problem.crash_hint(active)
    sol = lp.solve(lifted, start_hint=hint)
    if sol.status == "infeasible":
        raise PlanningError(
            "relaxed placement LP infeasible: the budget cannot fractionally cover "
            "every test point through fronting sites"
        )
    if sol.status != "optimal":
        raise PlanningError(f"relaxed placement LP reported {sol.status}")
    x = sol.x[: inst.n_sites].copy()
    y = np.zeros((inst.n_points, inst.n_bss, inst.n_sites))
    yvals = sol.x[inst.n_sites : inst.n_sites + problem.n_pairs]
    for k in range(problem.n_pairs):
        y[problem.pair_t[k], problem.best_m[problem.pair_n[k]], problem.pair_n[k]] = yvals[k]
    return x, y, float(sol.objective) * scale, problem


def qt_z_update(delta: np.ndarray) -> np.ndarray:
    """Auxiliary-variable refresh of the quadratic transform: z = 1/delta,
    the maximizer of 2 z - z^2 delta, at which the transformed term equals
    the original ratio exactly."""
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(delta <= 0.0):
        raise PlanningError("spans must be positive for the transform update")
    return 1.0 / delta


_PAIR_ROW_CAP = 200  # per-site cap on pairwise span rows (exact dominance)


def _pair_bound_rows(inst: PlanningInstance, y: np.ndarray, axis: str, floor: float):
    """Per-site lower-bound values of the span variable implied by served
    pairs: for each unordered (t, k) the bound sum_m y_tmn y_kmn |f_t - f_k|
    (station-matched product weighting, which reduces to the served-set span
    once y is binary).  Rows dominated by the floor are dropped; per site
    only the largest ``_PAIR_ROW_CAP`` rows are kept (row dominance: all
    rows bound the same single variable)."""
    freqs = inst.omega if axis == "x" else inst.psi
    rows = []
    for n in range(inst.n_sites):
        yn = y[:, :, n]
        w = yn @ yn.T
        gaps = np.abs(freqs[:, n][:, None] - freqs[:, n][None, :])
        vals = w * gaps
        tt, kk = np.nonzero(np.triu(vals > floor + 1e-15, k=1))
        if tt.size:
            v = vals[tt, kk]
            if v.size > _PAIR_ROW_CAP:
                keep = np.argsort(v)[::-1][:_PAIR_ROW_CAP]
                v = v[keep]
            for val in v:
                rows.append((n, float(val)))
    return rows


def delta_lower_bounds(inst: PlanningInstance, y: np.ndarray, axis: str) -> np.ndarray:
    """Closed-form span assignment: the floor joined with the largest pair
    bound per site (the transformed objective is nonincreasing in every
    span, so the lower bounds are tight)."""
    mx, my = min_spans(inst.ris_geom)
    floor = mx if axis == "x" else my
    out = np.full(inst.n_sites, floor)
    for n, val in _pair_bound_rows(inst, y, axis, floor):
        if val > out[n]:
            out[n] = val
    return out


def solve_delta_block(inst: PlanningInstance, c: np.ndarray, y: np.ndarray, z: np.ndarray,
                      axis: str, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """LP solve of one span block of the transformed problem at fixed y, z.

    Maximizes min_t sum_n A_tn (2 z_n - z_n^2 delta_n) subject to the pair
    bounds and the minimum beamwidth, where A_tn folds the pathloss terms
    and the other axis's span.  The result equals ``delta_lower_bounds``
    (checked in the test suite, not assumed here).
    """
    if axis not in ("x", "y"):
        raise PlanningError("axis must be 'x' or 'y'")
    mx, my = min_spans(inst.ris_geom)
    floor = mx if axis == "x" else my
    other = dy if axis == "x" else dx
    n_cnt = inst.n_sites
    a_tn = np.einsum("tmn,tmn->tn", y, c) / other[None, :]
    rows = _pair_bound_rows(inst, y, axis, floor)
    a_ub = np.zeros((len(rows), n_cnt))
    b_ub = np.zeros(len(rows))
    for i, (n, val) in enumerate(rows):
        a_ub[i, n] = -1.0
        b_ub[i] = -val
    base = lp.LinearProgram(
        c=np.zeros(n_cnt),
        a_ub=a_ub,
        b_ub=b_ub,
        a_eq=np.zeros((0, n_cnt)),
        b_eq=np.zeros(0),
        lo=np.full(n_cnt, floor),
        hi=np.full(n_cnt, np.inf),
    )
    scale = float(np.max(np.abs(a_tn) * z * z, initial=0.0))
    if scale <= 0.0:
        scale = 1.0
    terms = [(-a_tn[t] * z * z / scale, float(2.0 * (a_tn[t] * z).sum()) / scale)
             for t in range(inst.n_points)]
    sol = lp.solve(lp.maxmin_epigraph(terms, base))
    if sol.status != "optimal":
        raise PlanningError(f"span-block LP reported {sol.status}")
    return sol.x[:n_cnt].copy()


@dataclass
class RelaxedSolution:
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    zx: np.ndarray
    zy: np.ndarray
    trace: list
    converged: bool
    warning: Optional[str] = None

    def objective(self, inst: PlanningInstance, c: np.ndarray) -> float:
        return relaxed_objective(inst, c, self.y, self.dx, self.dy)

    def check(self, inst: PlanningInstance, c: np.ndarray) -> None:
        """Assert the relaxed-iterate invariants (test helper)."""
        assert np.all(np.abs(self.y.sum(axis=(1, 2)) - 1.0) <= 1e-6)
        assert np.all(self.y.sum(axis=1) <= self.x[None, :] + 1e-6)
        assert abs(self.x.sum() - inst.budget) <= 1e-6
        mx, my = min_spans(inst.ris_geom)
        assert np.all(self.dx >= mx - 1e-9) and np.all(self.dy >= my - 1e-9)
        assert np.all(self.y[c == 0.0] == 0.0)


def relaxed_objective(inst: PlanningInstance, c: np.ndarray, y: np.ndarray,
                      dx: np.ndarray, dy: np.ndarray) -> float:
    gain = 1.0 / (dx * dy)
    per_t = np.einsum("tmn,tmn,n->t", y, c, gain)
    return float(per_t.min())


def bca(inst: PlanningInstance, tol: float = 1e-6, max_outer: int = 100,
        inner_tol: float = 1e-8, inner_cap: int = 50) -> RelaxedSolution:
    """Double-nested block coordinate ascent on the continuous relaxation.

    Outer loop: exact (x, y) LP, then the two span blocks, each as an inner
    loop alternating the quadratic-transform auxiliary update with a span
    LP until the transformed objective settles.  The outer trace is
    nondecreasing; a step that would decrease it is rolled back and the
    loop stops (counts as converged).  Hitting ``max_outer`` returns the
    best iterate with a warning instead of raising.
    """
    c = build_coefficients(inst)
    mx, my = min_spans(inst.ris_geom)
    n = inst.n_sites
    dx = np.full(n, max(2.0, mx))
    dy = np.full(n, max(2.0, my))
    zx = qt_z_update(dx)
    zy = qt_z_update(dy)
    problem = None
    trace: list = []
    prev = -np.inf
    state = None
    converged = False
    warning = None
    hint_active = None
    inner_cap = max(1, inner_cap)

    def span_blocks(y_cur, dx_cur, dy_cur):
        """Run both inner loops (transform refresh + span LP) to settle."""
        def one_axis(axis, dx_i, dy_i):
            d = dx_i if axis == "x" else dy_i
            z = qt_z_update(d)
            prev_inner = None
            for _ in range(inner_cap):
                z = qt_z_update(d)
                d = solve_delta_block(inst, c, y_cur, z, axis, dx_i, dy_i)
                if axis == "x":
                    dx_i = d
                else:
                    dy_i = d
                val = relaxed_objective(inst, c, y_cur, dx_i, dy_i)
                if prev_inner is not None and abs(val - prev_inner) <= inner_tol * max(1.0, abs(prev_inner)):
                    break
                prev_inner = val
            return d, z

        dx_n, zx_n = one_axis("x", dx_cur, dy_cur)
        dy_n, zy_n = one_axis("y", dx_n, dy_cur)
        return dx_n, dy_n, zx_n, zy_n

    x_cur = y_cur = None
    alphas = (1.0, 0.7, 0.5, 0.35, 0.25, 0.15, 0.08, 0.04, 0.02, 0.01)
    for _ in range(max_outer):
        x_lp, y_lp, _, problem = solve_xy_block(inst, c, dx, dy, problem, hint_active)
        # damped acceptance: a full step toward the LP optimum can force the
        # span blocks to widen past the gain it brings; the step length is
        # chosen by objective value over a fixed grid, else the iterate is
        # stationary
        accepted = None
        for alpha in alphas if y_cur is not None else (1.0,):
            if alpha == 1.0:
                x_try, y_try = x_lp, y_lp
            else:
                x_try = (1.0 - alpha) * x_cur + alpha * x_lp
                y_try = (1.0 - alpha) * y_cur + alpha * y_lp
            dx_t, dy_t, zx_t, zy_t = span_blocks(y_try, dx, dy)
            obj_t = relaxed_objective(inst, c, y_try, dx_t, dy_t)
            if obj_t >= prev and (accepted is None or obj_t > accepted[6]):
                accepted = (x_try, y_try, dx_t, dy_t, zx_t, zy_t, obj_t)
        if accepted is None:
            trace.append(prev)
            converged = True
            break
        x_cur, y_cur, dx, dy, zx, zy, obj = accepted
        state = (x_cur, y_cur, dx, dy, zx, zy)
        hint_active = _top_l_mask(x_cur, inst.budget)
        trace.append(obj)
        if prev > -np.inf and obj - prev <= tol * max(abs(prev), 1e-300):
            converged = True
            break
        prev = obj
    else:
        warning = f"no convergence within {max_outer} outer iterations"
    if state is None:
        raise PlanningError("ascent produced no iterate")
    x, y, dx, dy, zx, zy = state
    return RelaxedSolution(x, y, dx, dy, zx, zy, trace, converged, warning)


def _top_l_mask(x: np.ndarray, budget: int) -> np.ndarray:
    order = np.lexsort((np.arange(x.size), -x))
    mask = np.zeros(x.size, dtype=bool)
    mask[order[:budget]] = True
    return mask


@dataclass
class Deployment:
    """A binary plan: deployed sites, per-point association, per-surface
    spans and widened-beam configurations."""

    x_star: np.ndarray                # (N,) 0/1
    assoc: np.ndarray                 # (T, 2) station, site
    dx_star: np.ndarray               # (N,) NaN where not deployed
    dy_star: np.ndarray
    windows: dict                     # site -> ((omega lo, hi), (psi lo, hi))
    configs: dict                     # site -> RisConfig
    bs_of_ris: dict                   # site -> station (serving sites only)

    def deployed(self) -> np.ndarray:
        return np.nonzero(self.x_star)[0]

    def served_sets(self):
        out = {int(n): [] for n in self.deployed()}
        for t, (_, n) in enumerate(self.assoc):
            out[int(n)].append(t)
        return out

    def check(self, inst: PlanningInstance) -> None:
        """Assert the binary-plan invariants."""
        assert int(self.x_star.sum()) == inst.budget
        claimed = {}
        for t in range(inst.n_points):
            m, n = (int(v) for v in self.assoc[t])
            assert self.x_star[n] == 1
            assert inst.front_pt_cs[t, n] and inst.front_bs_cs[m, n]
            assert claimed.setdefault(n, m) == m
        assert claimed == self.bs_of_ris


def round_solution(inst: PlanningInstance, relaxed: RelaxedSolution,
                   priority: Optional[Sequence[int]] = None) -> Deployment:
    """Round the relaxed iterate to a binary deployment.

    Sites: indicator of the top-L entries of x (ties to the lower index).
    Associations: test points visited in ascending index order (or
    ``priority`` first), each taking the feasible activated (station, site)
    pair with the highest relaxed mass, ties to the lexicographically lowest
    pair; a site once claimed by a station is closed to other stations.
    Spans are recomputed from the served sets and clamped to the minimum
    beamwidths; configurations are widened beams over the resulting windows.
    """
    t_cnt, m_cnt, n_cnt = inst.n_points, inst.n_bss, inst.n_sites
    active = _top_l_mask(relaxed.x, inst.budget)
    order = list(range(t_cnt))
    if priority:
        seen = list(dict.fromkeys(int(t) for t in priority))
        order = seen + [t for t in order if t not in set(seen)]
    claimed: dict = {}
    assoc = np.full((t_cnt, 2), -1, dtype=np.int64)
    for t in order:
        best = None
        for n in range(n_cnt):
            if not active[n] or not inst.front_pt_cs[t, n]:
                continue
            for m in range(m_cnt):
                if not inst.front_bs_cs[m, n]:
                    continue
                if n in claimed and claimed[n] != m:
                    continue
                key = (-relaxed.y[t, m, n], m, n)
                if best is None or key < best[0]:
                    best = (key, m, n)
        if best is None:
            raise PlanningError("uncovered test point after rounding", uncovered=t)
        _, m, n = best
        claimed[n] = m
        assoc[t] = (m, n)

    mx, my = min_spans(inst.ris_geom)
    dx_star = np.full(n_cnt, np.nan)
    dy_star = np.full(n_cnt, np.nan)
    windows: dict = {}
    configs: dict = {}
    for n in np.nonzero(active)[0]:
        n = int(n)
        served = [t for t in range(t_cnt) if assoc[t, 1] == n]
        if served:
            pts = inst.test_points[served]
            dx_star[n], dy_star[n] = spans_for_subarea(inst.css[n], inst.ris_geom, pts)
            win = freq_window(inst.css[n], inst.ris_geom, pts)
        else:
            dx_star[n], dy_star[n] = mx, my
            win = ((-mx / 2.0, mx / 2.0), (-my / 2.0, my / 2.0))
        windows[n] = win
        configs[n] = broadening_config(inst.ris_geom, *win)
    dep = Deployment(active.astype(np.int8), assoc, dx_star, dy_star, windows, configs,
                     {int(n): int(m) for n, m in claimed.items()})
    dep.check(inst)
    return dep


def round_with_repair(inst: PlanningInstance, relaxed: RelaxedSolution) -> Deployment:
    """Greedy repair: re-round with any uncovered point prioritized first."""
    priority: list = []
    for _ in range(inst.n_points + 1):
        try:
            return round_solution(inst, relaxed, priority=priority)
        except PlanningError as err:
            if err.uncovered is None or err.uncovered in priority:
                raise
            priority.insert(0, err.uncovered)
    raise PlanningError("greedy repair failed to cover all test points")


def evaluate_plan_model(inst: PlanningInstance, dep: Deployment,
                        power_cap_w: Optional[float] = None) -> CoverageReport:
    """Model-domain coverage: per-point SNR = P g1(dx*, dy*) / (g2 sigma^2)."""
    c = build_coefficients(inst)
    snrs = np.zeros(inst.n_points)
    for t in range(inst.n_points):
        m, n = (int(v) for v in dep.assoc[t])
        g1 = broadened_gain_g1(inst.ris_geom, float(dep.dx_star[n]), float(dep.dy_star[n]))
        snrs[t] = inst.power_w * g1 * c[t, m, n] / inst.noise_w
    serving = [(int(m), int(n)) for m, n in dep.assoc]
    return CoverageReport.from_snrs(inst.test_points, snrs, serving,
                                    noise_w=inst.noise_w, power_cap_w=power_cap_w)


# --- JSON wire formats -----------------------------------------------------

def _frame_to_obj(f: Frame3) -> dict:
    return {"origin": list(f.origin), "axis_x": list(f.axis_x),
            "axis_y": list(f.axis_y), "axis_z": list(f.axis_z)}


def _frame_from_obj(o: dict) -> Frame3:
    return Frame3(np.array(o["origin"]), np.array(o["axis_x"]),
                  np.array(o["axis_y"]), np.array(o["axis_z"]))


def instance_to_json(inst: PlanningInstance) -> str:
    obj = {
        "bss": [{"frame": _frame_to_obj(fr), "n_b": nb} for fr, nb in inst.bss],
        "css": [_frame_to_obj(fr) for fr in inst.css],
        "test_points": inst.test_points.tolist(),
        "budget": inst.budget,
        "ris": {"n_h": inst.ris_geom.n_h, "n_v": inst.ris_geom.n_v, "delta": inst.ris_geom.delta},
        "beta": inst.beta,
        "power_w": inst.power_w,
        "noise_w": inst.noise_w,
    }
    return json.dumps(obj, indent=1, sort_keys=True)


def instance_from_json(text: str) -> PlanningInstance:
    obj = json.loads(text)
    return PlanningInstance(
        bss=[(_frame_from_obj(b["frame"]), int(b["n_b"])) for b in obj["bss"]],
        css=[_frame_from_obj(o) for o in obj["css"]],
        test_points=np.array(obj["test_points"]),
        budget=int(obj["budget"]),
        ris_geom=ArrayGeometry(int(obj["ris"]["n_h"]), int(obj["ris"]["n_v"]), float(obj["ris"]["delta"])),
        beta=float(obj["beta"]),
        power_w=float(obj["power_w"]),
        noise_w=float(obj["noise_w"]),
    )


def deployment_to_json(dep: Deployment) -> str:
    """Serialize a plan.  Configurations are stored as separable
    row/column phase factors (phase of element (p, q) is
    row_phases[p] + col_phases[q], amplitudes all one)."""
    configs = {}
    for n, cfg in dep.configs.items():
        if cfg.row_phases is None:
            configs[str(n)] = {"phases": cfg.phases.tolist(), "amplitudes": cfg.amplitudes.tolist()}
        else:
            configs[str(n)] = {"row_phases": cfg.row_phases.tolist(), "col_phases": cfg.col_phases.tolist()}
    obj = {
        "deployed": [int(n) for n in dep.deployed()],
        "assoc": dep.assoc.tolist(),
        "spans": {str(int(n)): [float(dep.dx_star[n]), float(dep.dy_star[n])] for n in dep.deployed()},
        "windows": {str(k): [list(w[0]), list(w[1])] for k, w in dep.windows.items()},
        "bs_of_ris": {str(k): int(v) for k, v in dep.bs_of_ris.items()},
        "configs": configs,
    }
    return json.dumps(obj, indent=1, sort_keys=True)


def deployment_from_json(text: str, inst: PlanningInstance) -> Deployment:
    obj = json.loads(text)
    n_cnt = inst.n_sites
    x_star = np.zeros(n_cnt, dtype=np.int8)
    for n in obj["deployed"]:
        x_star[int(n)] = 1
    dx_star = np.full(n_cnt, np.nan)
    dy_star = np.full(n_cnt, np.nan)
    for k, (a, b) in obj["spans"].items():
        dx_star[int(k)] = a
        dy_star[int(k)] = b
    windows = {int(k): (tuple(w[0]), tuple(w[1])) for k, w in obj["windows"].items()}
    configs = {}
    for k, cfg in obj["configs"].items():
        if "row_phases" in cfg:
            row = np.asarray(cfg["row_phases"])
            col = np.asarray(cfg["col_phases"])
            phases = np.mod(row[:, None] + col[None, :], 2.0 * np.pi).reshape(-1)
            configs[int(k)] = RisConfig(phases, np.ones(phases.size), row_phases=row, col_phases=col)
        else:
            configs[int(k)] = RisConfig(np.asarray(cfg["phases"]), np.asarray(cfg["amplitudes"]))
    return Deployment(
        x_star=x_star,
        assoc=np.asarray(obj["assoc"], dtype=np.int64),
        dx_star=dx_star,
        dy_star=dy_star,
        windows=windows,
        configs=configs,
        bs_of_ris={int(k): int(v) for k, v in obj["bs_of_ris"].items()},
    )
