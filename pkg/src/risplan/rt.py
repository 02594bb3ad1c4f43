"""Deterministic specular ray tracing over triangle meshes.

Paths up to two reflections are enumerated exhaustively with the image
method: mirror the source across a triangle's plane (twice for second
order), intersect the mirrored sight line with the triangle, and keep the
path when every reflection point lands inside its triangle and every
segment is unobstructed.  At this low reflection order the image method
finds the same specular path set a ray-launching tracer converges to,
without ray-density tuning, and it is exactly reproducible.

Reflecting-surface sources use a lightweight model: the power impinging on
the surface is the random-phase combination of the paths into its center,
received by one cosine-pattern element and scaled by the element count;
re-radiation carries that power shaped by the configured array pattern.
Per-path receive power follows EIRP along the departure direction, a fixed
per-bounce reflection loss, and a d^-beta law over the unfolded path
length.  Paths combine with i.i.d. uniform random phases; the mean over a
seeded batch of draws is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _core
from .channel import ArrayGeometry, RisConfig, array_gain_pattern, ula_response
from .geom import Frame3, as_vec3, to_local
from .report import CoverageReport


class MeshError(ValueError):
    pass


_SEG_EPS = 1e-9  # parametric endpoint trim for occlusion tests


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray     # (F, 3) int

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise MeshError("face references a vertex out of range")
        v0 = self.vertices[self.faces[:, 0]] if self.faces.size else np.zeros((0, 3))
        v1 = self.vertices[self.faces[:, 1]] if self.faces.size else np.zeros((0, 3))
        v2 = self.vertices[self.faces[:, 2]] if self.faces.size else np.zeros((0, 3))
        self.v0 = v0
        self.e1 = v1 - v0
        self.e2 = v2 - v0
        cross = np.cross(self.e1, self.e2)
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if self.faces.size and areas.min() <= 1e-12:
            raise MeshError(f"degenerate (zero-area) face {int(np.argmin(areas))}")
        self.normals = cross / (2.0 * areas)[:, None] if self.faces.size else np.zeros((0, 3))

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]


def load_mesh(text: str) -> TriangleMesh:
    """Parse the ASCII OBJ subset: `v x y z` and `f i j k` (1-based) lines;
    anything else is ignored.  Malformed lines raise with their number."""
    verts, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "v":
            if len(parts) != 4:
                raise MeshError(f"line {lineno}: vertex needs three coordinates")
            try:
                verts.append([float(p) for p in parts[1:]])
            except ValueError:
                raise MeshError(f"line {lineno}: bad vertex coordinate") from None
        elif parts[0] == "f":
            if len(parts) != 4:
                raise MeshError(f"line {lineno}: face needs three vertex indices")
            try:
                idx = [int(p.split("/")[0]) for p in parts[1:]]
            except ValueError:
                raise MeshError(f"line {lineno}: bad face index") from None
            if any(i < 1 for i in idx):
                raise MeshError(f"line {lineno}: face indices are 1-based and positive")
            if any(i > len(verts) for i in idx):
                raise MeshError(f"line {lineno}: face references undefined vertex")
            faces.append([i - 1 for i in idx])
    return TriangleMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                        np.array(faces, dtype=np.int64).reshape(-1, 3))


def mesh_to_obj(mesh: TriangleMesh) -> str:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices]
    lines += [f"f {a+1} {b+1} {c+1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def ray_triangle(origin, direction, tri) -> Optional[float]:
    """Smallest positive hit distance of a unit ray against one triangle
    (inclusive edges), or None."""
    tri = np.asarray(tri, dtype=np.float64).reshape(3, 3)
    o = as_vec3(origin)[None, :]
    d = as_vec3(direction)[None, :]
    t = _core.tri_intersect_pairs(
        np.ascontiguousarray(o), np.ascontiguousarray(d),
        np.ascontiguousarray(tri[0][None, :]),
        np.ascontiguousarray((tri[1] - tri[0])[None, :]),
        np.ascontiguousarray((tri[2] - tri[0])[None, :]),
    )[0]
    if np.isnan(t) or t <= _SEG_EPS:
        return None
    return float(t)


@dataclass
class PropagationPath:
    points: list          # reflection points, source to destination order
    triangles: list       # triangle id per bounce
    length: float         # unfolded source->...->destination length

    @property
    def bounces(self) -> int:
        return len(self.triangles)


def _mirror(p: np.ndarray, v0: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return p - 2.0 * float((p - v0) @ normal) * normal


def _segments_clear(mesh: TriangleMesh, segs, skip_a, skip_b) -> bool:
    if mesh.n_faces == 0:
        return True
    a = np.ascontiguousarray(np.array([s[0] for s in segs], dtype=np.float64))
    b = np.ascontiguousarray(np.array([s[1] for s in segs], dtype=np.float64))
    blocked = _core.segments_blocked(
        a, b, mesh.v0, mesh.e1, mesh.e2,
        np.asarray(skip_a, dtype=np.int64), np.asarray(skip_b, dtype=np.int64),
        _SEG_EPS, 1.0 - _SEG_EPS,
    )
    return not bool(blocked.any())


def _seg_len(a, b) -> float:
    return float(np.linalg.norm(b - a))


def find_paths(mesh: TriangleMesh, src, dst, max_bounces: int = 2) -> list:
    """All specular paths from src to dst with up to ``max_bounces``
    reflections, via the image method.  Ordering: bounce count, then
    triangle ids (lexicographic)."""
    if max_bounces not in (0, 1, 2):
        raise MeshError("supported reflection orders are 0, 1 and 2")
    src = as_vec3(src)
    dst = as_vec3(dst)
    paths = []
    if _segments_clear(mesh, [(src, dst)], [-1], [-1]):
        paths.append(PropagationPath([src, dst], [], _seg_len(src, dst)))
    if max_bounces >= 1 and mesh.n_faces:
        F = mesh.n_faces
        img = src[None, :] - 2.0 * ((src - mesh.v0) * mesh.normals).sum(axis=1)[:, None] * mesh.normals
        d = dst[None, :] - img
        ts = _core.tri_intersect_pairs(np.ascontiguousarray(img), np.ascontiguousarray(d),
                                       mesh.v0, mesh.e1, mesh.e2)
        for i in range(F):
            t = ts[i]
            if np.isnan(t) or t <= _SEG_EPS or t >= 1.0 - _SEG_EPS:
                continue
            p1 = img[i] + t * d[i]
            if not _segments_clear(mesh, [(src, p1), (p1, dst)], [-1, i], [i, -1]):
                continue
            paths.append(PropagationPath([src, p1, dst], [int(i)],
                                         _seg_len(src, p1) + _seg_len(p1, dst)))
    if max_bounces >= 2 and mesh.n_faces:
        F = mesh.n_faces
        img1 = src[None, :] - 2.0 * ((src - mesh.v0) * mesh.normals).sum(axis=1)[:, None] * mesh.normals
        for i in range(F):
            # second mirror of img1[i] across every triangle plane
            img2 = img1[i][None, :] - 2.0 * ((img1[i] - mesh.v0) * mesh.normals).sum(axis=1)[:, None] * mesh.normals
            d2 = dst[None, :] - img2
            ts2 = _core.tri_intersect_pairs(np.ascontiguousarray(img2), np.ascontiguousarray(d2),
                                            mesh.v0, mesh.e1, mesh.e2)
            for j in range(F):
                if j == i:
                    continue
                t2 = ts2[j]
                if np.isnan(t2) or t2 <= _SEG_EPS or t2 >= 1.0 - _SEG_EPS:
                    continue
                p2 = img2[j] + t2 * d2[j]
                d1 = p2 - img1[i]
                t1 = _core.tri_intersect_pairs(
                    np.ascontiguousarray(img1[i][None, :]), np.ascontiguousarray(d1[None, :]),
                    np.ascontiguousarray(mesh.v0[i][None, :]),
                    np.ascontiguousarray(mesh.e1[i][None, :]),
                    np.ascontiguousarray(mesh.e2[i][None, :]),
                )[0]
                if np.isnan(t1) or t1 <= _SEG_EPS or t1 >= 1.0 - _SEG_EPS:
                    continue
                p1 = img1[i] + t1 * d1
                if not _segments_clear(mesh,
                                       [(src, p1), (p1, p2), (p2, dst)],
                                       [-1, i, j], [i, j, -1]):
                    continue
                paths.append(PropagationPath(
                    [src, p1, p2, dst], [int(i), int(j)],
                    _seg_len(src, p1) + _seg_len(p1, p2) + _seg_len(p2, dst)))
    return paths


def element_gain(theta: float, mu: float) -> float:
    """Cosine-element power gain cos(theta)^(2 mu) over the front
    hemisphere, zero behind (field-pattern exponent convention)."""
    if not mu > 0.0:
        raise ValueError("pattern exponent must be positive")
    if theta >= math.pi / 2.0 or theta < 0.0:
        return 0.0 if theta >= 0.0 else element_gain(-theta, mu)
    return math.cos(theta) ** (2.0 * mu)


@dataclass
class RtParams:
    """Knobs of the ray-traced evaluation."""

    beta: float = 2.0
    mu: float = 0.5
    max_bounces: int = 2
    bounce_loss_db: float = 6.0
    phase_draws: int = 100
    noise_w: float = 1e-11
    power_cap_w: Optional[float] = None

    @property
    def bounce_loss(self) -> float:
        return 10.0 ** (-self.bounce_loss_db / 10.0)


@dataclass
class RadiatingSource:
    """A powered emitter: either a station array with a precoder or a
    configured reflecting surface re-radiating its impinging power."""

    kind: str                      # "bs" | "ris"
    frame: Frame3
    mu: float
    power_w: float
    n_b: int = 0
    delta: float = 0.5
    precoder: Optional[np.ndarray] = None
    geom: Optional[ArrayGeometry] = None
    config: Optional[RisConfig] = None

    def eirp(self, direction) -> float:
        """Radiated power density factor toward a unit direction."""
        d = as_vec3(direction)
        cos_bore = float(self.frame.axis_z @ d)
        if cos_bore <= 0.0:
            return 0.0
        theta = math.acos(min(cos_bore, 1.0))
        el = element_gain(theta, self.mu)
        if self.kind == "bs":
            a = ula_response(self.n_b, self.delta, float(self.frame.axis_x @ d))
            return float(abs(np.conj(a) @ self.precoder) ** 2) * el
        return self.power_w * ris_beampattern_gain(self, d)


def ris_beampattern_gain(source: RadiatingSource, direction) -> float:
    """Configured-surface power gain toward a unit direction, normalized so
    an all-zero-phase configuration at broadside yields the element count;
    includes the cosine element pattern and the front-hemisphere cutoff."""
    d = as_vec3(direction)
    cos_bore = float(source.frame.axis_z @ d)
    if cos_bore <= 0.0:
        return 0.0
    loc = np.array([source.frame.axis_x @ d, source.frame.axis_y @ d, cos_bore])
    omega, psi = float(loc[0]), float(loc[1])
    theta = math.acos(min(cos_bore, 1.0))
    pat = float(array_gain_pattern(source.geom, source.config, omega, psi))
    return pat / source.geom.n_elements * element_gain(theta, source.mu)


def path_power(source: RadiatingSource, path: PropagationPath, params: RtParams) -> float:
    """Isotropic receive power along one path: EIRP toward the first
    segment, per-bounce loss, d^-beta spreading over the unfolded length."""
    if path.length <= 0.0:
        raise MeshError("degenerate path")
    dep = path.points[1] - path.points[0]
    dep = dep / np.linalg.norm(dep)
    return (source.eirp(dep)
            * params.bounce_loss ** path.bounces
            * path.length ** (-params.beta))


def received_power(sources: Sequence[RadiatingSource], paths_per_source: Sequence[list],
                   params: RtParams, rng: np.random.Generator) -> float:
    """Random-phase combination of every path of every source: mean over
    ``params.phase_draws`` draws of |sum_k sqrt(P_k) e^{j phi_k}|^2."""
    if params.phase_draws < 1:
        raise ValueError("need at least one phase draw")
    amps = []
    for source, paths in zip(sources, paths_per_source):
        for path in paths:
            p = path_power(source, path, params)
            if p > 0.0:
                amps.append(math.sqrt(p))
    if not amps:
        return 0.0
    amps = np.asarray(amps)
    if amps.size == 1:
        return float(amps[0] ** 2)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(params.phase_draws, amps.size))
    total = (amps[None, :] * np.exp(1j * phases)).sum(axis=1)
    return float(np.mean(np.abs(total) ** 2))


def ris_impinging_power(bs_source: RadiatingSource, ris_frame: Frame3, paths: Sequence[PropagationPath],
                        n_elements: int, params: RtParams, rng: np.random.Generator) -> float:
    """Power collected by the surface: one cosine element at the center,
    random-phase combination over the incoming paths, times the element
    count."""
    amps = []
    for path in paths:
        p = path_power(bs_source, path, params)
        if p <= 0.0:
            continue
        arr = path.points[-1] - path.points[-2]
        arr = arr / np.linalg.norm(arr)
        cos_in = float(ris_frame.axis_z @ (-arr))
        if cos_in <= 0.0:
            continue
        p *= element_gain(math.acos(min(cos_in, 1.0)), params.mu)
        if p > 0.0:
            amps.append(math.sqrt(p))
    if not amps:
        return 0.0
    amps = np.asarray(amps)
    if amps.size == 1:
        elem = float(amps[0] ** 2)
    else:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(params.phase_draws, amps.size))
        elem = float(np.mean(np.abs((amps[None, :] * np.exp(1j * phases)).sum(axis=1)) ** 2))
    return elem * n_elements


def associate(powers: Sequence[float]) -> int:
    """Index of the strongest station; ties to the lowest index."""
    if len(powers) == 0:
        raise ValueError("need at least one station")
    return int(np.argmax(powers))


@dataclass
class BsGroup:
    """One station and the reflecting surfaces it controls, ready for
    evaluation.  ``slots`` holds (bs_source, ris_source | None) pairs: the
    station serves each surface in its own time slot (beamed at it); a
    station with no surfaces gets a single slot with its fallback beam."""

    slots: list


def point_power(mesh: TriangleMesh, group: BsGroup, point, params: RtParams,
                rng: np.random.Generator, cache: Optional[dict] = None) -> float:
    """Best-slot received power from one station group at a point."""
    point = as_vec3(point)
    best = 0.0
    for bs_source, ris_source in group.slots:
        sources = [bs_source]
        paths = [_cached_paths(mesh, bs_source.frame.origin, point, params, cache)]
        if ris_source is not None and ris_source.power_w > 0.0:
            sources.append(ris_source)
            paths.append(_cached_paths(mesh, ris_source.frame.origin, point, params, cache))
        p = received_power(sources, paths, params, rng)
        if p > best:
            best = p
    return best


def _cached_paths(mesh: TriangleMesh, src, dst, params: RtParams, cache: Optional[dict]):
    if cache is None:
        return find_paths(mesh, src, dst, params.max_bounces)
    key = (tuple(np.asarray(src)), tuple(np.asarray(dst)))
    hit = cache.get(key)
    if hit is None:
        hit = find_paths(mesh, src, dst, params.max_bounces)
        cache[key] = hit
    return hit


def evaluate_points(mesh: TriangleMesh, groups: Sequence[BsGroup], points, params: RtParams,
                    seed: int = 0, cache: Optional[dict] = None) -> CoverageReport:
    """Ray-traced coverage at a list of points: per point, the association
    picks the strongest station group; SNR is that group's power over the
    noise floor.  Per-point generators derive from (seed, point index), so
    any evaluation order gives identical results."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    snrs = np.zeros(points.shape[0])
    serving = []
    for i, pt in enumerate(points):
        rng = np.random.default_rng((seed, i))
        powers = [point_power(mesh, g, pt, params, rng, cache) for g in groups]
        m = associate(powers)
        serving.append((m, None))
        snrs[i] = powers[m] / params.noise_w
    return CoverageReport.from_snrs(points, snrs, serving, noise_w=params.noise_w,
                                    power_cap_w=params.power_cap_w)


@dataclass
class HeatmapGrid:
    x0: float
    x1: float
    nx: int
    y0: float
    y1: float
    ny: int
    z: float

    def points(self) -> np.ndarray:
        xs = np.linspace(self.x0, self.x1, self.nx)
        ys = np.linspace(self.y0, self.y1, self.ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, self.z)])


def coverage_heatmap(mesh: TriangleMesh, groups: Sequence[BsGroup], grid: HeatmapGrid,
                     params: RtParams, seed: int = 0, cache: Optional[dict] = None) -> CoverageReport:
    """Ray-traced SNR over a rectangular grid (cells in row-major y, x order)."""
    return evaluate_points(mesh, groups, grid.points(), params, seed=seed, cache=cache)


def write_heatmap_csv(report: CoverageReport, noise_w: float) -> str:
    """CSV rows: x, y, power_dBm, snr_dB, serving_bs (dead cells carry -inf)."""
    lines = ["x,y,power_dBm,snr_dB,serving_bs"]
    for pos, snr, serving in zip(report.positions, report.snr, report.serving):
        power_w = snr * noise_w
        if power_w > 0.0:
            pdbm = 10.0 * math.log10(power_w) + 30.0
            sdb = 10.0 * math.log10(snr)
        else:
            pdbm = float("-inf")
            sdb = float("-inf")
        lines.append(f"{pos[0]!r},{pos[1]!r},{pdbm!r},{sdb!r},{serving[0]}")
    return "\n".join(lines) + "\n"


PGM_FLOOR_DBM = -120.0
PGM_CAP_DBM = -65.0


def write_heatmap_pgm(report: CoverageReport, noise_w: float, nx: int, ny: int) -> bytes:
    """8-bit binary PGM of received power: -120 dBm maps to 0, -65 dBm to
    255, linear in dB between (clipped outside)."""
    vals = np.zeros(len(report.snr))
    for i, snr in enumerate(report.snr):
        p = snr * noise_w
        dbm = 10.0 * math.log10(p) + 30.0 if p > 0.0 else PGM_FLOOR_DBM
        vals[i] = (dbm - PGM_FLOOR_DBM) / (PGM_CAP_DBM - PGM_FLOOR_DBM)
    pix = np.clip(np.round(vals * 255.0), 0, 255).astype(np.uint8).reshape(ny, nx)
    header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    return header + pix.tobytes()
