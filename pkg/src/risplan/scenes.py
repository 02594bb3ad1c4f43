"""Built-in scenes: primitive meshes for tests and a procedurally generated
indoor hall that stands in for a real station floor (the demo geometry is
synthetic, not any measured building)."""

from __future__ import annotations

import numpy as np

from .geom import Frame3, frame_from_normal
from .rt import TriangleMesh


def _quad(verts, faces, a, b, c, d):
    i = len(verts)
    verts.extend([a, b, c, d])
    faces.append([i, i + 1, i + 2])
    faces.append([i, i + 2, i + 3])


def rectangle_xy(x0, y0, x1, y1, z) -> TriangleMesh:
    verts, faces = [], []
    _quad(verts, faces, (x0, y0, z), (x1, y0, z), (x1, y1, z), (x0, y1, z))
    return TriangleMesh(np.array(verts), np.array(faces))


def box_mesh(x0, y0, z0, x1, y1, z1, top=True, bottom=True) -> TriangleMesh:
    """Axis-aligned box shell (outward winding)."""
    verts, faces = [], []
    if bottom:
        _quad(verts, faces, (x0, y0, z0), (x0, y1, z0), (x1, y1, z0), (x1, y0, z0))
    if top:
        _quad(verts, faces, (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1))
    _quad(verts, faces, (x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1))  # y = y0
    _quad(verts, faces, (x1, y1, z0), (x0, y1, z0), (x0, y1, z1), (x1, y1, z1))  # y = y1
    _quad(verts, faces, (x0, y1, z0), (x0, y0, z0), (x0, y0, z1), (x0, y1, z1))  # x = x0
    _quad(verts, faces, (x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1))  # x = x1
    return TriangleMesh(np.array(verts), np.array(faces))


def merge(meshes) -> TriangleMesh:
    verts, faces = [], []
    off = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + off)
        off += len(m.vertices)
    return TriangleMesh(np.vstack(verts), np.vstack(faces))


def closed_box_interior(x0, y0, z0, x1, y1, z1) -> TriangleMesh:
    """Closed box used as a reflection test chamber."""
    return box_mesh(x0, y0, z0, x1, y1, z1)


HALL_LENGTH = 100.0
HALL_WIDTH = 60.0
_PILLAR = 0.8
_PILLAR_H = 6.5
_WALL_H = 4.5


def hall_mesh() -> TriangleMesh:
    """The demo hall: floor slab, two platform blocks, two pillar rows and a
    partial interior wall with a gap.  No ceiling or outer walls (open
    volume, only dominant reflectors are modeled)."""
    parts = [rectangle_xy(0.0, 0.0, HALL_LENGTH, HALL_WIDTH, 0.0)]
    # platform blocks along the hall
    parts.append(box_mesh(15.0, 8.0, 0.0, 55.0, 16.0, 1.2, bottom=False))
    parts.append(box_mesh(45.0, 44.0, 0.0, 85.0, 52.0, 1.2, bottom=False))
    # two pillar rows
    for cx in (20.0, 35.0, 50.0, 65.0, 80.0):
        for cy in (22.0, 38.0):
            h = _PILLAR / 2.0
            parts.append(box_mesh(cx - h, cy - h, 0.0, cx + h, cy + h, _PILLAR_H, bottom=False))
    # partial interior wall across the hall, with a passage gap
    parts.append(box_mesh(58.0, 0.0, 0.0, 59.0, 24.0, _WALL_H, bottom=False))
    parts.append(box_mesh(58.0, 34.0, 0.0, 59.0, 60.0, _WALL_H, bottom=False))
    return merge(parts)


def hall_base_stations(n_b: int = 2) -> list:
    """Two stations near opposite hall ends, beaming inward."""
    a = frame_from_normal((4.0, 30.0, 5.5), (1.0, 0.0, 0.0))
    b = frame_from_normal((96.0, 30.0, 5.5), (-1.0, 0.0, 0.0))
    return [(a, n_b), (b, n_b)]


def hall_candidate_sites() -> list:
    """Twenty fixed wall- and pillar-mounted sites at 5.5 m facing into the
    hall (the placement mimics mounting constraints: along walls, above
    platforms, around the passage gap)."""
    spots = [
        ((10.0, 0.5, 5.5), (0.2, 1.0, 0.0)),
        ((25.0, 0.5, 5.5), (0.0, 1.0, 0.0)),
        ((40.0, 0.5, 5.5), (0.0, 1.0, 0.0)),
        ((57.0, 0.5, 5.5), (0.3, 1.0, 0.0)),
        ((70.0, 0.5, 5.5), (0.3, 1.0, 0.0)),
        ((85.0, 0.5, 5.5), (-0.2, 1.0, 0.0)),
        ((10.0, 59.5, 5.5), (0.2, -1.0, 0.0)),
        ((25.0, 59.5, 5.5), (0.0, -1.0, 0.0)),
        ((40.0, 59.5, 5.5), (0.2, -1.0, 0.0)),
        ((57.0, 59.5, 5.5), (0.3, -1.0, 0.0)),
        ((70.0, 59.5, 5.5), (0.3, -1.0, 0.0)),
        ((85.0, 59.5, 5.5), (-0.2, -1.0, 0.0)),
        ((0.5, 15.0, 5.5), (1.0, 0.0, 0.0)),
        ((0.5, 45.0, 5.5), (1.0, 0.0, 0.0)),
        ((99.5, 15.0, 5.5), (-1.0, 0.0, 0.0)),
        ((99.5, 45.0, 5.5), (-1.0, 0.0, 0.0)),
        ((59.5, 29.0, 5.5), (1.0, 0.1, 0.0)),
        ((57.5, 29.0, 5.5), (-1.0, -0.1, 0.0)),
        ((35.0, 21.4, 5.5), (0.0, -1.0, 0.0)),
        ((65.0, 38.6, 5.5), (0.0, 1.0, 0.0)),
    ]
    return [frame_from_normal(origin, normal) for origin, normal in spots]


def hall_test_points(count: int, seed: int) -> np.ndarray:
    """Seeded uniform test points on the z = 1.5 plane inside the hall."""
    rng = np.random.default_rng((seed, 54321))
    xs = rng.uniform(1.0, HALL_LENGTH - 1.0, count)
    ys = rng.uniform(1.0, HALL_WIDTH - 1.0, count)
    return np.column_stack([xs, ys, np.full(count, 1.5)])
