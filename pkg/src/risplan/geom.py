"""Vectors, local reference frames and spatial-frequency geometry.

Everything downstream (channel models, the planner, the ray tracer) works on
plain float64 numpy arrays of shape (3,) for points/directions and on
:class:`Frame3` for oriented objects (reflector surfaces, base-station
arrays).  A frame stores its origin and three orthonormal right-handed axes;
for a reflector, ``axis_z`` is the outward surface normal and the local
(x', y') plane lies on the surface (``axis_x`` horizontal, ``axis_y``
vertical element axes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-9


class GeometryError(ValueError):
    pass


def as_vec3(p) -> np.ndarray:
    v = np.asarray(p, dtype=np.float64)
    if v.shape != (3,):
        raise GeometryError(f"expected a 3-vector, got shape {v.shape}")
    return v


def unit(v) -> np.ndarray:
    v = as_vec3(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise GeometryError("zero-length vector cannot be normalized")
    return v / n


@dataclass(frozen=True)
class Frame3:
    """Position plus orthonormal right-handed local axes.

    ``to_local`` maps absolute coordinates into this frame (translation then
    rotation), so ``frame.origin`` always maps to the local origin.
    """

    origin: np.ndarray
    axis_x: np.ndarray
    axis_y: np.ndarray
    axis_z: np.ndarray

    def __post_init__(self):
        for name in ("origin", "axis_x", "axis_y", "axis_z"):
            object.__setattr__(self, name, as_vec3(getattr(self, name)))
        for name in ("axis_x", "axis_y", "axis_z"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > _ORTHO_TOL:
                raise GeometryError(f"{name} is not unit length")
        if (
            abs(self.axis_x @ self.axis_y) > _ORTHO_TOL
            or abs(self.axis_x @ self.axis_z) > _ORTHO_TOL
            or abs(self.axis_y @ self.axis_z) > _ORTHO_TOL
        ):
            raise GeometryError("frame axes are not pairwise orthogonal")
        if np.linalg.norm(np.cross(self.axis_x, self.axis_y) - self.axis_z) > _ORTHO_TOL:
            raise GeometryError("frame axes are not right-handed")

    @property
    def rotation(self) -> np.ndarray:
        """Columns are the local axes expressed in absolute coordinates."""
        return np.column_stack((self.axis_x, self.axis_y, self.axis_z))

    @staticmethod
    def identity(origin=(0.0, 0.0, 0.0)) -> "Frame3":
        return Frame3(as_vec3(origin), np.array([1.0, 0, 0]), np.array([0.0, 1, 0]), np.array([0.0, 0, 1]))


def frame_from_normal(origin, normal, up=(0.0, 0.0, 1.0)) -> Frame3:
    """Build a surface frame whose ``axis_z`` is ``normal``.

    ``axis_y`` points as close to ``up`` as the normal allows and
    ``axis_x = axis_y x axis_z`` completes the right-handed triad.
    """
    nz = unit(normal)
    upv = unit(up)
    if abs(upv @ nz) > 1.0 - 1e-9:
        # normal parallel to up: fall back to a horizontal reference
        upv = np.array([1.0, 0.0, 0.0])
    ax = unit(np.cross(upv, nz))
    ay = np.cross(nz, ax)
    return Frame3(as_vec3(origin), ax, ay, nz)


def to_local(frame: Frame3, p) -> np.ndarray:
    """Coordinates of ``p`` in ``frame``: dot products of (p - origin) with the axes."""
    d = as_vec3(p) - frame.origin
    return np.array([d @ frame.axis_x, d @ frame.axis_y, d @ frame.axis_z])


def spatial_frequencies(ris: Frame3, p) -> tuple[float, float]:
    """Direction cosines of ``p`` along the surface's local x' and y' axes.

    Returns (omega, psi) = (u_x / ||u||, u_y / ||u||) with u the local
    coordinates of ``p``.  Both lie in [-1, 1] and omega^2 + psi^2 <= 1.
    """
    u = to_local(ris, p)
    n = np.linalg.norm(u)
    if n == 0.0:
        raise GeometryError("coincident point: spatial frequencies undefined at the frame origin")
    return float(u[0] / n), float(u[1] / n)


def fronting(frame: Frame3, p) -> bool:
    """True iff ``p`` lies in the closed half-space in front of the surface.

    Zero projection (on the surface plane) counts as fronting so that
    feasible sets stay closed.
    """
    return float(frame.axis_z @ (as_vec3(p) - frame.origin)) >= 0.0
