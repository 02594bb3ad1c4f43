"""Array responses, line-of-sight channels, precoding and SNR evaluation.

Conventions fixed once and used everywhere:

* a planar reflector array has ``n_h`` horizontal by ``n_v`` vertical
  elements at spacing-to-wavelength ratio ``delta``; element (p, q)
  (p vertical in [0, n_v), q horizontal in [0, n_h)) maps to flat index
  ``i = p * n_h + q``;
* the response-vector entry for element (p, q) toward local direction
  cosines (omega, psi) carries phase ``2 pi delta (p psi + q omega)``;
* gains are linear power units; dB only appears at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geom import Frame3, GeometryError, as_vec3, fronting, spatial_frequencies, to_local, unit


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ArrayGeometry:
    n_h: int
    n_v: int
    delta: float

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ChannelError("array needs at least one element per axis")
        if not self.delta > 0.0:
            raise ChannelError("element spacing ratio must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v


@dataclass
class RisConfig:
    """Per-element phase shifts (radians, [0, 2pi)) and amplitudes ([0, 1]).

    ``row_phases``/``col_phases`` are an optional separable factorization
    (phase of element (p, q) = row_phases[p] + col_phases[q]); beam
    configurations produced here always carry it, which makes pattern
    evaluation on large surfaces cheap.
    """

    phases: np.ndarray
    amplitudes: np.ndarray
    row_phases: Optional[np.ndarray] = None
    col_phases: Optional[np.ndarray] = None

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=np.float64)
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        if self.phases.shape != self.amplitudes.shape:
            raise ChannelError("phases/amplitudes length mismatch")
        if np.any(self.amplitudes < 0.0) or np.any(self.amplitudes > 1.0 + 1e-12):
            raise ChannelError("reflection amplitudes must lie in [0, 1]")

    @property
    def weights(self) -> np.ndarray:
        return self.amplitudes * np.exp(1j * self.phases)

    @staticmethod
    def identity(n: int) -> "RisConfig":
        return RisConfig(np.zeros(n), np.ones(n))


def pla_response(geom: ArrayGeometry, omega: float, psi: float) -> np.ndarray:
    """Planar-array response vector at direction cosines (omega, psi)."""
    if omega * omega + psi * psi > 1.0 + 1e-9:
        raise ChannelError("direction cosines outside the unit disk")
    ph_h = 2.0 * np.pi * geom.delta * omega * np.arange(geom.n_h)
    ph_v = 2.0 * np.pi * geom.delta * psi * np.arange(geom.n_v)
    return np.kron(np.exp(1j * ph_v), np.exp(1j * ph_h))


def ula_response(n_b: int, delta: float, cos_theta: float) -> np.ndarray:
    """Uniform-linear-array response; entry k carries phase 2 pi delta k cos(theta)."""
    if abs(cos_theta) > 1.0 + 1e-9:
        raise ChannelError("|cos(theta)| must not exceed 1")
    return np.exp(1j * 2.0 * np.pi * delta * cos_theta * np.arange(n_b))


def pathgain(d: float, beta: float) -> float:
    """Distance-power law d**-beta."""
    if not d > 0.0:
        raise ChannelError("degenerate distance")
    return float(d) ** (-beta)


def ris_ue_channel(ris: Frame3, geom: ArrayGeometry, u, beta: float) -> np.ndarray:
    u = as_vec3(u)
    d = float(np.linalg.norm(u - ris.origin))
    if d == 0.0:
        raise ChannelError("degenerate distance")
    if not fronting(ris, u):
        raise ChannelError("point behind the reflecting surface")
    om, ps = spatial_frequencies(ris, u)
    return math.sqrt(pathgain(d, beta)) * pla_response(geom, om, ps)


def bs_ris_channel(bs: Frame3, n_b: int, ris: Frame3, geom: ArrayGeometry, beta: float,
                   bs_delta: Optional[float] = None) -> np.ndarray:
    """Rank-1 channel between a base-station array and a reflecting surface."""
    if not fronting(ris, bs.origin):
        raise ChannelError("infeasible link: base station behind the surface")
    d = float(np.linalg.norm(bs.origin - ris.origin))
    if d == 0.0:
        raise ChannelError("degenerate distance")
    om, ps = spatial_frequencies(ris, bs.origin)
    b_rx = pla_response(geom, om, ps)
    cos_theta = float(bs.axis_x @ unit(ris.origin - bs.origin))
    a = ula_response(n_b, geom.delta if bs_delta is None else bs_delta, cos_theta)
    return math.sqrt(pathgain(d, beta)) * np.outer(b_rx, np.conj(a))


def mrt_precoder(G: np.ndarray, P: float) -> np.ndarray:
    """Maximum-ratio precoder: sqrt(P) times the dominant right singular
    vector of G, phase-normalized so the largest entry is real positive."""
    G = np.asarray(G, dtype=np.complex128)
    if not P > 0.0:
        raise ChannelError("power budget must be positive")
    if not np.any(G):
        raise ChannelError("zero channel matrix has no precoder")
    _, _, vh = np.linalg.svd(G)
    v = np.conj(vh[0])
    v = v / np.linalg.norm(v)
    pivot = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[pivot]))
    return math.sqrt(P) * v


def snr(h: np.ndarray, config: RisConfig, G: np.ndarray, w: np.ndarray, sigma2: float) -> float:
    if sigma2 <= 0.0:
        raise ChannelError("noise power must be positive")
    h = np.asarray(h)
    G = np.asarray(G)
    w = np.asarray(w)
    if h.shape[0] != G.shape[0] or G.shape[1] != w.shape[0] or h.shape[0] != config.phases.shape[0]:
        raise ChannelError("dimension mismatch")
    y = np.conj(h) @ (config.weights * (G @ w))
    return float(abs(y) ** 2 / sigma2)


def sinr(serving: Sequence[tuple], interferers: Sequence[Sequence[tuple]], sigma2: float) -> float:
    """SINR with coherent combining inside each station's reflector set and
    incoherent power addition across interfering stations.

    ``serving`` is a list of (h, config, G, w) tuples for the serving
    station; ``interferers`` one such list per other station.
    """
    if sigma2 <= 0.0:
        raise ChannelError("noise power must be positive")

    def amp(terms):
        total = 0.0 + 0.0j
        for h, config, G, w in terms:
            total += np.conj(np.asarray(h)) @ (config.weights * (np.asarray(G) @ np.asarray(w)))
        return total

    num = abs(amp(serving)) ** 2
    den = sigma2 + sum(abs(amp(group)) ** 2 for group in interferers)
    return float(num / den)


def min_spans(geom: ArrayGeometry) -> tuple[float, float]:
    """Minimum direction-cosine spans: single-beam widths 1/(n delta)."""
    return 1.0 / (geom.n_h * geom.delta), 1.0 / (geom.n_v * geom.delta)


def broadened_gain_g1(geom: ArrayGeometry, dx: float, dy: float) -> float:
    """Scalar gain model of a widened flat beam covering spans (dx, dy).

    Gain trades off inversely with the span product; at the minimum spans it
    equals the full coherent array gain n_h^2 n_v^2.
    """
    mx, my = min_spans(geom)
    if dx < mx - 1e-12 or dy < my - 1e-12:
        raise ChannelError("span under minimum beamwidth")
    return geom.n_h * geom.n_v / (dx * dy * geom.delta ** 2)


def spans_for_subarea(ris: Frame3, geom: ArrayGeometry, points) -> tuple[float, float]:
    """Direction-cosine spans needed to cover ``points``, clamped up to the
    minimum beamwidths."""
    pts = list(points)
    if not pts:
        raise ChannelError("empty point list")
    oms, pss = [], []
    for p in pts:
        if not fronting(ris, p):
            raise ChannelError("point behind the reflecting surface")
        om, ps = spatial_frequencies(ris, p)
        oms.append(om)
        pss.append(ps)
    mx, my = min_spans(geom)
    return max(max(oms) - min(oms), mx), max(max(pss) - min(pss), my)


def freq_window(ris: Frame3, geom: ArrayGeometry, points) -> tuple[tuple[float, float], tuple[float, float]]:
    """Centered clamped direction-cosine window covering ``points``.

    The window is at least the minimum beamwidth wide per axis and is shifted
    (never shrunk) to stay inside [-1, 1].
    """
    pts = list(points)
    if not pts:
        raise ChannelError("empty point list")
    oms, pss = zip(*(spatial_frequencies(ris, p) for p in pts))
    dx, dy = spans_for_subarea(ris, geom, pts)

    def window(vals, span):
        center = 0.5 * (max(vals) + min(vals))
        half = 0.5 * span
        center = min(max(center, -1.0 + half), 1.0 - half)
        return (center - half, center + half)

    return window(oms, dx), window(pss, dy)


def _tile_centers(lo: float, hi: float, n_tiles: int) -> np.ndarray:
    width = (hi - lo) / n_tiles
    return lo + width * (np.arange(n_tiles) + 0.5)


def _axis_profile(n: int, delta: float, lo: float, hi: float, k: int) -> np.ndarray:
    """Per-element phases along one axis: k contiguous subarrays, each with a
    linear profile steering at its tile center, plus constant offsets that
    align adjacent subarray kernels in phase at the tile seams (anti-phase
    then only occurs where the interfering kernel is already negligible,
    which removes the deep seam nulls of plain tiling)."""
    idx = np.arange(n)
    tile = (idx * k) // n
    width = (hi - lo) / k
    centers = _tile_centers(lo, hi, k)
    block_center = np.array([idx[tile == a].mean() for a in range(k)])
    chi = np.zeros(k)
    for a in range(k - 1):
        chi[a + 1] = chi[a] - np.pi * delta * width * (block_center[a + 1] + block_center[a])
    # sign: +2 pi delta (...) so that conj(response) . weights combines
    # coherently at the tile center, matching the h^H Phi G w cascade
    return 2.0 * np.pi * delta * idx * centers[tile] + chi[tile]


def broadening_config(geom: ArrayGeometry, omega_range, psi_range) -> RisConfig:
    """Subarray-tiled widened-beam configuration for a target window.

    The surface is split into ceil(span * n * delta) contiguous subarrays per
    axis; each subarray gets a linear phase profile steering at the center of
    its tile of the target window (seam-aligned, see ``_axis_profile``),
    flattening one widened beam across it.  Amplitudes are 1 everywhere.
    The profile is separable, so the config carries row/column phase factors.
    """
    (olo, ohi), (plo, phi_) = tuple(omega_range), tuple(psi_range)
    if min(olo, plo) < -1.0 - 1e-9 or max(ohi, phi_) > 1.0 + 1e-9:
        raise ChannelError("target window outside the visible region")
    dx, dy = ohi - olo, phi_ - plo
    mx, my = min_spans(geom)
    if dx < mx - 1e-12 or dy < my - 1e-12:
        raise ChannelError("span under minimum beamwidth")
    k_h = max(1, math.ceil(dx * geom.n_h * geom.delta - 1e-9))
    k_v = max(1, math.ceil(dy * geom.n_v * geom.delta - 1e-9))
    col = _axis_profile(geom.n_h, geom.delta, olo, ohi, k_h)
    row = _axis_profile(geom.n_v, geom.delta, plo, phi_, k_v)
    phases = np.mod(row[:, None] + col[None, :], 2.0 * np.pi).reshape(-1)
    return RisConfig(phases, np.ones(geom.n_elements), row_phases=row, col_phases=col)


def array_gain_pattern(geom: ArrayGeometry, config: RisConfig, omega, psi) -> np.ndarray:
    """Unnormalized power pattern of a configured surface toward (omega, psi).

    Evaluates |response(omega, psi)^H . weights|^2, the array factor that the
    cascade h^H Phi G w sees on the outgoing side.  Broadcasts over
    ``omega``/``psi``.  Separable configurations use factored row/column sums
    (O(n_h + n_v) per direction instead of O(n_h * n_v)).
    """
    omega = np.asarray(omega, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if config.row_phases is not None and config.col_phases is not None and np.all(config.amplitudes == 1.0):
        q = np.arange(geom.n_h)
        p = np.arange(geom.n_v)
        sh = np.exp(1j * (config.col_phases - 2.0 * np.pi * geom.delta * omega[..., None] * q)).sum(axis=-1)
        sv = np.exp(1j * (config.row_phases - 2.0 * np.pi * geom.delta * psi[..., None] * p)).sum(axis=-1)
        return (np.abs(sh) * np.abs(sv)) ** 2
    om_b, ps_b = np.broadcast_arrays(omega, psi)
    out = np.empty(om_b.shape, dtype=np.float64)
    w = config.weights
    for idx in np.ndindex(om_b.shape):
        b = pla_response(geom, float(om_b[idx]), float(ps_b[idx]))
        out[idx] = abs(np.conj(b) @ w) ** 2
    return out
