"""Coverage summaries shared by the model-domain and ray-traced evaluators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


def jfi(values, cap: Optional[float] = None) -> float:
    """Jain's fairness index (sum x)^2 / (n sum x^2) of nonnegative values.

    When ``cap`` is given, values are clipped to it first (keeps the index
    meaningful when a few points saturate the receiver).  An all-zero input
    is defined as perfectly fair (1.0).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty value list")
    if np.any(v < 0.0):
        raise ValueError("fairness index needs nonnegative values")
    if cap is not None:
        v = np.minimum(v, cap)
    s2 = float((v * v).sum())
    if s2 == 0.0:
        return 1.0
    return float(v.sum() ** 2 / (v.size * s2))


@dataclass
class CoverageReport:
    """Per-test-point SNR with the serving (station, site) pair and the
    min/mean/fairness summary.  SNR is linear; fairness is computed on
    received powers capped at ``power_cap_w`` when given."""

    positions: np.ndarray
    snr: np.ndarray
    serving: list
    min_snr: float
    mean_snr: float
    jfi: float

    @staticmethod
    def from_snrs(positions, snrs, serving, noise_w: float,
                  power_cap_w: Optional[float] = None) -> "CoverageReport":
        snrs = np.asarray(snrs, dtype=np.float64)
        powers = snrs * noise_w
        return CoverageReport(
            positions=np.asarray(positions, dtype=np.float64),
            snr=snrs,
            serving=list(serving),
            min_snr=float(snrs.min()),
            mean_snr=float(snrs.mean()),
            jfi=jfi(powers, cap=power_cap_w),
        )
