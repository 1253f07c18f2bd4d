"""Canny edges with thresholds given as fractions of NMS survivors to retain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .gradient import GradientField, haar_gradient

# Recommended (t_high, t_low) retained fractions keyed by box width.
TABLE1 = {
    5: (0.210, 0.300),
    7: (0.250, 0.370),
    9: (0.290, 0.450),
    11: (0.300, 0.470),
    13: (0.307, 0.490),
    15: (0.315, 0.500),
}

NO_EDGES = (math.inf, math.inf)

_EIGHT = np.ones((3, 3), dtype=bool)

# (dy, dx) of the neighbor along the gradient for each 45-degree sector
_SECTOR_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True)
class CannyParams:
    t_low: float
    t_high: float

    def __post_init__(self):
        if not (0 < self.t_high <= self.t_low <= 1):
            raise ValueError(
                f"need 0 < t_high <= t_low <= 1, got t_high={self.t_high}, t_low={self.t_low}"
            )

    @classmethod
    def for_box_width(cls, w: int) -> "CannyParams":
        t_high, t_low = TABLE1[w]
        return cls(t_low=t_low, t_high=t_high)


@dataclass(frozen=True)
class Candidates:
    """Pixels surviving non-maximum suppression."""

    mask: np.ndarray
    magnitude: np.ndarray

    def __len__(self):
        return int(self.mask.sum())

    def values(self) -> np.ndarray:
        return self.magnitude[self.mask]


@dataclass(frozen=True)
class CannyResult:
    edges: np.ndarray
    candidates: Candidates
    g_low: float
    g_high: float


def orientation_sector(orientation: np.ndarray) -> np.ndarray:
    """Quantize gradient direction to 0 (0 deg), 1 (45), 2 (90) or 3 (135)."""
    a = np.mod(orientation, np.pi)
    return (np.floor((a + np.pi / 8) / (np.pi / 4)).astype(np.int64)) % 4


def nms(g: GradientField) -> Candidates:
    """Keep pixels with positive magnitude that are >= both neighbors along the gradient.

    Neighbors outside the image count as zero.
    """
    mag = g.magnitude
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    sector = orientation_sector(g.orientation)
    keep = mag > 0
    for s, (dy, dx) in enumerate(_SECTOR_OFFSETS):
        fwd = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        bwd = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        sel = sector == s
        keep &= ~sel | ((mag >= fwd) & (mag >= bwd))
    return Candidates(keep, np.where(keep, mag, 0.0))


def retained_count(fraction: float, n: int) -> int:
    # guard against 0.07 * 100 == 7.000000000000001
    return max(1, math.ceil(fraction * n - 1e-9))


def percentile_thresholds(c: Candidates, p: CannyParams):
    """Magnitudes above which the requested fractions of candidates lie.

    Returns ``(g_low, g_high)``; ``NO_EDGES`` when there are no candidates.
    """
    vals = c.values()
    n = vals.size
    if n == 0:
        return NO_EDGES
    desc = np.sort(vals)[::-1]
    g_high = float(desc[retained_count(p.t_high, n) - 1])
    g_low = float(desc[retained_count(p.t_low, n) - 1])
    return g_low, g_high


def hysteresis(c: Candidates, g_low: float, g_high: float) -> np.ndarray:
    """Weak candidates (>= g_low) 8-connected to a strong one (>= g_high)."""
    if g_low > g_high:
        raise ValueError("g_low must not exceed g_high")
    weak = c.mask & (c.magnitude >= g_low)
    strong = weak & (c.magnitude >= g_high)
    if not strong.any():
        return np.zeros_like(c.mask)
    comp, _ = ndimage.label(weak, structure=_EIGHT)
    keep_ids = np.unique(comp[strong])
    return np.isin(comp, keep_ids) & weak


def canny_detail(field, w: int, p: CannyParams, gradient: GradientField | None = None) -> CannyResult:
    g = gradient if gradient is not None else haar_gradient(field, w)
    cand = nms(g)
    g_low, g_high = percentile_thresholds(cand, p)
    edges = hysteresis(cand, g_low, g_high)
    return CannyResult(edges, cand, g_low, g_high)


def canny(field, w: int, p: CannyParams) -> np.ndarray:
    return canny_detail(field, w, p).edges
