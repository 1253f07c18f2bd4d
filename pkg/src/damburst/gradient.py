"""Haar-box and Sobel gradients.

The Haar-box operator compares the mean intensity of two w-by-w boxes that
abut the pixel on either side. Averaging over a full texture cycle flattens
the response inside rough texture while a genuine step still yields its full
height.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster_io import IntegralField

BOX_WIDTHS = (5, 7, 9, 11, 13, 15)


@dataclass(frozen=True)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    orientation: np.ndarray

    @classmethod
    def from_components(cls, gx, gy) -> "GradientField":
        gx = np.asarray(gx, dtype=np.float64)
        gy = np.asarray(gy, dtype=np.float64)
        return cls(gx, gy, np.hypot(gx, gy), np.arctan2(gy, gx))

    @classmethod
    def from_magnitude(cls, magnitude) -> "GradientField":
        """Gradient with the given magnitude pointing along +x (for testing flooding)."""
        m = np.asarray(magnitude, dtype=np.float64)
        return cls.from_components(m, np.zeros_like(m))

    @property
    def shape(self):
        return self.magnitude.shape


def check_box_width(w: int, strict: bool = False) -> int:
    w = int(w)
    if w < 1 or w % 2 == 0:
        raise ValueError(f"box width must be a positive odd integer, got {w}")
    if strict and w not in BOX_WIDTHS:
        raise ValueError(f"box width {w} outside the recommended set {BOX_WIDTHS}")
    return w


def _side_means(ii: IntegralField, values: np.ndarray, w: int, axis: int):
    """Means of the boxes before and after each pixel along ``axis``.

    Also returns a mask of pixels where one of the two boxes lies entirely
    outside the image.
    """
    h, wd = values.shape
    r = (w - 1) // 2
    ys, xs = np.mgrid[0:h, 0:wd]
    if axis == 1:
        along, across, n_along, n_across = xs, ys, wd, h
    else:
        along, across, n_along, n_across = ys, xs, h, wd

    c0 = np.clip(across - r, 0, n_across - 1)
    c1 = np.clip(across + r, 0, n_across - 1)
    span_across = c1 - c0 + 1

    out = []
    missing = np.zeros(values.shape, dtype=bool)
    for lo, hi in ((along - w, along - 1), (along + 1, along + w)):
        lo = np.clip(lo, 0, n_along)
        hi = np.clip(hi, -1, n_along - 1)
        empty = hi < lo
        lo_s = np.where(empty, 0, lo)
        hi_s = np.where(empty, 0, hi)
        if axis == 1:
            s = ii.box_sum(lo_s, c0, hi_s, c1)
        else:
            s = ii.box_sum(c0, lo_s, c1, hi_s)
        area = (hi_s - lo_s + 1) * span_across
        mean = s / area
        out.append(np.where(empty, 0.0, mean))
        missing |= empty
    return out[0], out[1], missing


def haar_gradient(field, w: int) -> GradientField:
    """Haar-box gradient of a 2-D intensity field for odd box width ``w``.

    ``gx`` is the mean of the w-by-w box right of the pixel minus the mean of
    the box left of it; ``gy`` is below minus above. Boxes are clipped to the
    image and never include the pixel itself. On the first and last column
    ``gx`` is 0 (one box is empty), likewise ``gy`` on the first and last row.
    """
    w = check_box_width(w)
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 2 or f.size == 0:
        raise ValueError("haar_gradient needs a non-empty 2-D field")
    # integer-valued input takes the exact int64 summed-area path
    ii = IntegralField(f.astype(np.int64) if np.array_equal(f, np.round(f)) else f)
    left, right, edge_x = _side_means(ii, f, w, axis=1)
    above, below, edge_y = _side_means(ii, f, w, axis=0)
    # no difference is measurable across the image border
    gx = np.where(edge_x, 0.0, right - left)
    gy = np.where(edge_y, 0.0, below - above)
    return GradientField.from_components(gx, gy)


def sobel_gradient(field) -> GradientField:
    """3x3 Sobel gradient, kernels scaled by 1/4, replicated border.

    With this scaling an ideal step of height h gives |gx| = h next to it.
    """
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 2 or min(f.shape) < 3:
        raise ValueError("sobel_gradient needs an image of at least 3x3")
    p = np.pad(f, 1, mode="edge")
    h, w = f.shape

    def at(dy, dx):
        return p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]

    gx = (at(-1, 1) + 2 * at(0, 1) + at(1, 1) - at(-1, -1) - 2 * at(0, -1) - at(1, -1)) / 4.0
    gy = (at(1, -1) + 2 * at(1, 0) + at(1, 1) - at(-1, -1) - 2 * at(-1, 0) - at(-1, 1)) / 4.0
    return GradientField.from_components(gx, gy)
