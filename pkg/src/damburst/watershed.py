"""Immersion watershed with explicit dam pixels.

Pixels are flooded level by level. Inside a level, labels spread by
breadth-first geodesic distance from the already-flooded area; a pixel that
is reached by two basins becomes a dam pixel (label 0). Plateaus left
unreached at a level are new regional minima and seed new basins.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .gradient import GradientField

LEVELS = 256

_INIT = -1
_MASK = -2
_DAM = 0


def quantize(g, levels: int = LEVELS) -> np.ndarray:
    """Map magnitudes linearly from [0, max] onto 0..levels-1 with floor rounding."""
    mag = g.magnitude if isinstance(g, GradientField) else np.asarray(g, dtype=np.float64)
    top = float(mag.max()) if mag.size else 0.0
    if top <= 0:
        return np.zeros(mag.shape, dtype=np.int64)
    q = np.floor(mag / top * (levels - 1)).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def _neighbors4(h: int, w: int):
    n = h * w
    nbrs = [None] * n
    for y in range(h):
        base = y * w
        for x in range(w):
            lst = []
            if y > 0:
                lst.append(base - w + x)
            if x > 0:
                lst.append(base + x - 1)
            if x < w - 1:
                lst.append(base + x + 1)
            if y < h - 1:
                lst.append(base + w + x)
            nbrs[base + x] = lst
    return nbrs


def flood(levels: np.ndarray) -> np.ndarray:
    """Watershed of an integer level field; returns uint32 labels (0 = dam)."""
    levels = np.asarray(levels)
    h, w = levels.shape
    n = h * w
    flat = levels.ravel()
    order = np.argsort(flat, kind="stable").tolist()
    flat = flat.tolist()
    nbrs = _neighbors4(h, w)

    lab = [_INIT] * n
    dist = [0] * n
    current = 0
    fifo = deque()
    FICT = -1

    i = 0
    while i < n:
        hcur = flat[order[i]]
        j = i
        while j < n and flat[order[j]] == hcur:
            j += 1
        level_pixels = order[i:j]
        i = j

        for p in level_pixels:
            lab[p] = _MASK
            for q in nbrs[p]:
                if lab[q] >= 0:
                    dist[p] = 1
                    fifo.append(p)
                    break

        curdist = 1
        fifo.append(FICT)
        while True:
            p = fifo.popleft()
            if p == FICT:
                if not fifo:
                    break
                fifo.append(FICT)
                curdist += 1
                p = fifo.popleft()
            # Every already-flooded neighbor votes, including ones settled
            # earlier in this wave, so two basins can never touch directly.
            found = 0
            conflict = False
            for q in nbrs[p]:
                lq = lab[q]
                if lq > 0:
                    if found == 0:
                        found = lq
                    elif lq != found:
                        conflict = True
                elif lq == _MASK and dist[q] == 0:
                    dist[q] = curdist + 1
                    fifo.append(q)
            if conflict or found == 0:
                lab[p] = _DAM
            else:
                lab[p] = found

        for p in level_pixels:
            dist[p] = 0
            if lab[p] == _MASK:
                current += 1
                lab[p] = current
                fifo.append(p)
                while fifo:
                    r = fifo.popleft()
                    for q in nbrs[r]:
                        if lab[q] == _MASK:
                            lab[q] = current
                            fifo.append(q)

    _absorb_lonely_dams(lab, h, w, nbrs)
    return np.asarray(lab, dtype=np.uint32).reshape(h, w)


def _neighbors8_labels(lab, h, w, p):
    y, x = divmod(p, w)
    out = set()
    for dy in (-1, 0, 1):
        yy = y + dy
        if yy < 0 or yy >= h:
            continue
        for dx in (-1, 0, 1):
            xx = x + dx
            if (dy or dx) and 0 <= xx < w:
                v = lab[yy * w + xx]
                if v > 0:
                    out.add(v)
    return out


def _absorb_lonely_dams(lab, h, w, nbrs):
    """Give a dam pixel to its region when that region is the only one it touches.

    Only pixels with a 4-neighbor in that region are absorbed, which keeps
    regions 4-connected. Repeats until nothing changes.
    """
    pending = [p for p, v in enumerate(lab) if v == _DAM]
    changed = True
    while changed and pending:
        changed = False
        rest = []
        # in-place updates: a later pixel sees the earlier absorption
        for p in pending:
            seen = _neighbors8_labels(lab, h, w, p)
            if len(seen) == 1:
                (only,) = seen
                if any(lab[q] == only for q in nbrs[p]):
                    lab[p] = only
                    changed = True
                    continue
            rest.append(p)
        pending = rest


def watershed(g: GradientField) -> np.ndarray:
    """Label field of the gradient magnitude: dense ids 1..K, dam pixels 0."""
    return flood(quantize(g))
