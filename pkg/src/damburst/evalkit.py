"""Synthetic scenes, a brute-force graph rebuild and partition comparisons."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .rag import Dam, GraphError, Region, RegionGraph
from .raster_io import Raster


@dataclass
class SyntheticScene:
    raster: Raster
    ground_truth: np.ndarray
    metadata: dict = field(default_factory=dict)


def counter_noise(shape, sigma: float, key: int = 0) -> np.ndarray:
    """Gaussian noise from a Philox counter stream; no global RNG state involved."""
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(shape) * sigma


def gen_step_scene(w: int, h: int, heights, noise_sigma: float = 0.0, key: int = 0, box_width: int = 5) -> SyntheticScene:
    """Vertical bands of the given intensities plus deterministic noise."""
    heights = list(heights)
    if len(heights) < 2:
        raise ValueError("need at least two bands")
    if w < len(heights):
        raise ValueError("image narrower than the number of bands")
    edges = [round(i * w / len(heights)) for i in range(len(heights) + 1)]
    cols = np.zeros(w, dtype=np.int64)
    base = np.zeros(w, dtype=np.float64)
    warnings = []
    for k, (x0, x1) in enumerate(zip(edges[:-1], edges[1:])):
        cols[x0:x1] = k + 1
        base[x0:x1] = heights[k]
        if x1 - x0 < 2 * box_width:
            warnings.append(f"band {k + 1} is {x1 - x0} px wide, under 2*box_width={2 * box_width}")
    img = np.broadcast_to(base, (h, w)).copy()
    if noise_sigma > 0:
        img += counter_noise((h, w), noise_sigma, key)
    samples = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    gt = np.broadcast_to(cols, (h, w)).astype(np.uint32).copy()
    meta = {"kind": "step", "heights": heights, "noise_sigma": noise_sigma, "key": key, "warnings": warnings}
    return SyntheticScene(Raster.from_array(samples), gt, meta)


def gen_texture_scene(w: int, h: int, period: int, amplitude: int, flat_level: int = 32) -> SyntheticScene:
    """Flat patch on the left, checkerboard texture on the right.

    ``period`` is the side of one checkerboard square in pixels. The texture
    alternates between ``128 - amplitude // 2`` and that value plus
    ``amplitude``.
    """
    if period < 2:
        raise ValueError("period must be >= 2")
    if not 0 <= amplitude <= 255:
        raise ValueError("amplitude must fit in 8 bits")
    split = w // 2
    ys, xs = np.mgrid[0:h, 0:w]
    lo = max(0, 128 - amplitude // 2)
    hi = min(255, lo + amplitude)
    checker = ((ys // period + (xs - split) // period) % 2).astype(bool)
    img = np.where(checker, hi, lo)
    img[:, :split] = flat_level
    gt = np.where(xs < split, 1, 2).astype(np.uint32)
    meta = {"kind": "texture", "period": period, "amplitude": amplitude, "split": split}
    return SyntheticScene(Raster.from_array(img.astype(np.uint8)), gt, meta)


def rebuild_oracle(labels, g, r: Raster, e) -> RegionGraph:
    """Naive per-pixel scan that builds the same graph as ``rag.build``.

    Deliberately loop-based and free of shared helpers so it can serve as an
    independent check.
    """
    labels = np.asarray(labels)
    h, w = labels.shape
    mag = g.magnitude
    edges = np.asarray(e, dtype=bool)
    if mag.shape != (h, w) or edges.shape != (h, w) or (r.height, r.width) != (h, w):
        raise GraphError("dimension mismatch")
    lab = labels.tolist()
    regions = {}
    dam_pixels = 0
    dams = {}
    for y in range(h):
        for x in range(w):
            v = lab[y][x]
            if v > 0:
                reg = regions.get(v)
                if reg is None:
                    reg = regions[v] = Region(v, 0, 0.0, np.zeros(r.channels))
                reg.pixel_count += 1
                reg.gradient_sum += float(mag[y, x])
                for c in range(r.channels):
                    reg.channel_sums[c] += float(r.samples[y, x, c])
                continue
            dam_pixels += 1
            around = set()
            supported = False
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        if edges[yy, xx]:
                            supported = True
                        if (dy or dx) and lab[yy][xx] > 0:
                            around.add(lab[yy][xx])
            ids = sorted(around)
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    d = dams.setdefault((ids[i], ids[j]), Dam(ids[i], ids[j]))
                    d.pixels.add(y * w + x)
                    if supported:
                        d.supported.add(y * w + x)
    return RegionGraph((h, w), regions, dams, dam_pixels)


def substitute_labels(labels, graph: RegionGraph) -> np.ndarray:
    """Replace every region id by its surviving root id; dam pixels stay 0."""
    labels = np.asarray(labels)
    lut = np.arange(int(labels.max(initial=0)) + 1, dtype=np.uint32)
    for rid in graph.merged_into:
        lut[rid] = graph.root(rid)
    return lut[labels.astype(np.int64)]


def boundary_mask(labels) -> np.ndarray:
    """Dam pixels plus pixels with a 4-neighbor carrying another label."""
    labels = np.asarray(labels)
    b = labels == 0
    diff_h = labels[:, 1:] != labels[:, :-1]
    diff_v = labels[1:, :] != labels[:-1, :]
    b[:, 1:] |= diff_h
    b[:, :-1] |= diff_h
    b[1:, :] |= diff_v
    b[:-1, :] |= diff_v
    return b


def compare_to_ground_truth(pred, gt, under_fraction: float = 0.10) -> dict:
    """Over/under-segmentation counts and boundary distances against ground truth.

    Dam pixels (label 0) in ``pred`` belong to no predicted region.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    inside = pred > 0
    pairs, counts = np.unique(
        np.stack([pred[inside].astype(np.int64), gt[inside].astype(np.int64)]), axis=1, return_counts=True
    )
    per_pred: dict[int, dict[int, int]] = {}
    for (p, t), n in zip(pairs.T.tolist(), counts.tolist()):
        per_pred.setdefault(p, {})[t] = n

    majority_in: dict[int, int] = {int(t): 0 for t in np.unique(gt)}
    under = []
    for p, row in sorted(per_pred.items()):
        area = sum(row.values())
        best = max(sorted(row), key=lambda t: row[t])
        majority_in[best] = majority_in.get(best, 0) + 1
        covered = [t for t, n in row.items() if n >= under_fraction * area]
        if len(covered) >= 2:
            under.append(p)
    over = sum(max(0, n - 1) for n in majority_in.values())

    gt_b = boundary_mask(gt)
    pred_b = boundary_mask(pred)
    if gt_b.any() and pred_b.any():
        dist = ndimage.distance_transform_edt(~pred_b)[gt_b]
        bstats = {
            "count": int(dist.size),
            "mean": float(dist.mean()),
            "median": float(np.median(dist)),
            "max": float(dist.max()),
        }
    else:
        inf = float("inf") if gt_b.any() else 0.0
        bstats = {"count": int(gt_b.sum()), "mean": inf, "median": inf, "max": inf}
    return {
        "over_seg_count": int(over),
        "under_seg_flags": under,
        "boundary_distance_stats": bstats,
    }


def same_partition(a, b) -> bool:
    """True when two label fields describe the same partition up to renaming."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        return False
    pairs = np.unique(np.stack([a, b]), axis=1)
    return len(np.unique(pairs[0])) == pairs.shape[1] == len(np.unique(pairs[1]))
