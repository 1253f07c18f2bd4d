"""Region adjacency graph over a watershed partition.

Regions ("water-pools") carry interior sums so that the merging order
(mean gradient magnitude) and the per-channel color means can be updated in
O(1) on merge. Dams carry the set of dam pixels between two regions and the
subset of those pixels that an edge pixel supports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import ndimage

from .gradient import GradientField
from .raster_io import Raster

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class Region:
    id: int
    pixel_count: int
    gradient_sum: float
    channel_sums: np.ndarray
    alive: bool = True

    @property
    def mo(self) -> float:
        """Merging order: mean gradient magnitude over the region's interior."""
        return self.gradient_sum / self.pixel_count

    @property
    def means(self) -> np.ndarray:
        return self.channel_sums / self.pixel_count


@dataclass
class Dam:
    region_a: int
    region_b: int
    pixels: set = field(default_factory=set)
    supported: set = field(default_factory=set)

    @property
    def length(self) -> int:
        return len(self.pixels)

    @property
    def strengthened(self) -> int:
        return len(self.supported)

    @property
    def strength(self) -> float:
        return dam_strength(self)


def dam_key(a: int, b: int):
    return (a, b) if a < b else (b, a)


def mo(region: Region) -> float:
    return region.mo


def dam_strength(d: Dam) -> float:
    """Fraction of a dam's pixels that sit on (or next to) an edge pixel."""
    if d.length < 1:
        raise ValueError("dam has no pixels")
    return d.strengthened / d.length


def ind(a: Region, b: Region) -> float:
    """Euclidean distance between the per-channel mean intensities."""
    diff = np.asarray(a.means, dtype=np.float64) - np.asarray(b.means, dtype=np.float64)
    return math.sqrt(float(np.dot(diff, diff)))


class GraphError(Exception):
    pass


class RegionGraph:
    def __init__(self, shape, regions, dams, dam_pixel_count: int):
        self.shape = tuple(shape)
        self.regions: dict[int, Region] = regions
        self.dams: dict[tuple, Dam] = dams
        self.dam_pixel_count = dam_pixel_count
        self.adjacency: dict[int, set] = {rid: set() for rid in regions}
        for a, b in dams:
            self.adjacency[a].add(b)
            self.adjacency[b].add(a)
        self.merged_into: dict[int, int] = {}

    def __repr__(self):
        return f"RegionGraph(alive={len(self.alive_ids())}, dams={len(self.dams)})"

    def alive_ids(self):
        return sorted(rid for rid, r in self.regions.items() if r.alive)

    def neighbors(self, rid: int):
        return sorted(self.adjacency[rid])

    def dam(self, a: int, b: int) -> Dam:
        return self.dams[dam_key(a, b)]

    def strength(self, a: int, b: int) -> float:
        return dam_strength(self.dam(a, b))

    def ind(self, a: int, b: int) -> float:
        return ind(self.regions[a], self.regions[b])

    def rsi(self, rid: int, t_c: float) -> float:
        return rsi(self, self.regions[rid], t_c)

    def root(self, rid: int) -> int:
        while rid in self.merged_into:
            rid = self.merged_into[rid]
        return rid

    def merge(self, survivor: int, absorbed: int) -> int:
        return merge(self, self.regions[survivor], self.regions[absorbed])

    def copy(self) -> "RegionGraph":
        regions = {
            rid: Region(r.id, r.pixel_count, r.gradient_sum, r.channel_sums.copy(), r.alive)
            for rid, r in self.regions.items()
        }
        dams = {k: Dam(d.region_a, d.region_b, set(d.pixels), set(d.supported)) for k, d in self.dams.items()}
        g = RegionGraph(self.shape, regions, dams, self.dam_pixel_count)
        g.merged_into = dict(self.merged_into)
        return g

    def stats(self):
        """Canonical summary of alive regions and dams, for comparisons."""
        regions = {
            rid: (r.pixel_count, r.gradient_sum, tuple(float(v) for v in r.channel_sums))
            for rid, r in sorted(self.regions.items())
            if r.alive
        }
        dams = {k: (d.length, d.strengthened) for k, d in sorted(self.dams.items())}
        return regions, dams

    def to_json(self, t_c: float | None = None) -> str:
        regions = []
        for rid in self.alive_ids():
            r = self.regions[rid]
            entry = {
                "id": rid,
                "pixel_count": r.pixel_count,
                "mo": r.mo,
                "means": [float(v) for v in r.means],
            }
            if t_c is not None:
                entry["rsi"] = self.rsi(rid, t_c)
            regions.append(entry)
        dams = [
            {
                "a": a,
                "b": b,
                "length": d.length,
                "strengthened": d.strengthened,
                "strength": d.strength,
            }
            for (a, b), d in sorted(self.dams.items())
        ]
        doc = {
            "width": self.shape[1],
            "height": self.shape[0],
            "dam_pixels": self.dam_pixel_count,
            "regions": regions,
            "dams": dams,
        }
        return json.dumps(doc, indent=1)


def rsi(graph: RegionGraph, region: Region, t_c: float) -> float:
    """Mean strength of the region's dams stronger than ``t_c``; 0 if there are none."""
    total = 0.0
    count = 0
    for n in graph.adjacency[region.id]:
        c = dam_strength(graph.dams[dam_key(region.id, n)])
        if c > t_c:
            total += c
            count += 1
    return total / count if count else 0.0


def merge(graph: RegionGraph, survivor: Region, absorbed: Region) -> int:
    """Burst the dam between two adjacent regions and fold ``absorbed`` into ``survivor``.

    Dams that both regions share with a third region are joined into one; the
    joined dam's length and support are the unions of the pixel sets.
    """
    s, a = survivor.id, absorbed.id
    if not (survivor.alive and absorbed.alive):
        raise GraphError(f"cannot merge dead region ({s}, {a})")
    if s == a or a not in graph.adjacency[s]:
        raise GraphError(f"regions {s} and {a} are not adjacent")

    survivor.pixel_count += absorbed.pixel_count
    survivor.gradient_sum += absorbed.gradient_sum
    survivor.channel_sums = survivor.channel_sums + absorbed.channel_sums

    del graph.dams[dam_key(s, a)]
    graph.adjacency[s].discard(a)
    graph.adjacency[a].discard(s)

    for n in sorted(graph.adjacency[a]):
        moved = graph.dams.pop(dam_key(a, n))
        graph.adjacency[n].discard(a)
        key = dam_key(s, n)
        existing = graph.dams.get(key)
        if existing is None:
            graph.dams[key] = Dam(key[0], key[1], moved.pixels, moved.supported)
            graph.adjacency[s].add(n)
            graph.adjacency[n].add(s)
        else:
            existing.pixels |= moved.pixels
            existing.supported |= moved.supported
    graph.adjacency[a] = set()

    absorbed.alive = False
    absorbed.pixel_count = 0
    absorbed.gradient_sum = 0.0
    absorbed.channel_sums = np.zeros_like(absorbed.channel_sums)
    graph.merged_into[a] = s
    return s


def edge_support(edges: np.ndarray) -> np.ndarray:
    """Pixels that are edge pixels or have an edge pixel among their 8 neighbors."""
    return ndimage.binary_dilation(np.asarray(edges, dtype=bool), structure=_EIGHT)


def _check_shapes(labels, g, r, e):
    shape = labels.shape
    others = {
        "gradient": g.magnitude.shape,
        "raster": (r.height, r.width),
        "edges": np.asarray(e).shape,
    }
    for name, s in others.items():
        if tuple(s) != tuple(shape):
            raise GraphError(f"{name} shape {s} does not match labels {shape}")


def build(labels: np.ndarray, g: GradientField, r: Raster, e: np.ndarray) -> RegionGraph:
    """Build the graph from a label field (0 = dam pixel).

    A dam pixel belongs to the dam of every pair of distinct regions found in
    its 8-neighborhood.
    """
    labels = np.asarray(labels)
    _check_shapes(labels, g, r, e)
    h, w = labels.shape
    flat = labels.ravel().astype(np.int64)
    interior = flat > 0
    ids = np.unique(flat[interior])
    nmax = int(ids.max()) + 1 if ids.size else 1

    counts = np.bincount(flat[interior], minlength=nmax)
    gsums = np.bincount(flat[interior], weights=g.magnitude.ravel()[interior], minlength=nmax)
    samples = r.samples.reshape(-1, r.channels).astype(np.float64)
    csums = np.stack(
        [np.bincount(flat[interior], weights=samples[interior, c], minlength=nmax) for c in range(r.channels)],
        axis=1,
    )
    regions = {
        int(i): Region(int(i), int(counts[i]), float(gsums[i]), csums[i].copy()) for i in ids
    }

    support = edge_support(e).ravel()
    padded = np.pad(labels.astype(np.int64), 1)
    dam_idx = np.flatnonzero(~interior)
    ys, xs = np.divmod(dam_idx, w)
    neigh = np.stack(
        [padded[ys + 1 + dy, xs + 1 + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dy or dx],
        axis=1,
    )
    dams: dict[tuple, Dam] = {}
    for p, row in zip(dam_idx.tolist(), neigh.tolist()):
        present = sorted(set(row) - {0})
        if len(present) < 2:
            continue
        strong = bool(support[p])
        for a, b in combinations(present, 2):
            d = dams.get((a, b))
            if d is None:
                d = dams[(a, b)] = Dam(a, b)
            d.pixels.add(p)
            if strong:
                d.supported.add(p)
    return RegionGraph((h, w), regions, dams, int(dam_idx.size))
