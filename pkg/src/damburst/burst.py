"""Iterated, edge-constrained dam bursting over a region adjacency graph."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .rag import RegionGraph, dam_key, dam_strength, ind, rsi
from .raster_io import Raster


@dataclass(frozen=True)
class DamBurstParams:
    t_c: float = 0.3
    t_rsi: float = 0.2

    def __post_init__(self):
        if not (0 < self.t_c < 1):
            raise ValueError(f"t_c must lie in (0, 1), got {self.t_c}")
        if self.t_rsi < 0:
            raise ValueError(f"t_rsi must be >= 0, got {self.t_rsi}")


@dataclass(frozen=True)
class MergeRecord:
    pass_index: int
    scanner: int
    candidate: int
    survivor: int
    absorbed: int
    ind: float
    strength: float
    mo_scanner: float
    mo_candidate: float
    rsi: float
    strong: bool
    t_ind_before: float
    t_ind_after: float

    def to_dict(self):
        return asdict(self)


@dataclass
class RunStats:
    outer_iterations: int = 0
    total_merges: int = 0
    t_ind_final: float = 0.0
    region_count_initial: int = 0
    region_count_final: int = 0
    t_ind_trace: list = field(default_factory=list)
    regions_after_pass: list = field(default_factory=list)
    merge_log: list = field(default_factory=list)


def _select(graph: RegionGraph, a: int, p: DamBurstParams, t_ind: float):
    """Pick the neighbor whose dam ``a`` may burst, or None.

    Returns ``(candidate, ind, rsi, strong)``.
    """
    ra = graph.regions[a]
    mo_a = ra.mo
    r_index = rsi(graph, ra, p.t_c)
    strong = r_index > p.t_rsi
    best = None
    best_ind = math.inf
    for b in sorted(graph.adjacency[a]):
        rb = graph.regions[b]
        if rb.mo > mo_a or dam_strength(graph.dams[dam_key(a, b)]) > p.t_c:
            continue
        d = ind(ra, rb)
        if strong and d > t_ind:
            continue
        if d < best_ind:
            best_ind = d
            best = b
    return best, best_ind, r_index, strong


def dam_burst(graph: RegionGraph, p: DamBurstParams, inplace: bool = False):
    """Merge regions until a full pass bursts no dam.

    Each pass visits the regions once in ascending order of merging order
    (ties by id), with the order frozen at the start of the pass. A region
    may burst a weak dam (strength <= t_c) towards a neighbor whose merging
    order is not larger than its own; a region with a strength index above
    t_rsi additionally needs the color distance to be within the running
    threshold t_ind. The closest qualifying neighbor is merged at once, and
    the lower id survives.

    Returns ``(graph, RunStats)``; the input graph is copied unless ``inplace``.
    """
    if not inplace:
        graph = graph.copy()
    stats = RunStats()
    stats.region_count_initial = len(graph.alive_ids())
    t_ind = 0.0
    merged = True
    while merged:
        merged = False
        order = sorted(graph.alive_ids(), key=lambda rid: (graph.regions[rid].mo, rid))
        count = 0
        total = 0.0
        pass_index = stats.outer_iterations
        stats.outer_iterations += 1
        for a in order:
            if not graph.regions[a].alive:
                continue
            b, d, r_index, strong = _select(graph, a, p, t_ind)
            if b is None:
                continue
            strength = dam_strength(graph.dams[dam_key(a, b)])
            mo_a, mo_b = graph.regions[a].mo, graph.regions[b].mo
            survivor, absorbed = min(a, b), max(a, b)
            graph.merge(survivor, absorbed)
            merged = True
            count += 1
            total += d
            before = t_ind
            t_ind = max(t_ind, total / count)
            stats.t_ind_trace.append(t_ind)
            stats.merge_log.append(
                MergeRecord(pass_index, a, b, survivor, absorbed, d, strength, mo_a, mo_b, r_index, strong, before, t_ind)
            )
        stats.regions_after_pass.append(len(graph.alive_ids()))
    stats.total_merges = len(stats.merge_log)
    stats.t_ind_final = t_ind
    stats.region_count_final = len(graph.alive_ids())
    return graph, stats


def replay_merge_log(graph: RegionGraph, log, p: DamBurstParams, rtol: float = 1e-9):
    """Re-apply a merge log to a copy of ``graph`` and check every burst.

    At each step the conditions are re-evaluated on the replayed graph state:
    the pair is adjacent, the dam is weak, the candidate's merging order does
    not exceed the scanner's, a strong scanner respected t_ind, and the
    candidate was the closest qualifying neighbor. Returns a list of problems
    (empty when the log is valid).
    """
    g = graph.copy()
    problems = []
    t_ind = 0.0
    current_pass = None
    count = 0
    total = 0.0

    def close(x, y):
        return math.isclose(x, y, rel_tol=rtol, abs_tol=1e-12)

    for i, rec in enumerate(log):
        if rec.pass_index != current_pass:
            current_pass = rec.pass_index
            count, total = 0, 0.0
        a, b = rec.scanner, rec.candidate
        if not (g.regions[a].alive and g.regions[b].alive):
            problems.append(f"#{i}: dead region in ({a}, {b})")
            continue
        if b not in g.adjacency[a]:
            problems.append(f"#{i}: {a} and {b} are not adjacent")
            continue
        c = g.strength(a, b)
        if c > p.t_c:
            problems.append(f"#{i}: burst dam strength {c} > t_c")
        if g.regions[b].mo > g.regions[a].mo:
            problems.append(f"#{i}: candidate merging order exceeds scanner's")
        expect_b, expect_d, r_index, strong = _select(g, a, p, t_ind)
        if strong != rec.strong or not close(r_index, rec.rsi):
            problems.append(f"#{i}: strength index mismatch")
        d = g.ind(a, b)
        if strong and d > t_ind:
            problems.append(f"#{i}: strong scanner merged with ind {d} > t_ind {t_ind}")
        if expect_b != b:
            problems.append(f"#{i}: expected candidate {expect_b}, log has {b}")
        if not (close(d, rec.ind) and close(c, rec.strength) and close(t_ind, rec.t_ind_before)):
            problems.append(f"#{i}: recorded evidence differs from replay")
        if (rec.survivor, rec.absorbed) != (min(a, b), max(a, b)):
            problems.append(f"#{i}: survivor is not the lower id")
        g.merge(min(a, b), max(a, b))
        count += 1
        total += d
        t_ind = max(t_ind, total / count)
        if not close(t_ind, rec.t_ind_after):
            problems.append(f"#{i}: t_ind after merge differs from replay")
    return problems


def finalize_labels(graph: RegionGraph, labels: np.ndarray, raster: Raster) -> np.ndarray:
    """Flatten merges into a dam-free label field with dense ids 1..K.

    Region ids map to their surviving root, renumbered in ascending root
    order. Each dam pixel joins the neighboring region (8-neighborhood) whose
    mean color is closest to the pixel's color, ties to the lower id. Dam
    pixels with no labeled neighbor are resolved in later sweeps.
    """
    labels = np.asarray(labels)
    h, w = labels.shape
    roots = {rid: graph.root(rid) for rid in graph.regions}
    alive = sorted(set(roots.values()))
    dense = {root: k + 1 for k, root in enumerate(alive)}
    lut = np.zeros(int(labels.max(initial=0)) + 1, dtype=np.uint32)
    for rid, root in roots.items():
        lut[rid] = dense[root]
    out = lut[labels.astype(np.int64)]

    means = np.zeros((len(alive) + 1, raster.channels))
    for root in alive:
        means[dense[root]] = graph.regions[root].means
    colors = raster.samples.reshape(h, w, -1).astype(np.float64)

    pending = list(zip(*np.nonzero(out == 0)))
    while pending:
        assigned = []
        rest = []
        for y, x in pending:
            y0, y1, x0, x1 = max(y - 1, 0), min(y + 2, h), max(x - 1, 0), min(x + 2, w)
            cands = sorted(set(out[y0:y1, x0:x1].ravel().tolist()) - {0})
            if not cands:
                rest.append((y, x))
                continue
            d = [float(np.sum((colors[y, x] - means[k]) ** 2)) for k in cands]
            assigned.append((y, x, cands[int(np.argmin(d))]))
        if not assigned:
            break
        for y, x, k in assigned:
            out[y, x] = k
        pending = rest
    return out
