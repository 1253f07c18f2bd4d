"""End-to-end segmentation: gradient, edges, watershed, graph, dam burst, labels."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rag
from .burst import DamBurstParams, RunStats, dam_burst, finalize_labels
from .canny import TABLE1, CannyParams, CannyResult, canny_detail
from .gradient import GradientField, check_box_width, haar_gradient
from .raster_io import (
    Raster,
    load_image,
    to_luminance,
    write_label_map,
    write_mask_png,
)
from .watershed import watershed

log = logging.getLogger(__name__)

STAGES = ("gradient", "edges", "watershed", "rag", "merge-log")
GRID_KEYS = ("box_width", "t_low", "t_high", "t_c", "t_rsi")
CSV_FIELDS = (
    "cell",
    "box_width",
    "t_low",
    "t_high",
    "t_c",
    "t_rsi",
    "status",
    "initial_regions",
    "final_regions",
    "reduction_ratio",
    "outer_iterations",
    "total_merges",
    "t_ind_final",
    "nms_candidates",
    "edge_pixels",
    "error",
)


class PipelineError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message

    def record(self) -> dict:
        return {"status": "error", "stage": self.stage, "error": self.message}


@dataclass(frozen=True)
class PipelineConfig:
    input: str
    out_dir: str
    box_width: int = 5
    t_low: float | None = None
    t_high: float | None = None
    t_c: float = 0.3
    t_rsi: float = 0.2
    dump: frozenset = field(default_factory=frozenset)

    def resolved(self) -> "PipelineConfig":
        """Fill omitted Canny fractions from the recommended table for the box width."""
        w = check_box_width(self.box_width)
        t_high, t_low = self.t_high, self.t_low
        if t_high is None or t_low is None:
            if w not in TABLE1:
                raise ValueError(f"no recommended thresholds for box width {w}; pass --t-low and --t-high")
            d_high, d_low = TABLE1[w]
            t_high = d_high if t_high is None else t_high
            t_low = d_low if t_low is None else t_low
        unknown = set(self.dump) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown dump stage(s): {sorted(unknown)}")
        return replace(self, box_width=w, t_low=float(t_low), t_high=float(t_high))

    def parameters(self) -> dict:
        return {
            "box_width": self.box_width,
            "t_low": self.t_low,
            "t_high": self.t_high,
            "t_c": self.t_c,
            "t_rsi": self.t_rsi,
        }


@dataclass
class Segmentation:
    gradient: GradientField
    canny: CannyResult
    watershed: np.ndarray
    initial_graph: rag.RegionGraph
    graph: rag.RegionGraph
    run: RunStats
    labels: np.ndarray


def segment(raster: Raster, box_width: int, canny_params: CannyParams, burst_params: DamBurstParams) -> Segmentation:
    """Run every stage on an in-memory raster."""
    lum = to_luminance(raster)
    g = haar_gradient(lum, box_width)
    edges = canny_detail(lum, box_width, canny_params, gradient=g)
    ws = watershed(g)
    graph0 = rag.build(ws, g, raster, edges.edges)
    graph, run = dam_burst(graph0, burst_params)
    labels = finalize_labels(graph, ws, raster)
    return Segmentation(g, edges, ws, graph0, graph, run, labels)


def stats_record(cfg: PipelineConfig, raster: Raster, seg: Segmentation) -> dict:
    run = seg.run
    return {
        "input": str(cfg.input),
        "width": raster.width,
        "height": raster.height,
        "channels": raster.channels,
        "initial_regions": run.region_count_initial,
        "final_regions": run.region_count_final,
        "reduction_ratio": run.region_count_final / run.region_count_initial if run.region_count_initial else 1.0,
        "outer_iterations": run.outer_iterations,
        "total_merges": run.total_merges,
        "t_ind_final": run.t_ind_final,
        "nms_candidates": len(seg.canny.candidates),
        "edge_pixels": int(seg.canny.edges.sum()),
        "parameters": cfg.parameters(),
    }


def _dump(cfg: PipelineConfig, out: Path, seg: Segmentation) -> None:
    if "gradient" in cfg.dump:
        for name, arr in (("magnitude", seg.gradient.magnitude), ("gx", seg.gradient.gx), ("gy", seg.gradient.gy)):
            (out / f"gradient_{name}.f32").write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    if "edges" in cfg.dump:
        write_mask_png(seg.canny.edges, out / "edges.png")
    if "watershed" in cfg.dump:
        write_label_map(seg.watershed, out / "watershed.dblm", "raw-u32")
        write_label_map(seg.watershed, out / "watershed.png", "colorized-png")
    if "rag" in cfg.dump:
        (out / "rag.json").write_text(seg.initial_graph.to_json(cfg.t_c) + "\n")
    if "merge-log" in cfg.dump:
        with open(out / "merge_log.jsonl", "w") as fh:
            for rec in seg.run.merge_log:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def execute(cfg: PipelineConfig) -> dict:
    """Run the pipeline for one configuration and write its artifacts.

    Raises :class:`PipelineError` naming the failing stage.
    """
    try:
        cfg = cfg.resolved()
        canny_params = CannyParams(t_low=cfg.t_low, t_high=cfg.t_high)
        burst_params = DamBurstParams(t_c=cfg.t_c, t_rsi=cfg.t_rsi)
    except ValueError as exc:
        raise PipelineError("config", str(exc)) from exc
    try:
        raster = load_image(cfg.input)
    except Exception as exc:
        raise PipelineError("load", str(exc)) from exc
    try:
        seg = segment(raster, cfg.box_width, canny_params, burst_params)
    except Exception as exc:
        raise PipelineError("segment", f"{type(exc).__name__}: {exc}") from exc
    try:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_label_map(seg.labels, out / "labels.dblm", "raw-u32")
        write_label_map(seg.labels, out / "labels.png", "colorized-png")
        record = stats_record(cfg, raster, seg)
        (out / "stats.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        _dump(cfg, out, seg)
    except OSError as exc:
        raise PipelineError("write", str(exc)) from exc
    log.info("%s: %d -> %d regions", cfg.input, record["initial_regions"], record["final_regions"])
    return record


def run_pipeline(cfg: PipelineConfig) -> int:
    """Run one configuration; on failure write ``error.json`` and return 1."""
    try:
        execute(cfg)
    except PipelineError as exc:
        rec = exc.record()
        try:
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(rec, sort_keys=True) + "\n")
        except OSError:
            pass
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        return 1
    return 0


def load_grid(path) -> dict:
    grid = json.loads(Path(path).read_text())
    if not isinstance(grid, dict):
        raise ValueError("sweep grid must be a JSON object of parameter lists")
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        raise ValueError(f"unknown sweep parameter(s): {sorted(unknown)}")
    return {k: list(v) if isinstance(v, (list, tuple)) else [v] for k, v in grid.items()}


def grid_cells(base: PipelineConfig, grid: dict):
    """Cartesian product of the grid in fixed key order; empty grid gives no cells."""
    keys = [k for k in GRID_KEYS if k in grid]
    if not keys:
        return []
    cells = []
    for i, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        overrides = dict(zip(keys, values))
        cfg = replace(base, out_dir=str(Path(base.out_dir) / f"cell_{i:03d}"), **overrides)
        cells.append(cfg)
    return cells


def _run_cell(cfg: PipelineConfig) -> dict:
    try:
        rec = execute(cfg)
        rec["status"] = "ok"
        return rec
    except PipelineError as exc:
        rec = exc.record()
        rec["parameters"] = cfg.parameters()
        return rec


def sweep(base: PipelineConfig, grid: dict, jobs: int = 1) -> list:
    """Run every grid cell and write ``sweep.csv`` into ``base.out_dir``.

    Failing cells are recorded with their error and do not stop the sweep.
    """
    cells = grid_cells(base, grid)
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, cells))
    else:
        records = [_run_cell(c) for c in cells]
    out = Path(base.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(records))
    return records


def sweep_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for i, rec in enumerate(records):
        row = {"cell": i, "status": rec.get("status", "ok"), "error": rec.get("error", "")}
        row.update(rec.get("parameters", {}))
        for k in CSV_FIELDS:
            if k not in row and k in rec:
                row[k] = rec[k]
        writer.writerow(row)
    return buf.getvalue()


def config_dict(cfg: PipelineConfig) -> dict:
    d = asdict(cfg)
    d["dump"] = sorted(cfg.dump)
    return d
