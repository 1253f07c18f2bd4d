"""Command line entry point: ``damburst --input IMG --out-dir DIR``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .pipeline import STAGES, PipelineConfig, PipelineError, load_grid, run_pipeline, sweep


def _stages(text: str) -> frozenset:
    stages = frozenset(s.strip() for s in text.split(",") if s.strip())
    unknown = stages - set(STAGES)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown stage(s) {sorted(unknown)}; choose from {','.join(STAGES)}")
    return stages


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="damburst",
        description="Segment an image by watershed followed by edge-constrained dam bursting.",
    )
    ap.add_argument("--input", required=True, help="PNG or PGM/PPM image")
    ap.add_argument("--out-dir", required=True, help="directory for label maps and stats")
    ap.add_argument("--box-width", type=int, default=5, help="Haar box width, odd (default 5)")
    ap.add_argument("--t-low", type=float, default=None,
                    help="fraction of NMS pixels kept by the low threshold (default: table value for box width)")
    ap.add_argument("--t-high", type=float, default=None,
                    help="fraction of NMS pixels kept by the high threshold (default: table value for box width)")
    ap.add_argument("--t-c", type=float, default=0.3, help="dam strength threshold (default 0.3)")
    ap.add_argument("--t-rsi", type=float, default=0.2, help="strength index threshold (default 0.2)")
    ap.add_argument("--dump", type=_stages, default=frozenset(),
                    help=f"comma-separated intermediates to write: {','.join(STAGES)}")
    ap.add_argument("--sweep", metavar="GRID", default=None,
                    help="JSON file of parameter lists; runs every combination and writes sweep.csv")
    ap.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = PipelineConfig(
        input=args.input,
        out_dir=args.out_dir,
        box_width=args.box_width,
        t_low=args.t_low,
        t_high=args.t_high,
        t_c=args.t_c,
        t_rsi=args.t_rsi,
        dump=args.dump,
    )
    if args.sweep is None:
        return run_pipeline(cfg)
    try:
        grid = load_grid(args.sweep)
    except (OSError, ValueError) as exc:
        print(json.dumps(PipelineError("sweep", str(exc)).record(), sort_keys=True), file=sys.stderr)
        return 1
    sweep(cfg, grid, jobs=args.jobs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
