"""Region-merging image segmentation by bursting weak watershed dams."""

from .burst import DamBurstParams, RunStats, dam_burst, finalize_labels, replay_merge_log
from .canny import CannyParams, canny, hysteresis, nms, percentile_thresholds
from .gradient import GradientField, haar_gradient, sobel_gradient
from .rag import RegionGraph, build
from .raster_io import Raster, load_image, to_luminance, write_label_map
from .watershed import watershed

__all__ = [
    "CannyParams",
    "DamBurstParams",
    "GradientField",
    "Raster",
    "RegionGraph",
    "RunStats",
    "build",
    "canny",
    "dam_burst",
    "finalize_labels",
    "haar_gradient",
    "hysteresis",
    "load_image",
    "nms",
    "percentile_thresholds",
    "replay_merge_log",
    "sobel_gradient",
    "to_luminance",
    "watershed",
    "write_label_map",
]
