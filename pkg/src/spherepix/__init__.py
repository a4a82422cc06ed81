"""Spherical superpixels for 360 degree equirectangular images.

Segmentation respects the spherical acquisition geometry: barycenters are
spread with a low-discrepancy sphere sampling, search areas widen toward the
poles, and every pixel/superpixel comparison aggregates color and contour
evidence along the great-circle path between them.  The metrics submodule
scores any segmentation of spherical imagery, including a projection-based
global regularity measure.
"""

from .core import (
    Params,
    SuperpixelState,
    enforce_connectivity,
    init_superpixels,
    segment,
)
from .features import build_features, load_contour_map, srgb_to_lab
from .metrics import MetricsReport, evaluate, ggr, max_f, pr_curve

__version__ = "0.1.0"

__all__ = [
    "Params",
    "SuperpixelState",
    "MetricsReport",
    "segment",
    "init_superpixels",
    "enforce_connectivity",
    "srgb_to_lab",
    "build_features",
    "load_contour_map",
    "evaluate",
    "ggr",
    "pr_curve",
    "max_f",
    "__version__",
]
