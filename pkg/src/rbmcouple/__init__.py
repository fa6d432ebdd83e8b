"""Simulation of reflected Brownian motion couplings in planar domains."""

from .errors import CouplingError, InvalidConfig, InvalidInput
from .geometry import (
    ConvexPolygon,
    Disk,
    HalfPlane,
    Line,
    Wedge,
    domain_from_dict,
    intersect,
    mirror_line,
    reflect_across,
    square,
    upper_half_plane,
)
from .harness import ExperimentConfig, RunSummary, load_config, run_experiment, wilson_interval
from .mirror import (
    MirrorTrajectory,
    Theorem3Event,
    detect_theorem3_event,
    simulate_halfplane_mirror,
    simulate_plane_mirror,
    simulate_polygon_mirror,
)
from .noise import PathGrid, SeedSpec, sample_increments
from .reflect import ReflectedPath, simulate_flow, simulate_reflected

__version__ = "0.1.0"
