"""Local-time measures of synchronously driven reflected paths.

``LocalTimeMeasure`` charges the step ``[k dt, (k+1) dt]`` with the
local-time increment of that step.  Mutual singularity cannot be decided
from a finite grid, so ``overlap_statistic`` reports the shared mass of
the two normalized measures at bin width ``h``; singular pairs show the
overlap falling as ``h`` shrinks.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMeasure, GridMismatch, InvalidInput, WrongDomain
from .geometry import Disk, angle_between

DEFAULT_EPS_ANG = 0.05


@dataclass(frozen=True, eq=False)
class LocalTimeMeasure:
    dt: float
    increments: np.ndarray

    def __post_init__(self):
        if np.any(self.increments < 0):
            raise InvalidInput("local-time increments must be non-negative")

    @classmethod
    def from_path(cls, path):
        return cls(path.grid.dt, np.diff(path.local_time))

    @property
    def cumulative(self):
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    def mass(self, start, stop):
        """Measure of ``[start dt, stop dt]`` (grid indices)."""
        return float(self.increments[start:stop].sum())


def _same_grid(px, py):
    if len(px.positions) != len(py.positions) or px.grid.dt != py.grid.dt:
        raise GridMismatch("paths are on different grids")


def stopping_time_T(px, py, domain, eps_bd=0.01, eps_ang=DEFAULT_EPS_ANG):
    """First step with both paths in the band and nearly equal boundary normals."""
    _same_grid(px, py)
    fx = domain.signed_distance(px.positions) <= eps_bd
    fy = domain.signed_distance(py.positions) <= eps_bd
    cand = np.flatnonzero(fx & fy)
    if cand.size == 0:
        return None
    _, nx = domain.nearest_normals(px.positions[cand])
    _, ny = domain.nearest_normals(py.positions[cand])
    cos = np.clip(np.sum(nx * ny, axis=1), -1.0, 1.0)
    hit = np.flatnonzero(np.arccos(cos) < eps_ang)
    return int(cand[hit[0]]) if hit.size else None


def normal_angles(px, py, domain, indices):
    """Angles between the nearest-boundary normals of the two paths (diagnostic)."""
    return np.array(
        [
            angle_between(
                domain.nearest_boundary_normal(px.positions[k])[1],
                domain.nearest_boundary_normal(py.positions[k])[1],
            )
            for k in indices
        ]
    )


def binned(measure, h, up_to):
    if h < measure.dt * (1 - 1e-12):
        raise InvalidInput("bin width must be at least one time step")
    if not 0 < up_to <= len(measure.increments):
        raise InvalidInput(f"window end {up_to} out of range")
    per_bin = max(1, int(round(h / measure.dt)))
    inc = measure.increments[:up_to]
    return np.add.reduceat(inc, np.arange(0, up_to, per_bin))


def overlap_statistic(mx, my, h, up_to):
    """Shared mass ``sum(min(mx_bin, my_bin))`` of the normalized measures on ``[0, up_to dt]``."""
    if mx.dt != my.dt:
        raise GridMismatch("measures live on different grids")
    bx = binned(mx, h, up_to)
    by = binned(my, h, up_to)
    sx, sy = bx.sum(), by.sum()
    if sx <= 0 and sy <= 0:
        raise EmptyMeasure("both measures vanish on the window")
    if sx <= 0 or sy <= 0:
        return 0.0
    return float(np.minimum(bx / sx, by / sy).sum())


def single_band_edge(domain, pts, eps_bd):
    """Per point: the unique edge whose band contains it, else -1."""
    inband = domain.edge_distance_matrix(pts) <= eps_bd
    one = inband.sum(axis=1) == 1
    return np.where(one, np.argmax(inband, axis=1), -1)


def same_edge_window(px, py, domain, eps_bd=0.01):
    """First maximal run of steps on which both paths sit in one common edge band.

    Returns ``(start, stop, edge_id)`` with ``stop`` exclusive, or ``None``.
    """
    if isinstance(domain, Disk):
        raise WrongDomain("same-edge windows need a polygonal domain")
    _same_grid(px, py)
    ex = single_band_edge(domain, px.positions, eps_bd)
    ey = single_band_edge(domain, py.positions, eps_bd)
    ok = (ex >= 0) & (ex == ey)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return None
    start = int(idx[0])
    edge = int(ex[start])
    stop = start
    while stop < len(ok) and ok[stop] and ex[stop] == edge:
        stop += 1
    return start, stop, edge


def skorokhod_1d(h0, free_increments):
    """Explicit one-sided discrete Skorokhod map: ``(heights, cumulative pushes)``."""
    w = np.concatenate([[0.0], np.cumsum(free_increments)])
    pushes = np.maximum(0.0, np.maximum.accumulate(-(h0 + w)))
    return h0 + w + pushes, pushes


@dataclass(frozen=True)
class SameEdgeReport:
    window: tuple
    lt_x: float
    lt_y: float
    oracle_x: float
    oracle_y: float
    bound: float

    @property
    def difference(self):
        return abs(self.lt_x - self.lt_y)


def same_edge_report(px, py, domain, increments, eps_bd=0.01):
    """Local time gained by two synchronous paths over their first same-edge window.

    ``increments`` is the shared planar driver.  The 1-D Skorokhod map of the
    normal driver gives the oracle pushes from the heights at the window
    start; both pushes lie in ``[0, osc]`` where ``osc`` is the oscillation of
    the normal driver on the window, so ``osc`` bounds their difference.
    """
    win = same_edge_window(px, py, domain, eps_bd)
    if win is None:
        return None
    start, stop, edge = win
    nrm = domain.edge_normal(edge)
    base = domain.edges[edge, :2]
    w = np.asarray(increments, dtype=float)[start : stop - 1] @ nrm
    hx, hy = (px.positions[start] - base) @ nrm, (py.positions[start] - base) @ nrm
    ox = skorokhod_1d(hx, w)[1][-1]
    oy = skorokhod_1d(hy, w)[1][-1]
    path = np.concatenate([[0.0], np.cumsum(w)])
    return SameEdgeReport(
        (start, stop, edge),
        float(px.local_time[stop - 1] - px.local_time[start]),
        float(py.local_time[stop - 1] - py.local_time[start]),
        float(ox),
        float(oy),
        float(path.max() - path.min()),
    )
