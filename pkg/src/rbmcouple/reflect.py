"""Reflected Brownian motion by Euclidean projection, and synchronous flows.

One step proposes ``p = x + db`` and, if ``p`` left the domain, moves it to
the nearest point ``q`` of the closed domain.  ``|q - p|`` is the local-time
increment and ``q - p`` the push along the inward normal, so positions
satisfy the discrete Skorokhod decomposition

    X_k = x0 + sum(db_j) + sum(q_j - p_j).
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as K
from .errors import DegenerateInput, InvalidInput, StartOutsideDomain
from .geometry import BOUNDARY_TOL, as_point
from .noise import IncrementStream, PathGrid

DEFAULT_BAND = 0.01


@njit(cache=True, nogil=True)
def _reflect_path(kind, edges, disk, x0, y0, inc):
    n = inc.shape[0]
    pos = np.empty((n + 1, 2))
    lt = np.zeros(n + 1)
    push = np.zeros((n, 2))
    corner = np.zeros(n, dtype=np.bool_)
    px = x0
    py = y0
    pos[0, 0] = px
    pos[0, 1] = py
    for k in range(n):
        ax = px + inc[k, 0]
        ay = py + inc[k, 1]
        qx, qy, c = K.project(kind, edges, disk, ax, ay)
        push[k, 0] = qx - ax
        push[k, 1] = qy - ay
        lt[k + 1] = lt[k] + math.hypot(qx - ax, qy - ay)
        corner[k] = c
        px = qx
        py = qy
        pos[k + 1, 0] = px
        pos[k + 1, 1] = py
    return pos, lt, push, corner


@dataclass(frozen=True, eq=False)
class ReflectedPath:
    grid: PathGrid
    positions: np.ndarray  # (n + 1, 2)
    local_time: np.ndarray  # (n + 1,)
    boundary_flags: np.ndarray  # (n + 1,) bool
    pushes: np.ndarray  # (n, 2), q - p per step
    corner_steps: np.ndarray  # (n,) bool, projection landed on a vertex
    band: float = DEFAULT_BAND

    @property
    def times(self):
        return self.grid.times

    @property
    def lt_increments(self):
        return np.diff(self.local_time)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "L", "onBoundary"])
            for t, (x, y), L, b in zip(self.times, self.positions, self.local_time, self.boundary_flags):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(L)), int(b)])

    @classmethod
    def from_csv(cls, path, band=DEFAULT_BAND):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t, pos, lt, flags = data[:, 0], data[:, 1:3], data[:, 3], data[:, 4].astype(bool)
        dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
        n = len(t) - 1
        return cls(PathGrid(dt, max(n, 1)), pos, lt, flags, np.zeros((n, 2)), np.zeros(n, bool), band)


def _check_start(domain, x):
    if domain.signed_distance(x) < -BOUNDARY_TOL:
        raise StartOutsideDomain(f"start {np.asarray(x).tolist()} lies outside the domain")


def step_reflect(domain, x, db):
    """One projected Euler step: ``(new position, local-time increment)``."""
    x = as_point(x)
    _check_start(domain, x)
    p = x + as_point(db)
    q, _ = domain.project(p)
    return q, float(math.hypot(*(q - p)))


def simulate_reflected(domain, x0, noise, band=DEFAULT_BAND):
    x0 = as_point(x0)
    _check_start(domain, x0)
    inc = np.ascontiguousarray(noise.increments, dtype=float)
    if inc.ndim != 2 or inc.shape[1] != 2:
        raise InvalidInput("reflected paths need planar increments")
    pos, lt, push, corner = _reflect_path(*domain.encoded, float(x0[0]), float(x0[1]), inc)
    flags = domain.signed_distance(pos) <= band
    return ReflectedPath(noise.grid, pos, lt, flags, push, corner, band)


@dataclass(frozen=True, eq=False)
class FlowState:
    domain: object
    noise: IncrementStream
    members: list

    def flags(self, band=None):
        if band is None:
            return np.stack([m.boundary_flags for m in self.members])
        return np.stack([self.domain.signed_distance(m.positions) <= band for m in self.members])


def simulate_flow(domain, starts, noise, band=DEFAULT_BAND):
    """Synchronous coupling: every start driven by the same increments."""
    starts = np.atleast_2d(as_point(starts))
    members = [simulate_reflected(domain, s, noise, band) for s in starts]
    return FlowState(domain, noise, members)


def detect_simultaneous_boundary(flow, band=None):
    """First step at which every member of the flow is within the band."""
    if not flow.members:
        raise InvalidInput("empty flow")
    both = np.all(flow.flags(band), axis=0)
    hits = np.flatnonzero(both)
    return int(hits[0]) if hits.size else None


def grid_starts(center, radius, m=3):
    """``m x m`` square grid of starts inscribed in the ball ``B(center, radius)``."""
    c = as_point(center)
    half = radius / math.sqrt(2.0)
    ticks = np.linspace(-half, half, m) if m > 1 else np.zeros(1)
    gx, gy = np.meshgrid(ticks, ticks, indexing="xy")
    return np.column_stack([c[0] + gx.ravel(), c[1] + gy.ravel()])


def holder_exponent_estimate(local_time, dt, min_levels=4):
    """Slope of log max-oscillation against log window length over dyadic windows."""
    L = np.asarray(local_time, dtype=float)
    n = len(L) - 1
    if n < 16 or L[-1] - L[0] <= 0:
        raise DegenerateInput("need a non-constant local time over at least 16 steps")
    levels = int(math.floor(math.log2(n))) - 2
    if levels < min_levels:
        raise DegenerateInput("too few dyadic window sizes")
    widths = 2 ** np.arange(levels + 1)
    osc = np.array([np.max(L[w:] - L[:-w]) for w in widths])
    keep = osc > 0
    if keep.sum() < 2:
        raise DegenerateInput("oscillation vanishes at every window size")
    x = np.log(widths[keep] * dt)
    y = np.log(osc[keep])
    return float(np.polyfit(x, y, 1)[0])
