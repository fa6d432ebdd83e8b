"""Cone-point detection on discrete Brownian paths.

A time index ``t`` is an alpha-cone point when every earlier path node lies
in ``path[t] + C(alpha)``; the windowed variant only looks back ``window``
steps, and the two-cone variant uses the intersection of cones about two
axes.  Detection is exact at grid nodes.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import AngleOutOfRange, IndexOutOfRange, InvalidInput
from .geometry import ConeSpec, cone_contains

GLOBAL = "global"
WINDOWED = "windowed"


@dataclass(frozen=True)
class ConePointQuery:
    half_angle: float
    axis: tuple = (1.0, 0.0)
    mode: str = GLOBAL
    window: int = 2

    def __post_init__(self):
        if not 0.0 < self.half_angle < math.pi:
            raise InvalidInput("half-angle must lie in (0, pi)")
        if self.mode not in (GLOBAL, WINDOWED):
            raise InvalidInput(f"unknown mode {self.mode!r}")
        if self.window < 1:
            raise InvalidInput("window must cover at least one step")
        ax = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", tuple(ax / np.linalg.norm(ax)))


def is_cone_point(path, t, q):
    path = np.asarray(path, dtype=float)
    if not 0 < t < len(path):
        raise IndexOutOfRange(f"index {t} outside (0, {len(path)})")
    if q.mode == WINDOWED:
        if t < q.window:
            return False
        past = path[t - q.window : t]
    else:
        past = path[:t]
    cone = ConeSpec(tuple(path[t]), q.axis, q.half_angle)
    return bool(np.all(cone_contains(cone, past)))


@njit(cache=True, nogil=True)
def _scan(path, axes, sin_a, cos_a, window):
    """Indices ``t >= 1`` whose look-back (``window <= 0``: whole past) stays in every cone."""
    n, d = path.shape
    m = axes.shape[0]
    out = np.empty(n, dtype=np.int64)
    count = 0
    v = np.empty(d)
    for t in range(1, n):
        lo = 0
        if window > 0:
            lo = t - window
            if lo < 0:
                continue
        ok = True
        # most failures are close to t, so scan backwards and stop early
        for s in range(t - 1, lo - 1, -1):
            for i in range(m):
                along = 0.0
                for j in range(d):
                    v[j] = path[s, j] - path[t, j]
                    along += v[j] * axes[i, j]
                perp2 = 0.0
                for j in range(d):
                    r = v[j] - along * axes[i, j]
                    perp2 += r * r
                if not along * sin_a > cos_a * math.sqrt(perp2):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out[count] = t
            count += 1
    return out[:count]


def _axes(*vs):
    a = np.array([np.asarray(v, dtype=float) / np.linalg.norm(v) for v in vs])
    return np.ascontiguousarray(a)


def find_cone_points(path, q):
    path = np.ascontiguousarray(np.asarray(path, dtype=float))
    if path.ndim != 2 or len(path) < 2:
        raise InvalidInput("path must be an (n >= 2, d) array")
    window = q.window if q.mode == WINDOWED else 0
    return _scan(path, _axes(q.axis), math.sin(q.half_angle), math.cos(q.half_angle), window)


def find_two_cone_times(path, half_angle, v, w, window=2):
    """Windowed detection with the intersection cone ``C_v(a) & C_w(a)``."""
    path = np.ascontiguousarray(np.asarray(path, dtype=float))
    if not 0.0 < half_angle < math.pi:
        raise InvalidInput("half-angle must lie in (0, pi)")
    return _scan(path, _axes(v, w), math.sin(half_angle), math.cos(half_angle), window)


def dim_formula(angle):
    """Limiting dimension ``1 - pi / (2 (pi - angle))`` of two-cone times."""
    if not 0.0 <= angle < math.pi:
        raise AngleOutOfRange("angle must lie in [0, pi)")
    return 1.0 - math.pi / (2.0 * (math.pi - angle))
