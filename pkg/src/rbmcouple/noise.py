"""Seeded Gaussian increment streams and the one-dimensional skew-product pieces.

All randomness is drawn from Philox generators keyed by
``(master_seed, trial, stream)``, so a trial can be regenerated in
isolation and in any order.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._kernels import fold_interval
from .errors import ClockOutOfRange, InvalidInput, ZeroRadius

# stream labels
STREAM_MAIN = 0
STREAM_ANGLE = 1
STREAM_AUX = 2

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    trial: int = 0
    stream: int = STREAM_MAIN

    def __post_init__(self):
        if self.trial < 0 or self.stream < 0:
            raise InvalidInput("trial index and stream label must be non-negative")

    def generator(self):
        ss = np.random.SeedSequence([int(self.master_seed) & _MASK64, int(self.trial), int(self.stream)])
        return np.random.Generator(np.random.Philox(ss))

    def with_stream(self, stream):
        return SeedSpec(self.master_seed, self.trial, stream)


@dataclass(frozen=True)
class PathGrid:
    dt: float
    n: int
    dim: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInput("dt must be positive")
        if self.n < 1:
            raise InvalidInput("a grid needs at least one step")
        if self.dim < 1:
            raise InvalidInput("dimension must be positive")

    @classmethod
    def from_horizon(cls, dt, horizon, dim=2):
        return cls(float(dt), max(1, int(round(horizon / dt))), dim)

    @property
    def horizon(self):
        return self.dt * self.n

    @property
    def times(self):
        return np.arange(self.n + 1) * self.dt


@dataclass(frozen=True, eq=False)
class IncrementStream:
    grid: PathGrid
    increments: np.ndarray  # (n, dim), each entry N(0, dt)

    @property
    def path(self):
        """Cumulative sum started at the origin, shape ``(n + 1, dim)``."""
        out = np.zeros((self.grid.n + 1, self.grid.dim))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out


def standard_normals(seed, shape):
    return seed.generator().standard_normal(shape)


def sample_increments(seed, grid):
    z = standard_normals(seed, (grid.n, grid.dim))
    return IncrementStream(grid, z * math.sqrt(grid.dt))


def bessel2_from_increments(r0, increments):
    """Modulus of ``(r0, 0) + cumulative planar increments``."""
    inc = np.asarray(increments, dtype=float).reshape(-1, 2)
    pos = np.empty((len(inc) + 1, 2))
    pos[0] = (r0, 0.0)
    np.cumsum(inc, axis=0, out=pos[1:])
    pos[1:] += pos[0]
    return np.hypot(pos[:, 0], pos[:, 1])


def simulate_bessel2(r0, seed, grid, increments=None):
    """Two-dimensional Bessel process from ``r0``; ``increments`` overrides the draw."""
    if r0 < 0:
        raise InvalidInput("Bessel radius must be non-negative")
    if increments is None:
        increments = sample_increments(seed, PathGrid(grid.dt, grid.n, 2)).increments
    return bessel2_from_increments(float(r0), increments)


@njit(cache=True, nogil=True)
def _skorokhod_fold(start, inc, hi):
    n = inc.shape[0]
    path = np.empty(n + 1)
    lower = np.zeros(n + 1)
    upper = np.zeros(n + 1)
    path[0] = start
    for k in range(n):
        p, dlo, dhi = fold_interval(path[k] + inc[k], hi)
        path[k + 1] = p
        lower[k + 1] = lower[k] + dlo
        upper[k + 1] = upper[k] + dhi
    return path, lower, upper


def skorokhod_interval(start, driver, upper_wall=math.pi):
    """Reflect a one-dimensional driver into ``[0, upper_wall]`` by folding.

    Returns ``(path, lower_lt, upper_lt)``, each of length ``n + 1``, with
    ``path - lower_lt + upper_lt`` equal to the free path.
    """
    if not 0.0 <= start <= upper_wall:
        raise InvalidInput(f"start {start} outside [0, {upper_wall}]")
    inc = driver.increments if isinstance(driver, IncrementStream) else driver
    inc = np.ascontiguousarray(np.asarray(inc, dtype=float).reshape(-1))
    return _skorokhod_fold(float(start), inc, float(upper_wall))


@dataclass(frozen=True, eq=False)
class ClockPath:
    values: np.ndarray


def clock_sigma(radii, dt):
    """Left-endpoint integral of ``R^-2``; ``values[0] == 0``."""
    r = np.asarray(radii, dtype=float)
    if np.any(r <= 1e-12):
        raise ZeroRadius("clock undefined when the radius vanishes")
    vals = np.zeros(len(r))
    np.cumsum(dt / r[:-1] ** 2, out=vals[1:])
    return ClockPath(vals)


def sample_at_clock(path, sigma_grid, clock):
    """Evaluate a path given on ``sigma_grid`` at the clock times (linear interpolation).

    ``sigma_grid`` is either the node array or a uniform spacing.
    """
    path = np.asarray(path, dtype=float)
    if np.isscalar(sigma_grid):
        sigma_grid = np.arange(len(path)) * float(sigma_grid)
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    c = clock.values if isinstance(clock, ClockPath) else np.asarray(clock, dtype=float)
    span = sigma_grid[-1] - sigma_grid[0]
    tol = 1e-12 * max(1.0, abs(span))
    if c.min() < sigma_grid[0] - tol or c.max() > sigma_grid[-1] + tol:
        raise ClockOutOfRange("clock leaves the span of the sigma grid")
    return np.interp(c, sigma_grid, path)
