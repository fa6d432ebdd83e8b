"""Numba primitives shared by the simulators.

Domains are passed to compiled code as ``(kind, edges, disk)``:

* ``kind == KIND_EDGES``: intersection of half-planes. ``edges`` is an
  ``(m, 6)`` array of rows ``(ax, ay, ux, uy, tmin, tmax)``; the edge is
  ``a + t u`` for ``t`` in ``[tmin, tmax]`` (either end may be infinite) and
  the domain lies to the left of ``u``.
* ``kind == KIND_DISK``: ``disk = (cx, cy, r)``.
"""

import math

import numpy as np
from numba import njit

KIND_EDGES = 0
KIND_DISK = 1

_EMPTY_EDGES = np.zeros((0, 6))
_EMPTY_DISK = np.zeros(3)


@njit(cache=True, nogil=True)
def edge_line_distance(edges, i, px, py):
    """Signed distance to the line through edge ``i``; positive inside."""
    ux = edges[i, 2]
    uy = edges[i, 3]
    return ux * (py - edges[i, 1]) - uy * (px - edges[i, 0])


@njit(cache=True, nogil=True)
def edge_closest(edges, i, px, py):
    """Closest point of edge ``i`` to ``p``: ``(qx, qy, dist, clamped)``."""
    ax = edges[i, 0]
    ay = edges[i, 1]
    ux = edges[i, 2]
    uy = edges[i, 3]
    t = (px - ax) * ux + (py - ay) * uy
    clamped = False
    if t < edges[i, 4]:
        t = edges[i, 4]
        clamped = True
    elif t > edges[i, 5]:
        t = edges[i, 5]
        clamped = True
    qx = ax + t * ux
    qy = ay + t * uy
    return qx, qy, math.hypot(px - qx, py - qy), clamped


@njit(cache=True, nogil=True)
def signed_distance(kind, edges, disk, px, py):
    if kind == KIND_DISK:
        return disk[2] - math.hypot(px - disk[0], py - disk[1])
    inside = True
    best_line = np.inf
    for i in range(edges.shape[0]):
        s = edge_line_distance(edges, i, px, py)
        if s < 0.0:
            inside = False
        if s < best_line:
            best_line = s
    if inside:
        return best_line
    best = np.inf
    for i in range(edges.shape[0]):
        d = edge_closest(edges, i, px, py)[2]
        if d < best:
            best = d
    return -best


@njit(cache=True, nogil=True)
def project(kind, edges, disk, px, py):
    """Euclidean projection onto the closed domain: ``(qx, qy, corner)``."""
    if kind == KIND_DISK:
        dx = px - disk[0]
        dy = py - disk[1]
        rho = math.hypot(dx, dy)
        if rho <= disk[2]:
            return px, py, False
        s = disk[2] / rho
        return disk[0] + s * dx, disk[1] + s * dy, False
    inside = True
    for i in range(edges.shape[0]):
        if edge_line_distance(edges, i, px, py) < 0.0:
            inside = False
            break
    if inside:
        return px, py, False
    best = np.inf
    bx = px
    by = py
    corner = False
    for i in range(edges.shape[0]):
        qx, qy, d, clamped = edge_closest(edges, i, px, py)
        if d < best:
            best = d
            bx = qx
            by = qy
            corner = clamped
    return bx, by, corner


@njit(cache=True, nogil=True)
def signed_distance_array(kind, edges, disk, pts):
    out = np.empty(pts.shape[0])
    for k in range(pts.shape[0]):
        out[k] = signed_distance(kind, edges, disk, pts[k, 0], pts[k, 1])
    return out


@njit(cache=True, nogil=True)
def nearest_edge(kind, edges, px, py):
    """Index of the edge closest to ``p`` (segment distance); -1 for a disk."""
    if kind == KIND_DISK:
        return -1
    best = np.inf
    arg = -1
    for i in range(edges.shape[0]):
        d = edge_closest(edges, i, px, py)[2]
        if d < best:
            best = d
            arg = i
    return arg


@njit(cache=True, nogil=True)
def fold_interval(p, hi):
    """Fold ``p`` into ``[0, hi]`` by repeated reflection.

    Returns ``(q, push_lo, push_hi)`` with ``q = p + push_lo - push_hi``.
    """
    lo_push = 0.0
    hi_push = 0.0
    if not math.isfinite(p):
        return p, lo_push, hi_push
    while p < 0.0 or p > hi:
        if p < 0.0:
            lo_push += -2.0 * p
            p = -p
        else:
            hi_push += 2.0 * (p - hi)
            p = 2.0 * hi - p
    return p, lo_push, hi_push
