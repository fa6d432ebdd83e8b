"""Planar geometry: lines, reflections, cones and the supported domains.

Points are numpy arrays of shape ``(2,)`` (or ``(d,)`` for cones); complex
numbers are accepted wherever a planar point is expected.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (
    CoincidentPoints,
    CornerPoint,
    DegenerateInput,
    InvalidInput,
    NotOnBoundary,
    ParallelLines,
)

BOUNDARY_TOL = 1e-9
PARALLEL_TOL = 1e-12


def as_point(p):
    if isinstance(p, complex) or np.iscomplexobj(p):
        p = np.asarray(p)
        return np.stack([p.real, p.imag], axis=-1).astype(float)
    return np.asarray(p, dtype=float)


def to_complex(p):
    p = as_point(p)
    return p[..., 0] + 1j * p[..., 1]


@dataclass(frozen=True)
class Line:
    """Undirected line ``{base + r e^{i angle}}`` with ``angle`` in ``[0, pi)``."""

    base: tuple
    angle: float

    def __post_init__(self):
        b = as_point(self.base)
        a = math.fmod(float(self.angle), math.pi)
        if a < 0.0:
            a += math.pi
        if a >= math.pi:
            a = 0.0
        object.__setattr__(self, "base", (float(b[0]), float(b[1])))
        object.__setattr__(self, "angle", a)

    @property
    def direction(self):
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    def signed_distance(self, p):
        """Distance to the line, positive on the left of ``direction``."""
        p = as_point(p)
        c, s = math.cos(self.angle), math.sin(self.angle)
        return c * (p[..., 1] - self.base[1]) - s * (p[..., 0] - self.base[0])

    def contains(self, p, tol=1e-10):
        return bool(abs(self.signed_distance(p)) <= tol)


def reflect_across(line, p):
    """Mirror image of ``p`` (any ``(..., 2)`` array) with respect to ``line``."""
    p = as_point(p)
    vx = p[..., 0] - line.base[0]
    vy = p[..., 1] - line.base[1]
    c, s = math.cos(2.0 * line.angle), math.sin(2.0 * line.angle)
    return np.stack(
        [line.base[0] + c * vx + s * vy, line.base[1] + s * vx - c * vy], axis=-1
    )


def intersect(a, b):
    ua, ub = a.direction, b.direction
    det = ua[0] * (-ub[1]) - ua[1] * (-ub[0])
    if abs(det) <= PARALLEL_TOL:
        raise ParallelLines(f"lines at angles {a.angle!r} and {b.angle!r} are parallel")
    rx = b.base[0] - a.base[0]
    ry = b.base[1] - a.base[1]
    r = (rx * (-ub[1]) - ry * (-ub[0])) / det
    return np.array([a.base[0] + r * ua[0], a.base[1] + r * ua[1]])


def mirror_line(x, y):
    """Perpendicular bisector of ``x`` and ``y``."""
    x, y = as_point(x), as_point(y)
    d = y - x
    if math.hypot(d[0], d[1]) <= 1e-12:
        raise CoincidentPoints("mirror of coincident points is undefined")
    return Line((x + y) / 2.0, math.atan2(d[1], d[0]) + math.pi / 2.0)


def angle_between(v, w):
    v, w = as_point(v), as_point(w)
    c = np.dot(v, w) / (np.linalg.norm(v) * np.linalg.norm(w))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True)
class ConeSpec:
    """Open cone of half-angle ``half_angle`` about ``axis`` with apex ``vertex``."""

    vertex: tuple
    axis: tuple
    half_angle: float

    def __post_init__(self):
        if not 0.0 < self.half_angle < math.pi:
            raise InvalidInput("cone half-angle must lie in (0, pi)")
        ax = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(ax)
        if n == 0.0:
            raise InvalidInput("cone axis must be non-zero")
        vx = np.asarray(self.vertex, dtype=float)
        if vx.shape != ax.shape:
            raise InvalidInput("vertex and axis dimensions differ")
        object.__setattr__(self, "axis", tuple(ax / n))
        object.__setattr__(self, "vertex", tuple(vx))


def cone_contains(cone, p):
    p = np.asarray(p, dtype=float)
    v = p - np.asarray(cone.vertex)
    axis = np.asarray(cone.axis)
    along = v @ axis
    perp = np.linalg.norm(v - along[..., None] * axis, axis=-1)
    # sin-weighted form of x1 > cot(a) |x_perp|; exact at a = pi/2
    return along * math.sin(cone.half_angle) > math.cos(cone.half_angle) * perp


# --------------------------------------------------------------------------
# domains


class Domain:
    """Closed convex planar domain backed by the compiled projection kernels."""

    kind = K.KIND_EDGES
    edges = K._EMPTY_EDGES
    disk = K._EMPTY_DISK

    @property
    def encoded(self):
        return self.kind, self.edges, self.disk

    @property
    def vertices_array(self):
        return np.zeros((0, 2))

    def signed_distance(self, p):
        p = as_point(p)
        if p.ndim == 1:
            return float(K.signed_distance(self.kind, self.edges, self.disk, p[0], p[1]))
        flat = np.ascontiguousarray(p.reshape(-1, 2))
        out = K.signed_distance_array(self.kind, self.edges, self.disk, flat)
        return out.reshape(p.shape[:-1])

    def contains(self, p, tol=0.0):
        return self.signed_distance(p) >= -tol

    def project(self, p):
        """Nearest point of the closed domain and whether it is a corner."""
        p = as_point(p)
        qx, qy, corner = K.project(self.kind, self.edges, self.disk, p[0], p[1])
        return np.array([qx, qy]), bool(corner)

    def edge_normal(self, i):
        return np.array([-self.edges[i, 3], self.edges[i, 2]])

    def edge_line(self, i):
        e = self.edges[i]
        return Line((e[0], e[1]), math.atan2(e[3], e[2]))

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def edge_distances(self, p):
        p = as_point(p)
        return np.array(
            [K.edge_closest(self.edges, i, p[0], p[1])[2] for i in range(self.n_edges)]
        )

    def edge_distance_matrix(self, pts):
        """Distances from each point (rows) to each closed edge (columns)."""
        pts = as_point(pts).reshape(-1, 2)
        e = self.edges
        rel_x = pts[:, 0:1] - e[None, :, 0]
        rel_y = pts[:, 1:2] - e[None, :, 1]
        t = np.clip(rel_x * e[None, :, 2] + rel_y * e[None, :, 3], e[None, :, 4], e[None, :, 5])
        return np.hypot(rel_x - t * e[None, :, 2], rel_y - t * e[None, :, 3])

    def nearest_normals(self, pts):
        """Edge id and inward normal at the nearest boundary point, row-wise."""
        ids = np.argmin(self.edge_distance_matrix(pts), axis=1)
        normals = np.column_stack([-self.edges[ids, 3], self.edges[ids, 2]])
        return ids, normals

    def band_edges(self, p, eps):
        """Edges whose eps-neighbourhood contains ``p``."""
        return [int(i) for i in np.flatnonzero(self.edge_distances(p) <= eps)]

    def inward_normal(self, p):
        p = as_point(p)
        if abs(self.signed_distance(p)) > BOUNDARY_TOL:
            raise NotOnBoundary(f"{p.tolist()} is not on the boundary")
        for v in self.vertices_array:
            if math.hypot(*(p - v)) <= BOUNDARY_TOL:
                raise CornerPoint(f"normal undefined at corner {v.tolist()}")
        i = int(np.argmin(self.edge_distances(p)))
        return self.edge_normal(i)

    def nearest_boundary_normal(self, p):
        """``(edge_id, inward normal)`` at the boundary point nearest to ``p``."""
        p = as_point(p)
        i = int(K.nearest_edge(self.kind, self.edges, p[0], p[1]))
        return i, self.edge_normal(i)

    def to_dict(self):
        raise NotImplementedError


def _edge_rows(rows):
    return np.ascontiguousarray(np.array(rows, dtype=float).reshape(-1, 6))


@dataclass(frozen=True)
class HalfPlane(Domain):
    boundary: Line = Line((0.0, 0.0), 0.0)
    normal: tuple = (0.0, 1.0)
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = as_point(self.normal)
        n = n / np.linalg.norm(n)
        u = self.boundary.direction
        if abs(n @ u) > 1e-9:
            raise InvalidInput("half-plane normal must be orthogonal to its boundary")
        left = np.array([-u[1], u[0]])
        if left @ n < 0:
            u = -u
        b = self.boundary.base
        object.__setattr__(self, "normal", (float(n[0]), float(n[1])))
        object.__setattr__(self, "edges", _edge_rows([b[0], b[1], u[0], u[1], -np.inf, np.inf]))

    def to_dict(self):
        return {
            "kind": "halfplane",
            "base": list(self.boundary.base),
            "angle": self.boundary.angle,
            "normal": list(self.normal),
        }


@dataclass(frozen=True)
class Disk(Domain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    disk: np.ndarray = field(init=False, repr=False, compare=False)

    kind = K.KIND_DISK

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInput("disk radius must be positive")
        c = as_point(self.center)
        object.__setattr__(self, "center", (float(c[0]), float(c[1])))
        object.__setattr__(self, "disk", np.array([c[0], c[1], float(self.radius)]))

    @property
    def n_edges(self):
        return 1

    def edge_distances(self, p):
        return np.array([abs(self.signed_distance(p))])

    def edge_distance_matrix(self, pts):
        return np.abs(self.signed_distance(as_point(pts).reshape(-1, 2)))[:, None]

    def nearest_normals(self, pts):
        d = np.asarray(self.center) - as_point(pts).reshape(-1, 2)
        r = np.hypot(d[:, 0], d[:, 1])
        if np.any(r == 0.0):
            raise DegenerateInput("nearest boundary point of the centre is not unique")
        return np.zeros(len(d), dtype=int), d / r[:, None]

    def nearest_boundary_normal(self, p):
        d = np.asarray(self.center) - as_point(p)
        r = math.hypot(d[0], d[1])
        if r == 0.0:
            raise DegenerateInput("nearest boundary point of the centre is not unique")
        return 0, d / r

    def inward_normal(self, p):
        if abs(self.signed_distance(p)) > BOUNDARY_TOL:
            raise NotOnBoundary(f"{as_point(p).tolist()} is not on the circle")
        return self.nearest_boundary_normal(p)[1]

    def to_dict(self):
        return {"kind": "disk", "center": list(self.center), "radius": float(self.radius)}


@dataclass(frozen=True)
class Wedge(Domain):
    """``{r e^{i theta}: r > 0, 0 < theta < alpha}``; edge 0 is E_X, edge 1 is E_Y."""

    alpha: float = math.pi / 4
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    EX = 0
    EY = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi:
            raise InvalidInput("wedge angle must lie in (0, pi)")
        a = float(self.alpha)
        rows = [
            [0.0, 0.0, 1.0, 0.0, 0.0, np.inf],
            [0.0, 0.0, -math.cos(a), -math.sin(a), -np.inf, 0.0],
        ]
        object.__setattr__(self, "edges", _edge_rows(rows))

    @property
    def vertices_array(self):
        return np.zeros((1, 2))

    def edge_line(self, i):
        return Line((0.0, 0.0), 0.0 if i == self.EX else self.alpha)

    def to_dict(self):
        return {"kind": "wedge", "alpha": float(self.alpha)}


@dataclass(frozen=True)
class ConvexPolygon(Domain):
    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidInput("polygon needs at least three planar vertices")
        rows = []
        n = len(v)
        for i in range(n):
            a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            if cross <= 0:
                raise InvalidInput("polygon vertices must be strictly convex and counterclockwise")
            length = math.hypot(*(b - a))
            u = (b - a) / length
            rows.append([a[0], a[1], u[0], u[1], 0.0, length])
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))
        object.__setattr__(self, "edges", _edge_rows(rows))

    @property
    def vertices_array(self):
        return np.asarray(self.vertices)

    def to_dict(self):
        return {"kind": "polygon", "vertices": [list(p) for p in self.vertices]}


def upper_half_plane():
    return HalfPlane(Line((0.0, 0.0), 0.0), (0.0, 1.0))


def square(side=1.0, origin=(0.0, 0.0)):
    x, y = origin
    return ConvexPolygon(((x, y), (x + side, y), (x + side, y + side), (x, y + side)))


def domain_from_dict(d):
    kind = d.get("kind")
    try:
        if kind == "disk":
            return Disk(tuple(d.get("center", (0.0, 0.0))), float(d.get("radius", 1.0)))
        if kind == "halfplane":
            return HalfPlane(
                Line(tuple(d.get("base", (0.0, 0.0))), float(d.get("angle", 0.0))),
                tuple(d.get("normal", (0.0, 1.0))),
            )
        if kind == "wedge":
            return Wedge(float(d["alpha"]))
        if kind == "polygon":
            return ConvexPolygon(tuple(map(tuple, d["vertices"])))
        if kind == "square":
            return square(float(d.get("side", 1.0)), tuple(d.get("origin", (0.0, 0.0))))
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed {kind} domain: {exc}") from exc
    raise InvalidInput(f"unknown domain kind {kind!r}")


def signed_boundary_distance(domain, p):
    return domain.signed_distance(p)


def inward_normal(domain, p):
    return domain.inward_normal(p)
