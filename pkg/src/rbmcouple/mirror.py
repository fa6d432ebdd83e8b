"""Mirror couplings: whole plane, half-plane (skew product) and convex polygons.

Half-plane phases run in the frame where the active boundary line is the
real axis and the hinge is the origin.  There the pair is
``X = (R, Theta_x)``, ``Y = (R, Theta_y)`` with ``R`` a two-dimensional
Bessel process, the angular driver advanced by ``N(0, dt / R^2)`` per step
(clock increments taken at the left endpoint), and ``Theta_x`` and the
mirrored driver each folded into ``[0, pi]``.

The polygon construction alternates free-plane and half-plane phases;
phase boundaries are band entries (distance to the boundary at most
``eps_bd``).  It stops when both processes are in the band at once.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _kernels as K
from .errors import (
    AsymmetricStart,
    CoincidentPoints,
    InvalidInput,
    MirrorParallelBoundary,
    ParallelLines,
    StartOnBoundary,
    StartOutsideDomain,
    WrongDomain,
)
from .geometry import (
    BOUNDARY_TOL,
    Disk,
    HalfPlane,
    Line,
    Wedge,
    as_point,
    intersect,
    mirror_line,
    reflect_across,
)
from .noise import STREAM_ANGLE, STREAM_MAIN, PathGrid, SeedSpec, standard_normals

FREE, HALF, COUPLED = 0, 1, 2
PHASE_KINDS = ("freePlane", "halfPlane", "coupled")

HORIZON, BOTH, CAP, ACCUM, PARALLEL, SWITCH, MET = range(7)
END_REASONS = (
    "horizonEnd",
    "bothOnBoundary",
    "phaseCap",
    "accumulation",
    "parallelMirror",
    "switch",
    "coupled",
)

MODE_POLYGON = 0
MODE_HALFPLANE = 1

DEFAULT_K_MAX = 10_000
MIN_PHASE_STEPS = 2


@njit(cache=True, nogil=True)
def _band_edge(edges, px, py, eps, exclude):
    """Nearest edge within ``eps`` of ``p`` other than ``exclude`` (-1 if none).

    A point beyond an edge line scores minus its overshoot, so paths that
    jumped across the band in one step are still caught.
    """
    best = np.inf
    arg = -1
    for i in range(edges.shape[0]):
        if i == exclude:
            continue
        s = K.edge_line_distance(edges, i, px, py)
        d = s if s < 0.0 else K.edge_closest(edges, i, px, py)[2]
        if d <= eps and d < best:
            best = d
            arg = i
    return arg


@njit(cache=True, nogil=True)
def _mirror_kernel(
    edges, mode, x0, y0, dB, xi, dt, eps, kmax, stop_coupled,
    X, Y, Lx, Ly, hinge, beta, mbase, mang, phase_id,
    ph_start, ph_kind, ph_edge, ph_reason,
):
    n = dB.shape[0]
    nan = np.nan
    kind_dom = K.KIND_EDGES
    dummy = np.zeros(3)
    pi = math.pi
    tol_free = math.sqrt(dt) * 1e-3

    xx, xy = x0[0], x0[1]
    yx, yy = y0[0], y0[1]
    lx = 0.0
    ly = 0.0
    coupled_at = -1
    reason = HORIZON
    nph = 0
    kind = FREE
    edge = -1
    # free-plane mirror
    m_bx = m_by = m_a = 0.0
    # half-plane frame
    hx = hy = 0.0
    om = 0.0
    co = 1.0
    so = 0.0
    R = 0.0
    tx = 0.0
    ty = 0.0

    X[0, 0] = xx
    X[0, 1] = xy
    Y[0, 0] = yx
    Y[0, 1] = yy
    Lx[0] = 0.0
    Ly[0] = 0.0

    k = 0  # index of the current state
    start_edge = -1
    if mode == MODE_HALFPLANE:
        start_edge = 0
    else:
        sx = K.signed_distance(kind_dom, edges, dummy, xx, xy)
        sy = K.signed_distance(kind_dom, edges, dummy, yx, yy)
        if sx <= eps and sy <= eps:
            reason = BOTH
        elif sx <= eps:
            start_edge = _band_edge(edges, xx, xy, eps, -1)
        elif sy <= eps:
            start_edge = _band_edge(edges, yx, yy, eps, -1)

    pending = start_edge  # edge of a phase to open at index k, -1 for free
    open_free = reason == HORIZON and start_edge < 0

    while True:
        # ---- open a phase at index k if requested
        if open_free:
            open_free = False
            kind = FREE
            dx = yx - xx
            dy = yy - xy
            m_bx = 0.5 * (xx + yx)
            m_by = 0.5 * (xy + yy)
            m_a = math.atan2(dy, dx) + 0.5 * pi
            ph_start[nph] = k
            ph_kind[nph] = FREE
            ph_edge[nph] = -1
            nph += 1
        elif pending >= 0:
            edge = pending
            pending = -1
            if nph >= kmax:
                reason = CAP
                break
            # mirror through the current pair, hinge on the edge line
            dx = yx - xx
            dy = yy - xy
            mbx = 0.5 * (xx + yx)
            mby = 0.5 * (xy + yy)
            ma = math.atan2(dy, dx) + 0.5 * pi
            ux = edges[edge, 2]
            uy = edges[edge, 3]
            cm = math.cos(ma)
            sm = math.sin(ma)
            det = -cm * uy + sm * ux
            if abs(det) <= 1e-12:
                reason = PARALLEL
                break
            rx = edges[edge, 0] - mbx
            ry = edges[edge, 1] - mby
            r = (-rx * uy + ry * ux) / det
            hx = mbx + r * cm
            hy = mby + r * sm
            om = math.atan2(uy, ux)
            co = math.cos(om)
            so = math.sin(om)
            # canonical coordinates: rotate by -om about the hinge
            cx = co * (xx - hx) + so * (xy - hy)
            cy = -so * (xx - hx) + co * (xy - hy)
            R = math.hypot(cx, cy)
            tx = math.atan2(cy, cx)
            cx = co * (yx - hx) + so * (yy - hy)
            cy = -so * (yx - hx) + co * (yy - hy)
            ty = math.atan2(cy, cx)
            kind = HALF
            ph_start[nph] = k
            ph_kind[nph] = HALF
            ph_edge[nph] = edge
            nph += 1

        # ---- record phase-dependent quantities at index k
        phase_id[k] = nph - 1
        if kind == FREE and coupled_at < 0:
            hinge[k, 0] = nan
            hinge[k, 1] = nan
            beta[k] = nan
            mbase[k, 0] = m_bx
            mbase[k, 1] = m_by
            mang[k] = m_a % pi
        elif kind == HALF and coupled_at < 0:
            hinge[k, 0] = hx
            hinge[k, 1] = hy
            b = (0.5 * (tx + ty)) % pi
            beta[k] = b
            mbase[k, 0] = hx
            mbase[k, 1] = hy
            mang[k] = (om + b) % pi
        else:
            if kind == HALF:
                hinge[k, 0] = hx
                hinge[k, 1] = hy
            else:
                hinge[k, 0] = nan
                hinge[k, 1] = nan
            beta[k] = nan
            mbase[k, 0] = nan
            mbase[k, 1] = nan
            mang[k] = nan

        if reason != HORIZON or k >= n:
            break

        # ---- advance one step from k to k + 1
        db0 = dB[k, 0]
        db1 = dB[k, 1]
        met = False
        if kind == FREE:
            c2 = math.cos(m_a)
            s2 = math.sin(m_a)
            s_old = c2 * (xy - m_by) - s2 * (xx - m_bx)
            xx += db0
            xy += db1
            s_new = c2 * (xy - m_by) - s2 * (xx - m_bx)
            if s_old * s_new <= 0.0 or abs(s_new) <= tol_free:
                met = True
                yx = xx
                yy = xy
            else:
                vx = xx - m_bx
                vy = xy - m_by
                cc = math.cos(2.0 * m_a)
                ss = math.sin(2.0 * m_a)
                yx = m_bx + cc * vx + ss * vy
                yy = m_by + ss * vx - cc * vy
        elif kind == HALF:
            Rn = math.hypot(R + db0, db1)
            sd = math.sqrt(dt) / R
            dth = sd * xi[k]
            nx, plx, phx = K.fold_interval(tx + dth, pi)
            if coupled_at >= 0:
                ny = nx
                ply = plx
                phy = phx
            else:
                ny, ply, phy = K.fold_interval(ty - dth, pi)
                gap_old = tx - ty
                gap_new = nx - ny
                if gap_old * gap_new <= 0.0 or abs(gap_new) <= 2.0 * sd:
                    met = True
            tx = nx
            R = Rn
            lx += Rn * (plx + phx)
            ly += Rn * (ply + phy)
            if met:
                ty = tx
            else:
                ty = ny
            cx = R * math.cos(tx)
            cy = R * math.sin(tx)
            xx = hx + co * cx - so * cy
            xy = hy + so * cx + co * cy
            if met or coupled_at >= 0:
                yx = xx
                yy = xy
            else:
                cx = R * math.cos(ty)
                cy = R * math.sin(ty)
                yx = hx + co * cx - so * cy
                yy = hy + so * cx + co * cy
        else:
            ax = xx + db0
            ay = xy + db1
            qx, qy, _c = K.project(kind_dom, edges, dummy, ax, ay)
            dl = math.hypot(qx - ax, qy - ay)
            xx = qx
            xy = qy
            yx = qx
            yy = qy
            lx += dl
            ly += dl

        k += 1
        X[k, 0] = xx
        X[k, 1] = xy
        Y[k, 0] = yx
        Y[k, 1] = yy
        Lx[k] = lx
        Ly[k] = ly

        if met and coupled_at < 0:
            coupled_at = k
            if stop_coupled:
                reason = MET
            elif mode == MODE_POLYGON:
                ph_reason[nph - 1] = MET
                kind = COUPLED
                ph_start[nph] = k
                ph_kind[nph] = COUPLED
                ph_edge[nph] = -1
                nph += 1
            continue

        if mode == MODE_HALFPLANE or coupled_at >= 0:
            continue

        # ---- band checks for the phase machine
        sx = K.signed_distance(kind_dom, edges, dummy, xx, xy)
        sy = K.signed_distance(kind_dom, edges, dummy, yx, yy)
        in_x = sx <= eps
        in_y = sy <= eps
        if in_x and in_y:
            reason = BOTH
            continue
        if not (in_x or in_y):
            continue
        if in_x:
            px, py = xx, xy
        else:
            px, py = yx, yy
        if kind == FREE:
            new_edge = _band_edge(edges, px, py, eps, -1)
        else:
            new_edge = _band_edge(edges, px, py, eps, edge)
        if new_edge < 0:
            continue
        if kind == HALF and k - ph_start[nph - 1] < MIN_PHASE_STEPS:
            reason = ACCUM
            continue
        ph_reason[nph - 1] = SWITCH
        pending = new_edge

    if nph > 0 and ph_reason[nph - 1] < 0:
        ph_reason[nph - 1] = reason
    return k, nph, coupled_at, reason


@dataclass(frozen=True)
class Phase:
    start: int
    stop: int
    kind: str
    edge: int
    line: object
    end_reason: str


@dataclass(frozen=True, eq=False)
class MirrorTrajectory:
    grid: PathGrid
    X: np.ndarray
    Y: np.ndarray
    Lx: np.ndarray
    Ly: np.ndarray
    mirror_base: np.ndarray
    mirror_angle: np.ndarray
    hinge: np.ndarray
    beta: np.ndarray
    phase_id: np.ndarray
    phases: list = field(default_factory=list)
    coupled_index: object = None
    end_reason: str = "horizonEnd"
    domain: object = None

    @property
    def end_index(self):
        return len(self.X) - 1

    @property
    def times(self):
        return np.arange(len(self.X)) * self.grid.dt

    def mirror_at(self, k):
        if not np.isfinite(self.mirror_angle[k]):
            return None
        return Line(tuple(self.mirror_base[k]), float(self.mirror_angle[k]))

    def symmetry_residual(self):
        """Max of ``|S_k(X_k) - Y_k|`` over uncoupled steps."""
        ok = np.isfinite(self.mirror_angle)
        if not ok.any():
            return 0.0
        b = self.mirror_base[ok]
        a = self.mirror_angle[ok]
        v = self.X[ok] - b
        c, s = np.cos(2 * a), np.sin(2 * a)
        img = b + np.column_stack([c * v[:, 0] + s * v[:, 1], s * v[:, 0] - c * v[:, 1]])
        return float(np.max(np.hypot(*(img - self.Y[ok]).T)))

    COLUMNS = ("t", "Xx", "Xy", "Yx", "Yy", "Lx", "Ly", "hingeX", "hingeY", "beta", "phaseId")

    def to_csv(self, path):
        cols = np.column_stack(
            [self.times, self.X, self.Y, self.Lx, self.Ly, self.hinge, self.beta, self.phase_id]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in cols:
                w.writerow([repr(float(v)) for v in row[:-1]] + [int(row[-1])])

    @classmethod
    def from_csv(cls, path, domain=None):
        """Rebuild from CSV; mirrors are recomputed as bisectors of the pair."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        X, Y = data[:, 1:3], data[:, 3:5]
        dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
        d = Y - X
        apart = np.hypot(d[:, 0], d[:, 1]) > 1e-12
        base = np.where(apart[:, None], (X + Y) / 2, np.nan)
        ang = np.where(apart, np.mod(np.arctan2(d[:, 1], d[:, 0]) + np.pi / 2, np.pi), np.nan)
        coupled = np.flatnonzero(~apart)
        return cls(
            PathGrid(dt, max(1, len(t) - 1)), X, Y, data[:, 5], data[:, 6], base, ang,
            data[:, 7:9], data[:, 9], data[:, 10].astype(int),
            coupled_index=int(coupled[0]) if coupled.size else None, domain=domain,
        )


def simulate_plane_mirror(x, y, noise):
    """Whole-plane mirror coupling; ``Y`` merges with ``X`` once ``X`` reaches the mirror."""
    x, y = as_point(x), as_point(y)
    M = mirror_line(x, y)
    grid = noise.grid
    X = x + np.vstack([np.zeros((1, 2)), np.cumsum(noise.increments, axis=0)])
    s = M.signed_distance(X)
    tol = math.sqrt(grid.dt) * 1e-3
    hit = np.flatnonzero((s[1:] * s[0] <= 0) | (np.abs(s[1:]) <= tol))
    coupled = int(hit[0]) + 1 if hit.size else None
    Y = reflect_across(M, X)
    n1 = len(X)
    base = np.tile(np.asarray(M.base), (n1, 1))
    ang = np.full(n1, M.angle)
    if coupled is not None:
        Y[coupled:] = X[coupled:]
        base[coupled:] = np.nan
        ang[coupled:] = np.nan
    phases = [Phase(0, n1, "freePlane", -1, None, "coupled" if coupled is not None else "horizonEnd")]
    zeros = np.zeros(n1)
    return MirrorTrajectory(
        grid, X, Y, zeros, zeros.copy(), base, ang, np.full((n1, 2), np.nan),
        np.full(n1, np.nan), np.zeros(n1, dtype=int), phases, coupled, "horizonEnd",
    )


def _drivers(seed, grid):
    dB = standard_normals(seed.with_stream(STREAM_MAIN), (grid.n, 2)) * math.sqrt(grid.dt)
    xi = standard_normals(seed.with_stream(STREAM_ANGLE), grid.n)
    return dB, xi


def _run(domain, mode, x, y, dB, xi, grid, eps_bd, k_max, stop_coupled=False):
    n = grid.n
    X = np.empty((n + 1, 2))
    Y = np.empty((n + 1, 2))
    Lx = np.empty(n + 1)
    Ly = np.empty(n + 1)
    hinge = np.empty((n + 1, 2))
    beta = np.empty(n + 1)
    mbase = np.empty((n + 1, 2))
    mang = np.empty(n + 1)
    phase_id = np.empty(n + 1, dtype=np.int64)
    cap = min(k_max, n + 1) + 2
    ph_start = np.zeros(cap, dtype=np.int64)
    ph_kind = np.zeros(cap, dtype=np.int64)
    ph_edge = np.zeros(cap, dtype=np.int64)
    ph_reason = np.full(cap, -1, dtype=np.int64)
    end, nph, coupled, reason = _mirror_kernel(
        domain.edges, mode, x, y, dB, xi, grid.dt, eps_bd, k_max, stop_coupled,
        X, Y, Lx, Ly, hinge, beta, mbase, mang, phase_id,
        ph_start, ph_kind, ph_edge, ph_reason,
    )
    m = end + 1
    phases = []
    for i in range(nph):
        stop = int(ph_start[i + 1]) if i + 1 < nph else m
        e = int(ph_edge[i])
        phases.append(
            Phase(
                int(ph_start[i]), stop, PHASE_KINDS[ph_kind[i]], e,
                domain.edge_line(e) if e >= 0 else None,
                END_REASONS[ph_reason[i]] if ph_reason[i] >= 0 else END_REASONS[reason],
            )
        )
    return MirrorTrajectory(
        grid, X[:m], Y[:m], Lx[:m], Ly[:m], mbase[:m], mang[:m], hinge[:m], beta[:m],
        phase_id[:m], phases, int(coupled) if coupled >= 0 else None, END_REASONS[reason], domain,
    )


def simulate_halfplane_mirror(hp, x, y, seed, grid, drivers=None):
    """Skew-product mirror coupling of reflected Brownian motions in a half-plane."""
    if not isinstance(hp, HalfPlane):
        raise WrongDomain("half-plane coupling needs a HalfPlane")
    x, y = as_point(x), as_point(y)
    for p in (x, y):
        if hp.signed_distance(p) < -BOUNDARY_TOL:
            raise StartOutsideDomain(f"{p.tolist()} lies outside the half-plane")
    try:
        M = mirror_line(x, y)
        H = intersect(M, hp.boundary)
    except ParallelLines as exc:
        raise MirrorParallelBoundary("mirror parallel to the boundary") from exc
    rx, ry = math.hypot(*(x - H)), math.hypot(*(y - H))
    if abs(rx - ry) > 1e-9 * max(1.0, rx):
        raise AsymmetricStart(f"hinge distances differ: {rx} vs {ry}")
    dB, xi = drivers if drivers is not None else _drivers(seed, grid)
    return _run(hp, MODE_HALFPLANE, x, y, dB, xi, grid, 0.0, 1)


def simulate_polygon_mirror(
    domain, x, y, seed, grid, k_max=DEFAULT_K_MAX, eps_bd=0.01, drivers=None, stop_coupled=False
):
    """Inductive mirror coupling in a wedge or convex polygon, stopped at the band proxy of S_infinity.

    With ``stop_coupled`` the run ends at the coupling step instead of
    continuing the merged path.
    """
    if isinstance(domain, Disk):
        raise WrongDomain("mirror coupling is built for polygonal domains")
    x, y = as_point(x), as_point(y)
    if math.hypot(*(x - y)) <= 1e-12:
        raise CoincidentPoints("coupled processes must start apart")
    for p in (x, y):
        if domain.signed_distance(p) <= 0.0:
            raise StartOnBoundary(f"{p.tolist()} is not an interior point")
    if k_max < 1:
        raise InvalidInput("k_max must be positive")
    dB, xi = drivers if drivers is not None else _drivers(seed, grid)
    return _run(domain, MODE_POLYGON, x, y, dB, xi, grid, float(eps_bd), int(k_max), bool(stop_coupled))


@dataclass(frozen=True)
class Theorem3Event:
    occurred: bool
    step_index: object
    x_edge_dist: float
    y_edge_dist: float
    radial_gap: float


def detect_theorem3_event(tr, alpha, eps_bd=0.01, delta=0.05):
    """Simultaneous band hits of opposite wedge edges at different radii.

    Excludes coincident pairs, both-on-one-edge, and mirrors through (within
    ``delta`` of) the wedge vertex.
    """
    if tr.domain is not None and not (
        isinstance(tr.domain, Wedge) and abs(tr.domain.alpha - alpha) < 1e-12
    ):
        raise WrongDomain("two-edge events are defined for the wedge of angle alpha")
    W = Wedge(alpha)
    dX = W.edge_distance_matrix(tr.X)
    dY = W.edge_distance_matrix(tr.Y)
    straight = (dX[:, 0] <= eps_bd) & (dY[:, 1] <= eps_bd)
    swapped = (dX[:, 1] <= eps_bd) & (dY[:, 0] <= eps_bd)
    rX = np.hypot(tr.X[:, 0], tr.X[:, 1])
    rY = np.hypot(tr.Y[:, 0], tr.Y[:, 1])
    gap = np.abs(rX - rY)
    diff = tr.Y - tr.X
    sep = np.hypot(diff[:, 0], diff[:, 1])
    # distance from the origin to the bisector of X and Y
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = (tr.X + tr.Y) / 2
        mirror_to_origin = np.abs(mid[:, 0] * diff[:, 0] + mid[:, 1] * diff[:, 1]) / sep
    ok = (straight | swapped) & (gap > delta) & (sep > delta) & (mirror_to_origin > delta)
    hits = np.flatnonzero(ok)
    k = int(hits[0]) if hits.size else len(tr.X) - 1
    use_swap = bool(swapped[k] and not straight[k])
    xd = float(dX[k, 1] if use_swap else dX[k, 0])
    yd = float(dY[k, 0] if use_swap else dY[k, 1])
    return Theorem3Event(bool(hits.size), k if hits.size else None, xd, yd, float(gap[k]))
