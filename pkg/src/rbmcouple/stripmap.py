"""Logarithmic maps of the moving wedges onto the strip ``U = {0 <= Im z <= pi}``.

A frame fixes the wedge angle ``alpha`` (``D = {0 < arg z < alpha}``), the
hinge ``H > 0`` on the real edge and the mirror angle ``beta``; the mirror
is the line through ``H`` at angle ``beta``.  ``A`` is where the mirror
image of the upper edge line meets the real axis and ``A'`` is the mirror
image of ``A``.

``f`` sends the wedge ``W`` (vertex ``A``, sides through ``H`` and ``H'``)
onto ``U`` and ``g`` does the same for ``W'`` (vertex ``A'``).  Logarithms
are taken on a branch centred on each wedge's bisector, so both maps are
continuous on the closed wedges.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    GridMismatch,
    OutsideWedge,
    ParameterOutOfRange,
    RadiusOutOfRange,
    VertexSingularity,
)
from .geometry import Line, reflect_across, to_complex

VERTEX_CUTOFF = 1e-14
WEDGE_TOL = 1e-9


@dataclass(frozen=True)
class WedgeMirrorFrame:
    alpha: float
    H: float
    beta: float

    @property
    def gamma(self):
        return self.beta - self.alpha

    @property
    def mirror(self):
        return Line((self.H, 0.0), self.beta)

    @property
    def Hprime_abs(self):
        return self.H * math.sin(self.beta) / math.sin(self.gamma)

    @property
    def Hprime(self):
        return self.Hprime_abs * cmath.exp(1j * self.alpha)

    @property
    def A(self):
        return self.H * (1.0 + math.sin(self.alpha) / math.sin(2 * self.beta - self.alpha))

    @property
    def Aprime_abs(self):
        return self.Hprime_abs * (1.0 - math.sin(self.alpha) / math.sin(2 * self.gamma + self.alpha))

    @property
    def Aprime(self):
        return self.Aprime_abs * cmath.exp(1j * self.alpha)

    @property
    def scale(self):
        """``pi / (pi + alpha - 2 beta)``, the common angular stretch of f and g."""
        return math.pi / (math.pi + self.alpha - 2 * self.beta)

    def reflect(self, z):
        return to_complex(reflect_across(self.mirror, np.asarray(z, dtype=complex)))


def build_frame(alpha, H, beta):
    """Frame for a mirror through ``(H, 0)`` at angle ``beta``.

    Any ``beta`` in ``(alpha, pi/2)`` gives a well-posed frame; the proof's
    working window is the narrower ``(alpha, pi/4 + alpha/2)``.
    """
    if not 0.0 < alpha < math.pi / 2:
        raise ParameterOutOfRange(f"alpha={alpha} outside (0, pi/2)")
    if not H > 0.0:
        raise ParameterOutOfRange(f"H={H} must be positive")
    if not alpha < beta < math.pi / 2:
        raise ParameterOutOfRange(f"beta={beta} outside ({alpha}, pi/2)")
    return WedgeMirrorFrame(float(alpha), float(H), float(beta))


def frame_from_hprime(alpha, hprime_abs, gamma):
    """Frame with ``|H'|`` and ``gamma = beta - alpha`` held as the free parameters."""
    beta = gamma + alpha
    if not 0.0 < gamma or not beta < math.pi / 2:
        raise ParameterOutOfRange(f"gamma={gamma} outside (0, pi/2 - alpha)")
    return build_frame(alpha, hprime_abs * math.sin(gamma) / math.sin(beta), beta)


def beta_window(alpha, margin=0.05):
    """Closed sub-window of ``(alpha, pi/4 + alpha/2)`` trimmed by ``margin`` of its width."""
    lo, hi = alpha, math.pi / 4 + alpha / 2
    w = hi - lo
    return lo + margin * w, hi - margin * w


def _wedge_arg(z, vertex, lo, hi, name):
    d = z - vertex
    if abs(d) < VERTEX_CUTOFF:
        raise VertexSingularity(f"{z} is at the vertex of {name}")
    mid = 0.5 * (lo + hi)
    rel = cmath.phase(d * cmath.exp(-1j * mid))
    if abs(rel) > 0.5 * (hi - lo) + WEDGE_TOL:
        raise OutsideWedge(f"{z} lies outside {name}")
    return math.log(abs(d)), mid + rel


def eval_f(frame, z):
    z = complex(z)
    logr, arg = _wedge_arg(z, frame.A, 2 * frame.beta - frame.alpha, math.pi, "W")
    return complex(logr, arg + frame.alpha - 2 * frame.beta) * frame.scale


def eval_g(frame, z):
    z = complex(z)
    lo = 2 * frame.beta - math.pi
    logr, arg = _wedge_arg(z, frame.Aprime, lo, frame.alpha, "W'")
    return complex(logr, arg - frame.alpha).conjugate() * frame.scale


def _wedge_arg_many(z, vertex, lo, hi, name):
    d = np.asarray(z, dtype=complex) - vertex
    if np.any(np.abs(d) < VERTEX_CUTOFF):
        raise VertexSingularity(f"a point is at the vertex of {name}")
    mid = 0.5 * (lo + hi)
    rel = np.angle(d * cmath.exp(-1j * mid))
    if np.any(np.abs(rel) > 0.5 * (hi - lo) + WEDGE_TOL):
        raise OutsideWedge(f"a point lies outside {name}")
    return np.log(np.abs(d)), mid + rel


def eval_f_many(frame, z):
    logr, arg = _wedge_arg_many(z, frame.A, 2 * frame.beta - frame.alpha, math.pi, "W")
    return (logr + 1j * (arg + frame.alpha - 2 * frame.beta)) * frame.scale


def eval_g_many(frame, z):
    logr, arg = _wedge_arg_many(z, frame.Aprime, 2 * frame.beta - math.pi, frame.alpha, "W'")
    return (logr - 1j * (arg - frame.alpha)) * frame.scale


def in_wedge_W(frame, z):
    try:
        eval_f(frame, z)
    except (OutsideWedge, VertexSingularity):
        return False
    return True


def symmetry_check(frame, z):
    """``|g(gamma, z) - f(beta, S z)|`` for ``z`` in ``W'``."""
    z = complex(z)
    return abs(eval_g(frame, z) - eval_f(frame, complex(frame.reflect(z))))


def _check_r(r, lo, hi):
    if not lo < r < hi:
        raise RadiusOutOfRange(f"r={r} outside ({lo}, {hi})")


def dfdbeta(frame, r):
    """``d/dbeta Re f(beta, r)`` on the segment ``H < r < A`` (alpha, H fixed)."""
    _check_r(r, frame.H, frame.A)
    a, b = frame.alpha, frame.beta
    t = 2 * b - a
    c = math.pi + a - 2 * b
    first = -2 * math.pi * frame.H * math.sin(a) * (math.cos(t) / math.sin(t) ** 2) / (c * (frame.A - r))
    return first + 2 * math.pi * math.log(frame.A - r) / c**2


def dfdtheta_abs(frame, r):
    """Normal derivative of ``f`` across the real edge at ``r``, per unit arc length."""
    _check_r(r, frame.H, frame.A)
    return frame.scale / (frame.A - r)


def dgdgamma(frame, r):
    """``d/dgamma g(gamma, r e^{i alpha})`` on ``|A'| < r < |H'|`` (alpha, |H'| fixed)."""
    _check_r(r, frame.Aprime_abs, frame.Hprime_abs)
    a, g = frame.alpha, frame.gamma
    t = a + 2 * g
    c = math.pi - a - 2 * g
    hp = frame.Hprime_abs
    first = -2 * math.pi * hp * math.sin(a) * (math.cos(t) / math.sin(t) ** 2) / (c * (r - frame.Aprime_abs))
    return first + 2 * math.pi * math.log(r - frame.Aprime_abs) / c**2


def dgdtheta_abs(frame, r):
    _check_r(r, frame.Aprime_abs, frame.Hprime_abs)
    return frame.scale / (r - frame.Aprime_abs)


def dFdz(frame, z):
    return frame.scale / (complex(z) - frame.A)


# --------------------------------------------------------------------------
# along simulated couplings


def frame_at(tr, k, alpha):
    """Frame of step ``k`` from the bisector of ``(X_k, Y_k)``, or ``None``.

    A frame needs ``X != Y``, a mirror meeting the real axis at ``H > 0`` and
    an angle in ``(alpha, pi/2)``.
    """
    x, y = tr.X[k], tr.Y[k]
    dx, dy = y[0] - x[0], y[1] - x[1]
    if math.hypot(dx, dy) <= 1e-12:
        return None
    b = math.fmod(math.atan2(dy, dx) + 1.5 * math.pi, math.pi)
    if not alpha < b < math.pi / 2:
        return None
    H = 0.5 * (x[0] + y[0]) - 0.5 * (x[1] + y[1]) * math.cos(b) / math.sin(b)
    return WedgeMirrorFrame(float(alpha), float(H), b) if H > 0 else None


def frames_from_trajectory(tr, alpha):
    return [frame_at(tr, k, alpha) for k in range(len(tr.X))]


@dataclass(frozen=True, eq=False)
class StripProcess:
    zstar: np.ndarray  # complex, nan where not evaluated
    rho_tilde: np.ndarray
    residual: np.ndarray  # |g(Y) - f(X)|, nan where not evaluated
    evaluated: np.ndarray  # bool
    skipped: np.ndarray  # bool: a frame exists but X is outside W

    @property
    def max_residual(self):
        r = self.residual[self.evaluated]
        return float(r.max()) if r.size else 0.0


def strip_process(tr, frames):
    n = len(tr.X)
    if len(frames) != n:
        raise GridMismatch(f"{len(frames)} frames for {n} trajectory steps")
    dt = tr.grid.dt
    z = np.full(n, np.nan + 1j * np.nan)
    res = np.full(n, np.nan)
    dens = np.zeros(n)
    ok = np.zeros(n, dtype=bool)
    skipped = np.zeros(n, dtype=bool)
    xs = to_complex(tr.X)
    ys = to_complex(tr.Y)
    for k, fr in enumerate(frames):
        if fr is None:
            continue
        try:
            zk = eval_f(fr, xs[k])
            gk = eval_g(fr, ys[k])
        except (OutsideWedge, VertexSingularity):
            skipped[k] = True
            continue
        z[k] = zk
        res[k] = abs(gk - zk)
        dens[k] = abs(dFdz(fr, xs[k])) ** 2
        ok[k] = True
    # left-endpoint rule, matching the simulation clock
    rho = np.concatenate([[0.0], np.cumsum(dens[:-1] * dt)])
    return StripProcess(z, rho, res, ok, skipped)


def variance_ratios(sp, steps):
    """Sample second moments of ``Re dZ*`` and ``Im dZ*`` per unit ``d rho``.

    ``steps`` are indices ``k`` with both ``k`` and ``k + 1`` evaluated and
    no boundary push in between.
    """
    k = np.asarray(steps, dtype=int)
    dz = sp.zstar[k + 1] - sp.zstar[k]
    drho = sp.rho_tilde[k + 1] - sp.rho_tilde[k]
    u = dz / np.sqrt(drho)
    return float(np.mean(u.real**2)), float(np.mean(u.imag**2))


@dataclass(frozen=True)
class DriftReport:
    steps_x: int
    steps_y: int
    delta_beta_max_err: float
    ratio_min: float
    ratio_max: float
    fraction_nonpositive: float
    excluded: int


def drift_bound_check(tr, frames, window, alpha=None):
    """Sign of the oblique reflection at push steps with ``beta`` in ``window``.

    At an X push on the real edge the mirror turns about the hinge by
    ``dbeta = dLx / (2 |X - H|)``; the push moves ``Z*`` by
    ``df/dbeta * dbeta`` along the strip and ``|df/dn| * dLx`` across it
    (``dfdtheta_abs`` is the normal derivative), so the horizontal-to-vertical
    ratio is ``df/dbeta / (2 |X - H| |df/dn|)``.
    Y pushes on the upper edge are handled with ``g`` and ``gamma``.
    With ``frames=None`` the frames are built on demand (``alpha`` required).
    """
    if frames is None:
        if alpha is None:
            raise ParameterOutOfRange("alpha is needed to build frames on demand")
        get = lambda k: frame_at(tr, k, alpha)  # noqa: E731
    else:
        get = frames.__getitem__
    lo, hi = window
    dLx = np.diff(tr.Lx)
    dLy = np.diff(tr.Ly)
    ratios = []
    errs = []
    nx = ny = excluded = 0
    for k in range(len(dLx)):
        fx, fy = dLx[k] > 0, dLy[k] > 0
        if fx == fy:
            continue
        f0, f1 = get(k), get(k + 1)
        if f0 is None or f1 is None or not lo <= f0.beta <= hi:
            continue
        if tr.phase_id[k] != tr.phase_id[k + 1]:
            continue
        if fx:
            p = tr.X[k + 1]
            h = np.array([f1.H, 0.0])
            dist = float(np.hypot(*(p - h)))
            r = float(np.hypot(*p))
            errs.append(abs((f1.beta - f0.beta) - dLx[k] / (2 * dist)))
            try:
                ratios.append(dfdbeta(f1, r) / (2 * dist * dfdtheta_abs(f1, r)))
                nx += 1
            except RadiusOutOfRange:
                excluded += 1
        else:
            p = tr.Y[k + 1]
            h = np.array([f1.Hprime.real, f1.Hprime.imag])
            dist = float(np.hypot(*(p - h)))
            r = float(np.hypot(*p))
            errs.append(abs((f1.beta - f0.beta) - dLy[k] / (2 * dist)))
            try:
                ratios.append(dgdgamma(f1, r) / (2 * dist * dgdtheta_abs(f1, r)))
                ny += 1
            except RadiusOutOfRange:
                excluded += 1
    r = np.asarray(ratios)
    return DriftReport(
        nx,
        ny,
        float(max(errs)) if errs else 0.0,
        float(r.min()) if r.size else math.nan,
        float(r.max()) if r.size else math.nan,
        float(np.mean(r <= 0)) if r.size else math.nan,
        excluded,
    )


def random_frames(rng, n, alpha_range=(0.05, math.pi / 2 - 0.05), H_range=(0.2, 5.0)):
    """Random admissible frames with ``beta`` drawn from the working window."""
    out = []
    for _ in range(n):
        a = rng.uniform(*alpha_range)
        H = rng.uniform(*H_range)
        lo, hi = a, math.pi / 4 + a / 2
        b = rng.uniform(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo))
        out.append(build_frame(a, H, b))
    return out


def random_points_in_Wprime(frame, rng, n, rmax=None):
    """Points of ``W'`` in polar form about ``A'`` with uniform angle and radius."""
    lo = 2 * frame.beta - math.pi
    hi = frame.alpha
    rmax = rmax or 2.0 * max(frame.A, frame.Hprime_abs)
    th = rng.uniform(lo, hi, n)
    rr = rng.uniform(1e-3, rmax, n)
    return frame.Aprime + rr * np.exp(1j * th)


def _relerr(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def identity_sweep(n_frames=1000, n_points=1000, seed=0, h=1e-6):
    """Randomized check of the frame identities, the symmetry and the derivative forms."""
    rng = np.random.default_rng(seed)
    frames = random_frames(rng, n_frames)
    sym = 0.0
    derr = 0.0
    neg_viol = 0
    for fr in frames:
        pts = random_points_in_Wprime(fr, rng, n_points)
        img = fr.reflect(pts)
        zs = eval_g_many(fr, pts)
        fs = eval_f_many(fr, img)
        sym = max(sym, float(np.max(np.abs(zs - fs))))

        r = fr.H + rng.uniform(0.2, 0.8) * (fr.A - fr.H)
        fp = eval_f(build_frame(fr.alpha, fr.H, fr.beta + h), r).real
        fm = eval_f(build_frame(fr.alpha, fr.H, fr.beta - h), r).real
        derr = max(derr, _relerr((fp - fm) / (2 * h), dfdbeta(fr, r)))
        # one-sided, per unit arc length r * theta
        th = abs(eval_f(fr, r * cmath.exp(1j * h)) - eval_f(fr, r)) / (r * h)
        derr = max(derr, _relerr(th, dfdtheta_abs(fr, r)))

        s = fr.Aprime_abs + rng.uniform(0.2, 0.8) * (fr.Hprime_abs - fr.Aprime_abs)
        z = s * cmath.exp(1j * fr.alpha)
        hp = fr.Hprime_abs
        gp = eval_g(frame_from_hprime(fr.alpha, hp, fr.gamma + h), z).real
        gm = eval_g(frame_from_hprime(fr.alpha, hp, fr.gamma - h), z).real
        derr = max(derr, _relerr((gp - gm) / (2 * h), dgdgamma(fr, s)))
        th = abs(eval_g(fr, s * cmath.exp(1j * (fr.alpha - h))) - eval_g(fr, z)) / (s * h)
        derr = max(derr, _relerr(th, dgdtheta_abs(fr, s)))

        # negativity where both terms are negative: within distance 1 of the vertex
        for u in (0.1, 0.5, 0.9):
            if dfdbeta(fr, fr.A - u * min(1.0, fr.A - fr.H)) >= 0:
                neg_viol += 1
            if dgdgamma(fr, fr.Aprime_abs + u * min(1.0, fr.Hprime_abs - fr.Aprime_abs)) >= 0:
                neg_viol += 1
    return {
        "frames_tested": n_frames,
        "max_symmetry_residual": sym,
        "derivative_max_relerr": derr,
        "negativity_violations": neg_viol,
    }
