import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from rbmcouple.errors import (
    CoincidentPoints,
    InvalidInput,
    MirrorParallelBoundary,
    StartOnBoundary,
    StartOutsideDomain,
    WrongDomain,
)
from rbmcouple.geometry import Disk, HalfPlane, Line, Wedge, reflect_across, square, upper_half_plane
from rbmcouple.mirror import (
    MirrorTrajectory,
    detect_theorem3_event,
    simulate_halfplane_mirror,
    simulate_plane_mirror,
    simulate_polygon_mirror,
)
from rbmcouple.noise import IncrementStream, PathGrid, SeedSpec, sample_increments
from rbmcouple.reflect import simulate_reflected


def _synthetic(X, Y, domain=None):
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    n = len(X)
    nan2 = np.full((n, 2), np.nan)
    return MirrorTrajectory(
        PathGrid(0.01, max(1, n - 1)), X, Y, np.zeros(n), np.zeros(n), nan2, np.full(n, np.nan),
        nan2, np.full(n, np.nan), np.zeros(n, dtype=int), domain=domain,
    )


def test_plane_mirror_conjugate_until_crossing():
    noise = sample_increments(SeedSpec(0), PathGrid(1e-3, 5000))
    tr = simulate_plane_mirror((0, 1), (0, -1), noise)
    k = tr.coupled_index
    assert k is not None
    np.testing.assert_allclose(tr.Y[:k], tr.X[:k] * [1, -1], atol=1e-12)
    np.testing.assert_array_equal(tr.Y[k:], tr.X[k:])


@pytest.mark.parametrize("seed", range(5))
def test_plane_mirror_coupling_index_matches_scan(seed):
    x, y = np.array([0.3, 0.2]), np.array([-0.1, 0.5])
    noise = sample_increments(SeedSpec(seed), PathGrid(1e-3, 20_000))
    tr = simulate_plane_mirror(x, y, noise)
    # walk the free path and test the side of the perpendicular bisector
    u = (y - x) / np.linalg.norm(y - x)
    mid = (x + y) / 2
    tol = math.sqrt(1e-3) * 1e-3
    pos = x.copy()
    s0 = (pos - mid) @ u
    expected = None
    for k, d in enumerate(noise.increments, start=1):
        pos = pos + d
        s = (pos - mid) @ u
        if s * s0 <= 0 or abs(s) <= tol:
            expected = k
            break
    assert tr.coupled_index == expected
    assert tr.symmetry_residual() < 5e-8


def test_plane_mirror_zero_noise():
    tr = simulate_plane_mirror((0, 1), (0, -1), IncrementStream(PathGrid(0.1, 10), np.zeros((10, 2))))
    assert tr.coupled_index is None
    np.testing.assert_array_equal(tr.X, np.tile([0, 1], (11, 1)))
    np.testing.assert_array_equal(tr.Y, np.tile([0, -1], (11, 1)))


def test_plane_mirror_coincident():
    with pytest.raises(CoincidentPoints):
        simulate_plane_mirror((1, 1), (1, 1), IncrementStream(PathGrid(0.1, 1), np.zeros((1, 2))))


HP_CASES = [
    (upper_half_plane(), (-0.5, 0.3), (0.5, 0.3)),
    (upper_half_plane(), (0.2, 0.05), (0.6, 0.7)),
    # tilted half-plane with boundary through (1, -1)
    (HalfPlane(Line((1.0, -1.0), 0.4), (-math.sin(0.4), math.cos(0.4))), None, None),
]


def _hp_starts(hp, x, y):
    if x is not None:
        return np.array(x), np.array(y)
    # symmetric pair about a mirror through a boundary point
    H = np.asarray(hp.boundary.base) + 0.7 * hp.boundary.direction
    M = Line(tuple(H), hp.boundary.angle + 1.1)
    x = H + 0.6 * np.array([math.cos(hp.boundary.angle + 0.5), math.sin(hp.boundary.angle + 0.5)])
    return x, reflect_across(M, x)


@pytest.mark.parametrize("case", range(len(HP_CASES)))
@pytest.mark.parametrize("seed", range(3))
def test_halfplane_invariants(case, seed):
    hp, x, y = HP_CASES[case]
    x, y = _hp_starts(hp, x, y)
    tr = simulate_halfplane_mirror(hp, x, y, SeedSpec(seed), PathGrid(1e-4, 20_000))
    k = tr.coupled_index if tr.coupled_index is not None else len(tr.X)
    H = tr.hinge[:k]
    assert np.ptp(H[:, 0]) < 1e-10 and np.ptp(H[:, 1]) < 1e-10
    dx = np.hypot(*(tr.X[:k] - H).T)
    dy = np.hypot(*(tr.Y[:k] - H).T)
    np.testing.assert_allclose(dx, dy, rtol=1e-12, atol=1e-12)
    dev = np.abs(tr.beta[:k] - math.pi / 2)
    assert np.all(np.diff(dev) <= 1e-9)
    assert tr.symmetry_residual() < 5e-8
    assert np.all(hp.signed_distance(tr.X) >= -1e-9) and np.all(hp.signed_distance(tr.Y) >= -1e-9)
    assert np.all(np.diff(tr.Lx) >= 0) and np.all(np.diff(tr.Ly) >= 0)
    if tr.coupled_index is not None:
        np.testing.assert_array_equal(tr.X[k:], tr.Y[k:])


@pytest.mark.parametrize("seed", range(3))
def test_halfplane_angle_moves_only_at_pushes(seed):
    tr = simulate_halfplane_mirror(upper_half_plane(), (-0.5, 0.3), (0.5, 0.3), SeedSpec(seed), PathGrid(1e-4, 20_000))
    k = tr.coupled_index if tr.coupled_index is not None else len(tr.X)
    quiet = (np.diff(tr.Lx[:k]) == 0) & (np.diff(tr.Ly[:k]) == 0)
    assert quiet.any()
    assert np.all(np.abs(np.diff(tr.beta[:k])[quiet]) < 1e-12)


def test_halfplane_errors():
    hp, g = upper_half_plane(), PathGrid(1e-3, 10)
    # the hinge lies on the bisector, so any distinct pair starts symmetric
    tr = simulate_halfplane_mirror(hp, (0, 1), (3, 2), SeedSpec(0), g)
    assert abs(np.hypot(*(tr.X[0] - tr.hinge[0])) - np.hypot(*(tr.Y[0] - tr.hinge[0]))) < 1e-12
    with pytest.raises(MirrorParallelBoundary):
        simulate_halfplane_mirror(hp, (0, 1), (0, 2), SeedSpec(0), g)
    with pytest.raises(StartOutsideDomain):
        simulate_halfplane_mirror(hp, (0, -1), (1, 1), SeedSpec(0), g)
    with pytest.raises(WrongDomain):
        simulate_halfplane_mirror(square(), (0.2, 0.5), (0.8, 0.5), SeedSpec(0), g)


def test_halfplane_marginal_law():
    # each coordinate of the coupling is a reflected Brownian motion
    n, g = 1000, PathGrid(1e-3, 1000)
    hp = upper_half_plane()
    a = np.empty(n)
    b = np.empty(n)
    for i in range(n):
        tr = simulate_halfplane_mirror(hp, (-0.5, 0.3), (0.5, 0.3), SeedSpec(7, i), g)
        a[i] = tr.X[-1, 1]
        b[i] = simulate_reflected(hp, (-0.5, 0.3), sample_increments(SeedSpec(8, i), g)).positions[-1, 1]
    assert ks_2samp(a, b).pvalue > 0.01


def test_polygon_deep_start_short_horizon():
    tr = simulate_polygon_mirror(square(), (0.4, 0.5), (0.6, 0.5), SeedSpec(0), PathGrid(1e-4, 10))
    assert [p.kind for p in tr.phases] == ["freePlane"]
    assert tr.end_reason == "horizonEnd"
    assert tr.coupled_index is None


def _coupled_run():
    for s in range(50):
        tr = simulate_polygon_mirror(square(), (0.45, 0.5), (0.55, 0.5), SeedSpec(s), PathGrid(1e-4, 5000))
        if tr.coupled_index is not None and tr.coupled_index < len(tr.X) - 10:
            return tr
    raise AssertionError("no coupled run found")


def test_polygon_coupled_tail():
    tr = _coupled_run()
    k = tr.coupled_index
    np.testing.assert_array_equal(tr.X[k:], tr.Y[k:])
    assert np.all(square().signed_distance(tr.X) >= -1e-9)
    assert tr.phases[-1].kind == "coupled"


def test_polygon_stop_coupled():
    tr = _coupled_run()
    s = simulate_polygon_mirror(
        square(), (0.45, 0.5), (0.55, 0.5), SeedSpec(0), PathGrid(1e-4, 5000),
        drivers=None, stop_coupled=True,
    )
    assert s.end_reason in ("coupled", "bothOnBoundary", "horizonEnd", "accumulation")
    if s.coupled_index is not None:
        assert s.end_index == s.coupled_index
    assert tr.end_reason != "coupled"


@pytest.mark.parametrize("seed", [7, 8, 9, 11, 16])
def test_wedge_hinge_constant_per_phase(seed):
    # seeds picked so that the run passes through several half-plane phases
    a = math.pi / 4
    x = np.array([1.3, 0.02])
    y = reflect_across(Line((1.0, 0.0), 0.98), x)
    tr = simulate_polygon_mirror(Wedge(a), x, y, SeedSpec(seed), PathGrid(2e-5, 20_000), stop_coupled=True)
    assert tr.symmetry_residual() < 5e-8
    hinges = []
    for ph in tr.phases:
        if ph.kind != "halfPlane":
            continue
        live = np.isfinite(tr.beta[ph.start : ph.stop])
        H = tr.hinge[ph.start : ph.stop][live]
        assert np.ptp(H[:, 0]) < 1e-10 and np.ptp(H[:, 1]) < 1e-10
        # the hinge sits on the active edge line
        assert abs(ph.line.signed_distance(H[0])) < 1e-9
        dev = np.abs(tr.beta[ph.start : ph.stop][live] - math.pi / 2)
        assert np.all(np.diff(dev) <= 1e-9)
        hinges.append(H[0])
    assert len(hinges) >= 2
    for h0, h1 in zip(hinges, hinges[1:]):
        assert np.hypot(*(h1 - h0)) > 1e-12


def test_polygon_errors():
    g = PathGrid(1e-3, 10)
    with pytest.raises(WrongDomain):
        simulate_polygon_mirror(Disk(), (0.1, 0), (-0.1, 0), SeedSpec(0), g)
    with pytest.raises(CoincidentPoints):
        simulate_polygon_mirror(square(), (0.5, 0.5), (0.5, 0.5), SeedSpec(0), g)
    with pytest.raises(StartOnBoundary):
        simulate_polygon_mirror(square(), (0.0, 0.5), (0.5, 0.5), SeedSpec(0), g)
    with pytest.raises(InvalidInput):
        simulate_polygon_mirror(square(), (0.4, 0.5), (0.6, 0.5), SeedSpec(0), g, k_max=0)


def test_theorem3_exclusions():
    a = math.pi / 4
    w = Wedge(a)
    # both on E_X
    tr = _synthetic([(1, 1), (1.0, 0.001)], [(2, 1), (2.0, 0.002)], w)
    assert not detect_theorem3_event(tr, a).occurred
    # coupled on the boundary
    p = 2 * np.array([math.cos(a), math.sin(a)])
    tr = _synthetic([(1, 1), p], [(1, 1.2), p], w)
    assert not detect_theorem3_event(tr, a).occurred
    # opposite edges at different radii
    tr = _synthetic([(1, 1), (1.0, 0.0)], [(1, 1.2), p], w)
    ev = detect_theorem3_event(tr, a)
    assert ev.occurred and ev.step_index == 1 and abs(ev.radial_gap - 1.0) < 1e-12
    # labels swapped
    ev = detect_theorem3_event(_synthetic([(1, 1.2), p], [(1, 1), (1.0, 0.0)], w), a)
    assert ev.occurred and ev.x_edge_dist < 1e-12 and ev.y_edge_dist < 1e-12
    # equal radii: mirror passes through the vertex
    q = np.array([math.cos(a), math.sin(a)])
    assert not detect_theorem3_event(_synthetic([(1, 1), (1.0, 0.0)], [(1, 1.2), q], w), a).occurred


def test_theorem3_wrong_domain():
    with pytest.raises(WrongDomain):
        detect_theorem3_event(_synthetic([(0.5, 0.5)], [(0.6, 0.5)], square()), math.pi / 4)
    with pytest.raises(WrongDomain):
        detect_theorem3_event(_synthetic([(0.5, 0.1)], [(0.6, 0.1)], Wedge(0.5)), math.pi / 4)


def test_csv_round_trip(tmp_path):
    x = np.array([1.2, 0.15])
    y = reflect_across(Line((1.0, 0.0), 0.8), x)
    tr = simulate_polygon_mirror(Wedge(math.pi / 4), x, y, SeedSpec(3), PathGrid(1e-4, 500))
    f = tmp_path / "m.csv"
    tr.to_csv(f)
    assert f.read_text().splitlines()[0] == ",".join(MirrorTrajectory.COLUMNS)
    back = MirrorTrajectory.from_csv(f)
    np.testing.assert_array_equal(back.X, tr.X)
    np.testing.assert_array_equal(back.Y, tr.Y)
    np.testing.assert_array_equal(back.phase_id, tr.phase_id)
    np.testing.assert_array_equal(back.beta, tr.beta)
    assert back.symmetry_residual() < 5e-8
