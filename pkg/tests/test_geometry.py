import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbmcouple.errors import CoincidentPoints, CornerPoint, InvalidInput, NotOnBoundary, ParallelLines
from rbmcouple.geometry import (
    ConeSpec,
    ConvexPolygon,
    Disk,
    HalfPlane,
    Line,
    Wedge,
    angle_between,
    cone_contains,
    domain_from_dict,
    inward_normal,
    intersect,
    mirror_line,
    reflect_across,
    signed_boundary_distance,
    square,
    upper_half_plane,
)

coord = st.floats(-50, 50, allow_nan=False)
angle = st.floats(0, math.pi, allow_nan=False, exclude_max=True)


def _reflect_by_base_change(base, theta, p):
    # translate, rotate to the x-axis, negate y, rotate back
    c, s = math.cos(theta), math.sin(theta)
    x, y = p[0] - base[0], p[1] - base[1]
    u, v = c * x + s * y, -s * x + c * y
    v = -v
    return np.array([base[0] + c * u - s * v, base[1] + s * u + c * v])


def test_reflect_vertical_axis():
    np.testing.assert_allclose(reflect_across(Line((0, 0), math.pi / 2), (1, 0)), [-1, 0], atol=1e-15)


def test_reflect_fixes_points_on_line():
    L = Line((1, 2), 0.7)
    p = np.array(L.base) + 3.0 * L.direction
    np.testing.assert_allclose(reflect_across(L, p), p, atol=1e-12)


def test_reflect_step1_configuration():
    L = Line((1, 0), math.pi / 3)
    got = reflect_across(L, (1.5, 0))
    np.testing.assert_allclose(got, _reflect_by_base_change((1, 0), math.pi / 3, (1.5, 0)), atol=1e-14)
    # the reflected point lands on the ray at angle pi/6
    assert abs(math.atan2(got[1], got[0]) - math.pi / 6) < 1e-12


@given(coord, coord, angle, coord, coord)
def test_reflect_is_involution(bx, by, a, px, py):
    L = Line((bx, by), a)
    back = reflect_across(L, reflect_across(L, (px, py)))
    np.testing.assert_allclose(back, [px, py], atol=1e-10)


@given(coord, coord, angle, coord, coord)
def test_reflect_matches_base_change(bx, by, a, px, py):
    got = reflect_across(Line((bx, by), a), (px, py))
    np.testing.assert_allclose(got, _reflect_by_base_change((bx, by), Line((0, 0), a).angle, (px, py)), atol=1e-9)


def test_reflect_vectorized_and_complex():
    L = Line((0, 0), 0.0)
    pts = np.array([[1.0, 2.0], [3.0, -4.0]])
    np.testing.assert_allclose(reflect_across(L, pts), [[1, -2], [3, 4]])
    np.testing.assert_allclose(reflect_across(L, 1 + 2j), [1, -2])


def test_intersect_axes():
    np.testing.assert_allclose(intersect(Line((0, 0), 0), Line((0, 0), math.pi / 2)), [0, 0], atol=1e-15)


def test_intersect_mirror_with_upper_edge():
    # H=(1,0) + r e^{i pi/3} = s e^{i pi/6} solved by hand: r = 1, s = sqrt(3)
    got = intersect(Line((1, 0), math.pi / 3), Line((0, 0), math.pi / 6))
    np.testing.assert_allclose(got, [1.5, math.sqrt(3) / 2], atol=1e-12)


def test_intersect_parallel():
    with pytest.raises(ParallelLines):
        intersect(Line((0, 0), 0.3), Line((1, 1), 0.3))
    with pytest.raises(ParallelLines):
        intersect(Line((0, 0), 0.0), Line((0, 1), math.pi))


@given(coord, coord, angle, coord, coord, angle)
def test_intersection_lies_on_both(ax, ay, a, bx, by, b):
    A, B = Line((ax, ay), a), Line((bx, by), b)
    if abs(math.sin(A.angle - B.angle)) < 1e-3:
        return
    p = intersect(A, B)
    assert abs(A.signed_distance(p)) < 1e-8 * max(1, np.abs(p).max())
    assert abs(B.signed_distance(p)) < 1e-8 * max(1, np.abs(p).max())


def test_line_angle_normalized():
    assert Line((0, 0), math.pi).angle == 0.0
    assert abs(Line((0, 0), -math.pi / 4).angle - 3 * math.pi / 4) < 1e-15


def test_inward_normals():
    np.testing.assert_allclose(inward_normal(Disk((0, 0), 1), (1, 0)), [-1, 0])
    np.testing.assert_allclose(inward_normal(Wedge(math.pi / 3), (2, 0)), [0, 1])
    a = math.pi / 3
    n = inward_normal(Wedge(a), 2 * np.array([math.cos(a), math.sin(a)]))
    np.testing.assert_allclose(n, [math.sin(a), -math.cos(a)], atol=1e-12)
    with pytest.raises(CornerPoint):
        inward_normal(Wedge(math.pi / 4), (0, 0))
    with pytest.raises(CornerPoint):
        inward_normal(square(), (1, 1))
    with pytest.raises(NotOnBoundary):
        inward_normal(Disk(), (0.5, 0))


def test_polygon_normal_constant_along_edge():
    sq = square(2.0)
    normals = [inward_normal(sq, (x, 0.0)) for x in np.linspace(0.1, 1.9, 7)]
    np.testing.assert_array_equal(np.array(normals), np.tile([0.0, 1.0], (7, 1)))


def test_cone_contains_examples():
    assert cone_contains(ConeSpec((0, 0), (1, 0), math.pi / 2), (1, 5))
    assert not cone_contains(ConeSpec((0, 0), (1, 0), math.pi / 4), (1, 2))
    assert not cone_contains(ConeSpec((0, 0), (1, 0), math.pi / 4), (0, 0))
    assert not cone_contains(ConeSpec((0, 0), (1, 0), math.pi / 2), (0, 3))


@given(coord, coord, st.floats(0.05, 3.0), st.sampled_from([0.5, 2.0, 10.0]))
def test_cone_scale_invariance(px, py, a, t):
    c = ConeSpec((1.0, -2.0), (0.6, 0.8), a)
    v = np.array([px, py]) - np.array(c.vertex)
    assert cone_contains(c, (px, py)) == cone_contains(c, np.array(c.vertex) + t * v)


def test_cone_higher_dimension():
    c = ConeSpec((0, 0, 0), (0, 0, 1), math.pi / 4)
    assert cone_contains(c, (0.1, 0.1, 1.0))
    assert not cone_contains(c, (1.0, 1.0, 1.0))


def test_cone_rejects_bad_angle():
    with pytest.raises(InvalidInput):
        ConeSpec((0, 0), (1, 0), math.pi)


def test_mirror_line_examples():
    m = mirror_line((0, 1), (0, -1))
    assert m.angle == 0.0 and abs(m.signed_distance((5, 0))) < 1e-15
    m = mirror_line((1, 0), (0, 1))
    assert abs(m.angle - math.pi / 4) < 1e-15
    np.testing.assert_allclose(m.base, [0.5, 0.5])
    with pytest.raises(CoincidentPoints):
        mirror_line((1, 1), (1, 1))


@given(coord, coord, coord, coord)
def test_mirror_line_round_trip(x1, x2, y1, y2):
    if math.hypot(x1 - y1, x2 - y2) < 1e-6:
        return
    np.testing.assert_allclose(reflect_across(mirror_line((x1, x2), (y1, y2)), (x1, x2)), [y1, y2], atol=1e-9)


def test_signed_distance_examples():
    assert signed_boundary_distance(Disk(), (0, 0)) == 1.0
    assert signed_boundary_distance(upper_half_plane(), (3, -2)) == -2.0
    assert abs(signed_boundary_distance(Wedge(math.pi / 2), (1, 2)) - 1.0) < 1e-15
    assert abs(signed_boundary_distance(square(), (1.5, 0.5)) + 0.5) < 1e-15
    # outside near a corner: distance to the vertex
    assert abs(signed_boundary_distance(square(), (-3, -4)) + 5) < 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_signed_distance_matches_brute_force_for_square(x, y):
    sq = square()
    t = np.linspace(0, 1, 20001)
    boundary = np.concatenate(
        [np.column_stack([t, 0 * t]), np.column_stack([1 + 0 * t, t]),
         np.column_stack([t, 1 + 0 * t]), np.column_stack([0 * t, t])]
    )
    d = np.min(np.hypot(boundary[:, 0] - x, boundary[:, 1] - y))
    inside = 0 <= x <= 1 and 0 <= y <= 1
    assert abs(abs(sq.signed_distance((x, y))) - d) < 1e-4
    assert (sq.signed_distance((x, y)) >= 0) == inside


def test_angle_between():
    assert angle_between((1, 0), (1, 0)) == 0.0
    assert abs(angle_between((1, 0), (0, 1)) - math.pi / 2) < 1e-15
    assert abs(angle_between((1, 0), (-1, 0)) - math.pi) < 1e-15


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=2))
def test_convexity_of_domains(pair):
    for dom in (Disk(), Wedge(1.0), square(), ConvexPolygon(((0, 0), (2, 0), (1, 1.5)))):
        a, b = np.array(pair[0]), np.array(pair[1])
        if dom.contains(a) and dom.contains(b):
            assert dom.signed_distance((a + b) / 2) >= -1e-12


def test_polygon_validation():
    with pytest.raises(InvalidInput):
        ConvexPolygon(((0, 0), (0, 1), (1, 1), (1, 0)))  # clockwise
    with pytest.raises(InvalidInput):
        ConvexPolygon(((0, 0), (1, 0), (2, 0)))


def test_halfplane_orientation_from_normal():
    hp = HalfPlane(Line((0, 1), 0.0), (0, -1))
    assert hp.signed_distance((0, 0)) == 1.0
    np.testing.assert_allclose(hp.inward_normal((3, 1)), [0, -1], atol=1e-15)


def test_projection():
    q, corner = square().project((2, 2))
    np.testing.assert_allclose(q, [1, 1])
    assert corner
    q, corner = Disk().project((0, 3))
    np.testing.assert_allclose(q, [0, 1])
    assert not corner


@pytest.mark.parametrize(
    "d",
    [
        {"kind": "disk", "center": [1.0, 2.0], "radius": 0.5},
        {"kind": "halfplane", "base": [0.0, 1.0], "angle": 0.3, "normal": [-math.sin(0.3), math.cos(0.3)]},
        {"kind": "wedge", "alpha": 0.7},
        {"kind": "polygon", "vertices": [[0, 0], [1, 0], [0, 1]]},
    ],
)
def test_domain_json_round_trip(d):
    dom = domain_from_dict(d)
    again = domain_from_dict(dom.to_dict())
    pts = np.random.default_rng(0).uniform(-2, 2, (50, 2))
    np.testing.assert_allclose(dom.signed_distance(pts), again.signed_distance(pts))


def test_domain_json_rejects_unknown():
    with pytest.raises(InvalidInput):
        domain_from_dict({"kind": "ellipse"})
    with pytest.raises(InvalidInput):
        domain_from_dict({"kind": "wedge"})
