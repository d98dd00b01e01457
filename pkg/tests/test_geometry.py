import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medlink import fixtures as F
from medlink.errors import DegenerateTripleError, MalformedLoopError, OrientationError, ParameterError
from medlink.geometry import (
    Location,
    PolyLoop,
    circumcenter,
    classify_points,
    is_simple,
    outward_normals,
    point_in_region,
    resample_loop,
    signed_area,
)

UNIT_SQUARE = PolyLoop([[0, 0], [1, 0], [1, 1], [0, 1]])


def test_signed_area_orientation():
    assert signed_area(UNIT_SQUARE) == 1.0
    assert signed_area(UNIT_SQUARE.reversed()) == -1.0
    assert signed_area([[0, 0], [1, 0], [0, 1]]) == 0.5


def test_short_loop_is_malformed():
    with pytest.raises(MalformedLoopError):
        signed_area([[0, 0], [1, 0]])
    with pytest.raises(MalformedLoopError):
        PolyLoop([[0, 0], [1, 1]])


@pytest.mark.parametrize("p,q,r,expected", [
    ((0, 0), (1, 0), (0, 1), (0.5, 0.5)),
    ((-1, 0), (1, 0), (0, 1), (0.0, 0.0)),
])
def test_circumcenter_examples(p, q, r, expected):
    assert np.allclose(circumcenter(p, q, r), expected)


def test_circumcenter_collinear():
    with pytest.raises(DegenerateTripleError):
        circumcenter((0, 0), (1, 0), (2, 0))


pts = st.tuples(st.floats(-100, 100), st.floats(-100, 100))


@settings(max_examples=200, deadline=None)
@given(pts, pts, pts)
def test_circumcenter_equidistant(p, q, r):
    p, q, r = map(np.array, (p, q, r))
    span = max(np.hypot(*(p - q)), np.hypot(*(q - r)), np.hypot(*(r - p)))
    try:
        c = circumcenter(p, q, r)
    except DegenerateTripleError:
        return
    d = [np.hypot(*(c - v)) for v in (p, q, r)]
    # conditioning: the error grows with the circumradius relative to the span
    assert max(d) - min(d) <= 1e-9 * span * max(1.0, max(d) / span) ** 2


def test_resample_square():
    lp = resample_loop(UNIT_SQUARE, 0.1)
    assert len(lp) == 40
    gaps = np.hypot(*(np.roll(lp.vertices, -1, 0) - lp.vertices).T)
    assert gaps.max() <= 0.1 + 1e-12
    assert signed_area(lp) > 0


def test_resample_preserves_corners_and_is_idempotent():
    sq = PolyLoop(UNIT_SQUARE.vertices, (0, 1, 2, 3))
    lp = resample_loop(sq, 0.07)
    assert np.array_equal(lp.vertices[list(lp.corners)], sq.vertices)
    again = resample_loop(lp, 0.07)
    assert np.array_equal(again.vertices, lp.vertices)


def test_resample_coarse_is_identity():
    lp = resample_loop(UNIT_SQUARE, 10.0)
    assert np.array_equal(lp.vertices, UNIT_SQUARE.vertices)


def test_resample_bad_spacing():
    with pytest.raises(ParameterError):
        resample_loop(UNIT_SQUARE, 0.0)


@pytest.mark.parametrize("name", ["E1", "D2", "crescent", "rect4x2"])
def test_resample_area_bound(name):
    h = 0.05
    for reg in F.ALL[name]().regions:
        lp = resample_loop(reg.outer, h)
        assert abs(signed_area(lp) - signed_area(reg.outer)) <= 2 * h * reg.outer.perimeter


def test_normals_on_circle():
    t = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    circ = PolyLoop(np.column_stack([np.cos(t), np.sin(t)]))
    n = outward_normals(circ)
    ang = np.arccos(np.clip(np.einsum("ij,ij->i", n, circ.vertices), -1, 1))
    assert ang.max() < 1e-3


def test_normal_on_square_edge():
    lp = resample_loop(UNIT_SQUARE, 0.5)
    k = int(np.argmin(np.hypot(*(lp.vertices - [0.5, 0.0]).T)))
    assert np.allclose(outward_normals(lp)[k], [0, -1])


def test_normals_need_ccw():
    with pytest.raises(OrientationError):
        outward_normals(UNIT_SQUARE.reversed())


@pytest.mark.parametrize("name", ["E1", "D2", "rect4x2"])
def test_normals_point_outside_on_convex(name):
    cfg = F.ALL[name]()
    for reg in cfg.regions:
        lp = reg.outer
        q = lp.vertices + 4 * cfg.tol * outward_normals(lp)
        assert all(loc == Location.OUTSIDE for loc in classify_points(q, lp, tol=cfg.tol))


def test_point_in_region():
    disk = F.D2().regions[0].outer
    assert point_in_region((-3, 0), disk) == Location.INSIDE
    assert point_in_region((40, 0), disk) == Location.OUTSIDE
    assert point_in_region(disk.vertices[5], disk) == Location.BOUNDARY


def test_point_in_region_with_hole():
    outer = PolyLoop([[0, 0], [4, 0], [4, 4], [0, 4]])
    hole = PolyLoop([[1, 1], [1, 3], [3, 3], [3, 1]])
    assert point_in_region((2, 2), outer, [hole]) == Location.OUTSIDE
    assert point_in_region((0.5, 2), outer, [hole]) == Location.INSIDE


def test_is_simple():
    assert is_simple(UNIT_SQUARE)
    assert not is_simple(PolyLoop([[0, 0], [1, 1], [1, 0], [0, 1]]))
