import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from medlink import fixtures as F
from medlink.errors import ParameterError, ResourceError
from medlink.geometry import point_in_region
from medlink.oracle import (
    compare_structures,
    distance_transform,
    linking_oracle,
    match_link_records,
    medial_axis_oracle,
)

from conftest import analysis

HG = 0.01


@pytest.fixture(scope="module")
def disk_grid():
    return distance_transform(F.disk(), HG, extent=(-1.5, -1.5, 3.5, 1.5))


@pytest.fixture(scope="module")
def ellipse_grid():
    return distance_transform(F.E1(), HG, extent=(-2.2, -1.2, 2.2, 1.2))


def test_disk_values(disk_grid):
    assert disk_grid.value_at((0.0, 0.0)) == pytest.approx(-1.0, abs=0.02)
    assert disk_grid.value_at((3.0, 0.0)) == pytest.approx(2.0, abs=0.02)


def test_grid_is_lipschitz(disk_grid):
    v = disk_grid.values
    bound = disk_grid.hg * (1 + 1e-9) + 2 * disk_grid.hg
    assert np.abs(np.diff(v, axis=0)).max() <= bound
    assert np.abs(np.diff(v, axis=1)).max() <= bound
    assert np.abs(v[1:, 1:] - v[:-1, :-1]).max() <= math.sqrt(2) * disk_grid.hg + 2 * disk_grid.hg


def test_sign_matches_point_in_region(ellipse_grid):
    reg = F.E1().regions[0]
    c = ellipse_grid.centers().reshape(-1, 2)
    rng = np.random.default_rng(1)
    pick = rng.choice(len(c), 400, replace=False)
    vals = ellipse_grid.values.reshape(-1)[pick]
    for p, val in zip(c[pick], vals):
        if abs(val) > 1e-9:
            assert (val < 0) == (point_in_region(p, reg.outer) == "inside")


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-1.4, 3.4), y=st.floats(-1.4, 1.4))
def test_value_is_distance_to_the_circle(disk_grid, x, y):
    row, col = disk_grid.cell_of((x, y))
    c = disk_grid.centers()[row, col]
    # the 256-gon sits within 1e-4 of the unit circle
    assert abs(disk_grid.values[row, col] - (np.hypot(*c) - 1.0)) <= 1e-4


def test_resource_cap():
    with pytest.raises(ResourceError) as exc:
        distance_transform(F.D2(), 0.001, cell_cap=1000)
    assert exc.value.suggested_spacing > 0.001


def test_rejects_bad_cell_size():
    with pytest.raises(ParameterError):
        distance_transform(F.D2(), 0.0)


# -- ridges ---------------------------------------------------------------------

def test_ellipse_ridge_is_the_segment(ellipse_grid):
    o = medial_axis_oracle(ellipse_grid)
    ts = np.linspace(-1.5, 1.5, 301)
    seg = np.column_stack([ts, np.zeros_like(ts)])
    rep = compare_structures(o, seg)
    assert rep.comparable
    assert rep.hausdorff <= 3 * HG


def test_disk_ridge_at_centre(disk_grid):
    o = medial_axis_oracle(disk_grid)
    assert len(o)
    assert np.hypot(*o.T).max() <= 4 * HG


def test_ridge_monotone_in_threshold(ellipse_grid):
    wide = {tuple(p) for p in medial_axis_oracle(ellipse_grid, math.radians(20)).round(9)}
    narrow = {tuple(p) for p in medial_axis_oracle(ellipse_grid, math.radians(170)).round(9)}
    assert narrow and narrow <= wide


# -- linking ------------------------------------------------------------------

@pytest.fixture(scope="module")
def d2_links():
    return linking_oracle(F.D2(), HG)


def test_d2_witnesses_straddle_the_mirror(d2_links):
    assert len(d2_links)
    assert np.all(np.sign(d2_links.w_a[:, 0]) != np.sign(d2_links.w_b[:, 0]))
    k = int(np.argmin(np.hypot(*d2_links.cells.T)))
    assert np.hypot(*d2_links.cells[k]) <= 2 * HG
    assert d2_links.clearance[k] == pytest.approx(2.0, abs=2 * HG)
    a, b, cell, clearance = d2_links.tuples()[k]
    assert clearance == d2_links.clearance[k]


def test_convex_region_has_no_oracle_links():
    assert len(linking_oracle(F.E1(), HG)) == 0


def test_records_match_oracle(d2_links):
    an = analysis("D2")
    res = match_link_records(an.structure, d2_links, 3 * HG + 3 * 0.02)
    assert len(res) == len(an.structure.records)
    assert all(ok for ok, _ in res)


# -- comparisons ----------------------------------------------------------------

def test_compare_identical_and_shifted():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (50, 2))
    assert compare_structures(pts, pts).hausdorff == 0.0
    rep = compare_structures(pts, pts + [0.25, 0.0])
    assert rep.hausdorff == pytest.approx(0.25)
    assert rep.n_computed == rep.n_oracle == 50


def test_compare_empty():
    rep = compare_structures(np.empty((0, 2)), np.zeros((3, 2)))
    assert not rep.comparable
    assert math.isnan(rep.hausdorff)
    assert "empty" in rep.note


def test_compare_accepts_graphs():
    g = analysis("E1").axes["E1"]
    rep = compare_structures(g, g.positions)
    assert rep.comparable and rep.oracle_to_computed == 0.0
