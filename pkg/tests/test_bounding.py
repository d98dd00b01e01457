from types import SimpleNamespace

import numpy as np
import pytest

from medlink import fixtures as F
from medlink.bounding import BoundingSpec, apply_threshold, realize_bounding, transversality_check
from medlink.errors import ContainmentError, ParameterError
from medlink.geometry import PolyLoop, inside_loops
from medlink.linking import compute_external_axis, linking_flow, validate_structure

from conftest import SPACING, analysis, element_with_foot

H = SPACING


def test_box_margin():
    b = realize_bounding(F.D2(), BoundingSpec(margin=1.0), H)
    v = b.loop.vertices
    assert v.min(axis=0) == pytest.approx([-5.0, -2.0])
    assert v.max(axis=0) == pytest.approx([5.0, 2.0])
    assert b.loop.orientation > 0


def test_hull_contains_every_sample():
    cfg = F.D2()
    b = realize_bounding(cfg, BoundingSpec("hull"), H)
    assert b.inflation == pytest.approx(2 * H)
    pts = np.vstack([r.outer.vertices for r in cfg.regions])
    assert np.all(inside_loops(pts, [b.loop]))
    # stadium: flat top and bottom at y = 1 + inflation
    assert b.loop.vertices[:, 1].max() == pytest.approx(1 + 2 * H, abs=1e-9)


def test_intrinsic_must_contain():
    square = PolyLoop(np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]))
    with pytest.raises(ContainmentError):
        realize_bounding(F.D2(), BoundingSpec("intrinsic", polygon=square), H)
    big = PolyLoop(np.array([[-6.0, -3.0], [6.0, -3.0], [6.0, 3.0], [-6.0, 3.0]]))
    assert realize_bounding(F.D2(), BoundingSpec("intrinsic", polygon=big), H).variant == "intrinsic"


@pytest.mark.parametrize("kw", [
    {"variant": "sphere"},
    {"margin": 0.0},
    {"variant": "intrinsic"},
    {"threshold_mode": "relative", "tau": 1.0},
    {"threshold_mode": "absolute", "tau": -1.0},
])
def test_spec_rejects(kw):
    with pytest.raises(ParameterError):
        BoundingSpec(**kw)


def test_spec_round_trip():
    spec = BoundingSpec.from_dict({"variant": "convex_hull", "threshold": {"mode": "truncated", "tau": 2}})
    assert spec.variant == "hull"
    assert BoundingSpec.from_dict(spec.to_dict()) == spec


# -- thresholds -----------------------------------------------------------------

def test_truncated_threshold_is_pointwise_min():
    st = analysis("D2").structure
    cut = apply_threshold(st, 2.0, "truncated")
    for rid, e in st.ell.items():
        fin = np.isfinite(e)
        assert np.array_equal(cut.ell[rid][fin], np.minimum(e[fin], 2.0))
        assert np.array_equal(np.isfinite(cut.ell[rid]), fin)
    assert len(cut.records) == len(st.records)
    assert any(r.truncated for r in cut.records)


def test_truncated_flow_endpoint():
    an = analysis("D2")
    cut = apply_threshold(an.structure, 2.0, "truncated")
    k = element_with_foot(an.sheets["L"], (-2.0, 0.0), tol=H)
    assert cut.ell["L"][k] == 2.0
    assert linking_flow(cut, "L", k, 1.0) == pytest.approx([-1.0, 0.0], abs=3 * H)


def test_truncated_keeps_structure_valid():
    cut = apply_threshold(analysis("D2").structure, 2.0, "truncated")
    rep = validate_structure(cut)
    assert rep.checks["ell_ge_r"]["passed"]
    assert rep.checks["flow_non_crossing"]["passed"]


def test_absolute_threshold_drops_far_records():
    an = analysis("D2")
    st = an.structure
    cut = apply_threshold(st, 2.0, "absolute")
    far = [r for r in st.records if any(st.ell[q.region][q.element] > 2.0 for q in r.participants)]
    assert far
    assert set(cut.records) == set(st.records) - set(far)
    for rid in st.ell:
        assert np.array_equal(cut.ell[rid], st.ell[rid])
    k = element_with_foot(an.sheets["L"], (-2.0, 0.0), tol=H)
    assert not any(q.region == "L" and q.element == k for r in cut.records for q in r.participants)


def test_absolute_count_is_monotone():
    st = analysis("three_disks").structure
    counts = [len(apply_threshold(st, tau, "absolute").records) for tau in (10.0, 4.0, 3.0, 2.5, 2.0)]
    assert counts == sorted(counts, reverse=True)


@pytest.mark.parametrize("mode", ["absolute", "truncated"])
def test_large_tau_is_identity(mode):
    st = analysis("D2").structure
    cut = apply_threshold(st, 10.0, mode)
    assert cut.records == st.records
    for rid in st.ell:
        assert np.array_equal(cut.ell[rid], st.ell[rid])


def test_threshold_rejects_bad_tau():
    st = analysis("D2").structure
    with pytest.raises(ParameterError):
        apply_threshold(st, 0.0, "truncated")
    with pytest.raises(ParameterError):
        apply_threshold(st, 1.0, "sideways")


# -- transversality -----------------------------------------------------------

def test_d2_axis_crosses_box_at_right_angles():
    cfg = F.D2()
    b = realize_bounding(cfg, BoundingSpec(margin=1.0), H)
    axis = compute_external_axis(cfg, b, H, unbounded=True)
    rep = transversality_check(axis, b.loop)
    assert rep.passed
    assert len(rep.crossings) == 2
    for c in rep.crossings:
        assert c["angle_deg"] == pytest.approx(90.0, abs=1.0)
        assert abs(c["point"][0]) <= 2 * H


def test_grazing_edge_fails():
    box = PolyLoop(np.array([[-1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]]))
    axis = SimpleNamespace(positions=np.array([[-0.5, -0.005], [0.5, 0.005]]), edges=np.array([[0, 1]]))
    rep = transversality_check(axis, box)
    assert not rep.passed
    (bad,) = rep.failures()
    assert bad["angle_deg"] < 1.0
    assert bad["point"] == pytest.approx([0.0, 0.0], abs=1e-9)


def test_interior_axis_passes_vacuously():
    box = PolyLoop(np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]))
    axis = SimpleNamespace(positions=np.array([[-0.5, 0.0], [0.5, 0.0]]), edges=np.array([[0, 1]]))
    rep = transversality_check(axis, box)
    assert rep.passed and rep.crossings == []
