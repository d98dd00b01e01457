import dataclasses

import numpy as np
import pytest

from medlink import fixtures as F
from medlink.config import load_configuration
from medlink.errors import NotLinkedError, ParameterError, UndefinedLinkingError
from medlink.linking import (
    LINK_TYPES_3D,
    LinkType2D,
    b_infinity_endpoints,
    link_type_of,
    linking_correspondence,
    linking_flow,
    record_kind,
    validate_structure,
)
from medlink.medial import StratumLabel
from medlink.pipeline import AnalysisOptions, run_analysis

from conftest import SPACING, analysis, element_with_foot

H = SPACING


def left_element(an):
    sh = an.sheets["L"]
    return element_with_foot(sh, (-2.0, 0.0), tol=H)


# -- type table --------------------------------------------------------------

def test_type_table():
    assert link_type_of("A1_2", ["A1_2", "A1_2"]) is LinkType2D.I
    assert link_type_of("A1_2", ["A3", "A1_2"]) is LinkType2D.II
    assert link_type_of("A1_2", ["A1_2", "A1_3"]) is LinkType2D.III
    assert link_type_of("A1_3", ["A1_2"] * 3) is LinkType2D.IV
    assert link_type_of("A3", ["A1_2"]) is LinkType2D.V
    assert link_type_of("A3", ["A3"]) is LinkType2D.NONGENERIC
    assert link_type_of("A1_2", ["A3", "A3"]) is LinkType2D.NONGENERIC
    assert LinkType2D.IV.signature == "(A1_3 : A1_2, A1_2, A1_2)"


def test_record_kind():
    assert record_kind(["A", "A"]) == "self"
    assert record_kind(["A", "B"]) == "mutual"
    assert record_kind(["A", "B", "C"]) == "mutual"
    assert record_kind(["A", "A", "B"]) == "partial"


def test_three_dimensional_table():
    assert len(LINK_TYPES_3D) == 17
    assert [t.dimension for t in LINK_TYPES_3D] == [2, 1, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0]
    assert len({t.name for t in LINK_TYPES_3D}) == 17
    assert LINK_TYPES_3D[0].name == "(A1^2 : A1^2, A1^2)"
    assert LINK_TYPES_3D[-1].name == "(A3 : A3)"


# -- external axis -------------------------------------------------------------

def test_d2_external_axis_has_mirror_arc():
    an = analysis("D2")
    pts = an.external.dense_points()
    near = pts[np.abs(pts[:, 0]) <= 2 * H]
    assert len(near)
    assert near[:, 1].min() < -1.0 and near[:, 1].max() > 1.0


def test_three_disks_external_branch_point():
    an = analysis("three_disks")
    y = an.external.positions[an.external.nodes_with(StratumLabel.A1_3)]
    centroid = np.zeros(2)
    assert np.hypot(*(y - centroid).T).min() <= 3 * H


def test_ellipse_external_axis_reaches_box_corners():
    an = analysis("E1")
    ext = an.external
    corners = ext.positions[ext.nodes_with(StratumLabel.CORNER_CONTACT)]
    box = an.bounding.loop.vertices
    assert len(corners) == 4
    for c in box:
        assert np.hypot(*(corners - c).T).min() <= 1e-9


# -- linking values ---------------------------------------------------------

def test_d2_element_on_the_axis_line():
    an = analysis("D2")
    st = an.structure
    sh = an.sheets["L"]
    k = left_element(an)
    assert sh.x[k] == pytest.approx([-3.0, 0.0], abs=3 * H)
    assert sh.u[k] == pytest.approx([1.0, 0.0], abs=1e-6)
    assert sh.r[k] == pytest.approx(1.0, abs=2 * H)
    assert st.ell["L"][k] == pytest.approx(3.0, abs=3 * H)
    rec = next(r for r in st.records if any(q.region == "L" and q.element == k for q in r.participants))
    other = next(q for q in rec.participants if q.region == "R")
    assert an.sheets["R"].x[other.element] == pytest.approx([3.0, 0.0], abs=3 * H)
    assert an.sheets["R"].u[other.element] == pytest.approx([-1.0, 0.0], abs=1e-6)


def test_linking_flow_values():
    an = analysis("D2")
    k = left_element(an)
    expect = {0.0: (-3, 0), 0.5: (-2, 0), 0.75: (-1, 0), 1.0: (0, 0)}
    for t, p in expect.items():
        assert linking_flow(an.structure, "L", k, t) == pytest.approx(p, abs=3 * H)
    gap = linking_flow(an.structure, "L", k, 0.5 - 1e-12) - linking_flow(an.structure, "L", k, 0.5 + 1e-12)
    assert np.hypot(*gap) < 1e-9
    with pytest.raises(ParameterError):
        linking_flow(an.structure, "L", k, 1.2)


def test_flow_continuity_bound():
    an = analysis("D2")
    st = an.structure
    sh = an.sheets["L"]
    delta = 1e-3
    for k in np.nonzero(np.isfinite(st.ell["L"]))[0][::7]:
        jump = np.hypot(*(linking_flow(st, "L", k, 0.5 - delta) - linking_flow(st, "L", k, 0.5 + delta)))
        assert jump <= 2 * delta * (sh.r[k] + st.ell["L"][k]) + 1e-12


def test_unlinked_flow_is_undefined_past_half():
    an = analysis("E1")
    st = an.structure
    k = 0
    assert np.isinf(st.ell["E1"][k])
    linking_flow(st, "E1", k, 0.5)
    with pytest.raises(UndefinedLinkingError):
        linking_flow(st, "E1", k, 0.8)


def test_truncated_infinite_flow():
    an = run_analysis(F.E1(), AnalysisOptions(spacing=H, truncate_infinite=True))
    st = an.structure
    p = linking_flow(st, "E1", 0, 1.0)
    box = an.bounding.loop.vertices
    lo, hi = box.min(0), box.max(0)
    on_edge = np.min(np.abs(np.concatenate([p - lo, p - hi])))
    assert on_edge <= 2 * H


@pytest.mark.parametrize("name", ["D2", "three_disks", "crescent", "five_types"])
def test_endpoints_lie_on_external_axis(name):
    an = analysis(name)
    st = an.structure
    dense = an.external.dense_points()
    from scipy.spatial import cKDTree
    tree = cKDTree(dense)
    for rid, sh in an.sheets.items():
        w = st.w_points(rid)
        if len(w):
            d, _ = tree.query(w)
            assert d.max() <= 2 * H, rid
        e = st.ell[rid]
        fin = np.isfinite(e)
        assert np.all(e[fin] >= sh.r[fin] - an.config.tol)


@pytest.mark.parametrize("name", ["D2", "three_disks", "crescent", "five_types"])
def test_blum_identity_on_records(name):
    an = analysis(name)
    st = an.structure
    bound = 1e-6 * an.config.scale + 2 * H
    for rec in st.records:
        gaps = [st.ell[q.region][q.element] - an.sheets[q.region].r[q.element] for q in rec.participants]
        assert max(gaps) - min(gaps) <= bound


# -- types ----------------------------------------------------------------------

def test_d2_records_are_mutual_type_i():
    st = analysis("D2").structure
    assert len(st.records) > 0
    assert all(r.link_type is LinkType2D.I and r.kind == "mutual" for r in st.records)


def test_three_disks_have_a_centroid_record():
    st = analysis("three_disks").structure
    iv = [r for r in st.records if r.link_type is LinkType2D.IV]
    assert len(iv) == 1
    assert np.hypot(*iv[0].u0) <= 3 * H
    assert sorted(iv[0].regions) == ["D0", "D1", "D2"]


def test_crescent_self_links_at_an_endpoint():
    st = analysis("crescent").structure
    v = [r for r in st.records if r.link_type is LinkType2D.V]
    assert len(v) >= 1
    assert all(r.kind == "self" for r in st.records)
    assert v[0].m0_label == "A3"


def test_five_type_coverage():
    st = analysis("five_types").structure
    counts = st.type_counts()
    for t in ("i", "ii", "iii", "iv", "v"):
        assert counts[t] >= 1, t
    assert counts["nongeneric"] == 0
    for r in st.records:
        if r.kind == "partial":
            assert r.link_type is LinkType2D.IV


def test_kinds_partition_records():
    st = analysis("five_types").structure
    assert sum(st.kind_counts().values()) == len(st.records)


# -- correspondence -------------------------------------------------------------

def test_correspondence_mirrors_positions():
    an = analysis("D2")
    st = an.structure
    mu = linking_correspondence(st, ("L", "i"), ("R", "i"))
    back = linking_correspondence(st, ("R", "i"), ("L", "i"))
    xl, xr = an.sheets["L"].x, an.sheets["R"].x
    for a, b in mu.items():
        assert xr[b] * [-1, 1] == pytest.approx(xl[a], abs=3 * H)
        assert back[b] == a
    assert len(set(mu.values())) == len(mu)


def test_correspondence_rejects_unlinked_strata():
    st = analysis("D2").structure
    with pytest.raises(NotLinkedError):
        linking_correspondence(st, ("L", "inf"), ("R", "i"))


# -- unlinked strata ----------------------------------------------------------

def test_convex_region_is_entirely_unlinked():
    st = analysis("E1").structure
    assert np.all(st.infinite["E1"])
    assert len(st.records) == 0
    assert set(st.strata["E1"]) == {"inf"}


def test_d2_b_infinity_endpoints():
    st = analysis("D2").structure
    ends = b_infinity_endpoints(st, "L")
    assert len(ends) == 2
    for target in ((-3.0, 1.0), (-3.0, -1.0)):
        assert np.hypot(*(ends - target).T).min() <= 2 * H
    # the flagged feet are exactly those on the far side
    sh = st.sheets["L"]
    flagged = st.infinite["L"]
    cos = sh.foot[:, 0] + 3.0
    assert np.all(cos[flagged] <= 2 * H)
    assert np.all(cos[~flagged] >= -2 * H)


def test_support_flags_match_brute_force():
    an = analysis("crescent")
    st = an.structure
    sh = an.sheets["crescent"]
    q = np.vstack([lp.vertices for r in an.config.regions for lp in r.loops])
    brute = (sh.u @ q.T).max(axis=1) <= np.einsum("ij,ij->i", sh.foot, sh.u) + st.params.support
    assert np.array_equal(brute, st.infinite["crescent"])
    linked = [q.element for r in st.records for q in r.participants]
    assert not np.any(st.infinite["crescent"][linked])


# -- shared boundaries ----------------------------------------------------------

def test_shared_edge_links_at_radius():
    cfg = load_configuration(F.abutting_squares())
    an = run_analysis(cfg, AnalysisOptions(spacing=H))
    st = an.structure
    seen = 0
    for rid, sh in an.sheets.items():
        m = st.hit_kind[rid] == "shared"
        seen += int(m.sum())
        assert np.array_equal(st.ell[rid][m], sh.r[m])
        assert np.all(np.abs(sh.foot[m, 0] - 1.0) <= 1e-9)
    assert seen > 0
    assert an.validation.passed


# -- validation -----------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(F.ALL))
def test_all_fixtures_validate(name):
    assert analysis(name).validation.passed


def _tamper(st, region, **arrays):
    """Copy of ``st`` with per-region arrays replaced."""
    out = {}
    for key, val in arrays.items():
        d = dict(getattr(st, key))
        d[region] = val
        out[key] = d
    return dataclasses.replace(st, **out)


def test_tamper_ell_below_radius():
    an = analysis("D2")
    st = an.structure
    k = left_element(an)
    ell = st.ell["L"].copy()
    ell[k] = an.sheets["L"].r[k] / 2
    rep = validate_structure(_tamper(st, "L", ell=ell))
    chk = rep.checks["ell_ge_r"]
    assert not chk["passed"]
    assert chk["witnesses"][0] == {"region": "L", "element": k, "ell": ell[k], "r": an.sheets["L"].r[k]}


def test_tamper_inconsistent_record():
    an = analysis("D2")
    st = an.structure
    k = left_element(an)
    ell = st.ell["L"].copy()
    ell[k] += 0.5
    rep = validate_structure(_tamper(st, "L", ell=ell))
    assert not rep.checks["records_coincide"]["passed"]
    assert not rep.checks["blum_identity"]["passed"]
    assert any(w["element"] == k for w in rep.checks["records_coincide"]["witnesses"])


def test_tamper_crossing_flow():
    an = analysis("D2")
    st = an.structure
    sh = an.sheets["L"]
    i = left_element(an)
    j = element_with_foot(sh, sh.foot[i] + [-0.05, 0.3], tol=0.1)
    assert np.isfinite(st.ell["L"][j]) and j != i
    # aim j's ray through the middle of i's flow segment
    mid = 0.5 * (sh.foot[i] + st.endpoint("L", i))
    target = 2 * mid - sh.foot[j]
    u = sh.u.copy()
    x = sh.x.copy()
    u[j] = (target - sh.foot[j]) / np.hypot(*(target - sh.foot[j]))
    x[j] = sh.foot[j] - sh.r[j] * u[j]
    ell = st.ell["L"].copy()
    ell[j] = sh.r[j] + np.hypot(*(target - sh.foot[j]))
    sheets = dict(st.sheets)
    sheets["L"] = dataclasses.replace(sh, u=u, x=x)
    bad = dataclasses.replace(_tamper(st, "L", ell=ell), sheets=sheets)
    chk = validate_structure(bad).checks["flow_non_crossing"]
    assert not chk["passed"]
    assert any(sorted(w["elements"]) == sorted([i, j]) for w in chk["witnesses"])


def test_tamper_unlinked_ray_through_axis():
    an = analysis("D2")
    st = an.structure
    sh = an.sheets["L"]
    k = element_with_foot(sh, (-3.0, 1.0), tol=H)
    assert np.isinf(st.ell["L"][k])
    u = sh.u.copy()
    x = sh.x.copy()
    u[k] = np.array([3.0, 1.0]) / np.hypot(3.0, 1.0)
    x[k] = sh.foot[k] - sh.r[k] * u[k]
    reach = st.ell_bounded["L"].copy()
    reach[k] = sh.r[k] + 100.0
    sheets = dict(st.sheets)
    sheets["L"] = dataclasses.replace(sh, u=u, x=x)
    bad = dataclasses.replace(_tamper(st, "L", ell_bounded=reach), sheets=sheets)
    chk = validate_structure(bad).checks["unlinked_rays_clear"]
    assert not chk["passed"]
    assert chk["witnesses"][0]["element"] == k
