import json
import math

import numpy as np
import pytest

from medlink import fixtures as F
from medlink.config import (
    EXTERIOR_ID,
    detect_shared_boundaries,
    load_configuration,
    rewrite_containment,
    smooth_corners,
)
from medlink.errors import ParameterError, ValidationError
from medlink.geometry import signed_area, turning_angles


def test_d2_loads():
    cfg = load_configuration(F.D2().to_dict())
    assert cfg.ids == ["L", "R"]
    assert cfg.shared == ()
    assert detect_shared_boundaries(cfg).shared == ()


def test_orientation_normalized():
    doc = F.D2().to_dict()
    doc["regions"][0]["outer"] = doc["regions"][0]["outer"][::-1]
    cfg = load_configuration(doc)
    assert signed_area(cfg.regions[0].outer) > 0


def test_round_trip_through_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(F.crescent().to_dict()))
    cfg = load_configuration(path)
    assert np.allclose(cfg.regions[0].outer.vertices, F.crescent().regions[0].outer.vertices)


def test_undeclared_contact_names_both_regions():
    with pytest.raises(ValidationError) as exc:
        load_configuration(F.abutting_squares(declare=False))
    assert set(exc.value.regions) == {"A", "B"}


def test_open_loop_rejected():
    doc = F.D2().to_dict()
    doc["regions"][1]["closed"] = False
    with pytest.raises(ValidationError) as exc:
        load_configuration(doc)
    assert list(exc.value.regions) == ["R"]


def test_self_intersecting_loop_rejected():
    doc = {"regions": [{"id": "bow", "outer": [[0, 0], [1, 1], [1, 0], [0, 1]]}]}
    with pytest.raises(ValidationError):
        load_configuration(doc)


def test_overlap_rejected():
    doc = {"regions": [{"id": "a", "outer": F.ngon(1.0, (0, 0)).tolist()},
                       {"id": "b", "outer": F.ngon(1.0, (1.5, 0)).tolist()}]}
    with pytest.raises(ValidationError):
        load_configuration(doc)


def test_hole_outside_outer_rejected():
    doc = {"regions": [{"id": "a", "outer": F.rectangle(2, 2).tolist(),
                        "holes": [F.rectangle(0.5, 0.5, (5, 5)).tolist()]}]}
    with pytest.raises(ValidationError):
        load_configuration(doc)


def test_reserved_id():
    doc = {"regions": [{"id": EXTERIOR_ID, "outer": F.rectangle(1, 1).tolist()}]}
    with pytest.raises(ValidationError):
        load_configuration(doc)


def test_abutting_squares_shared_p2():
    cfg = detect_shared_boundaries(load_configuration(F.abutting_squares()))
    assert len(cfg.shared) == 1
    s = cfg.shared[0]
    assert s.label == "P2"
    a = cfg.region(s.region_a).outer
    ends = a.vertices[list(s.range_a)]
    assert sorted(map(tuple, np.round(ends, 9))) == [(1.0, 0.0), (1.0, 1.0)]
    assert set(s.range_a) <= set(a.corners)


def test_rigid_neighbour_gives_q2():
    cfg = detect_shared_boundaries(load_configuration(F.flexible_on_rigid()))
    assert cfg.shared[0].label == "Q2"


def test_rigid_square_with_corners_stays_p2():
    # the rigid side turns at both junction points, so it is not smooth there
    cfg = detect_shared_boundaries(load_configuration(F.abutting_squares(rigid_right=True)))
    assert cfg.shared[0].label == "P2"


def test_fillet_area_loss():
    eps = 0.1
    sq = F.square().regions[0]
    sm = smooth_corners(sq, eps, spacing=0.002)
    loss = signed_area(sq.outer) - signed_area(sm.outer)
    assert loss == pytest.approx(4 * (1 - math.pi / 4) * eps ** 2, rel=1e-3)
    assert sm.outer.corners == ()


def test_fillet_turning_bound():
    eps, h = 0.1, 0.01
    sm = smooth_corners(F.square().regions[0], eps, spacing=h)
    assert np.abs(turning_angles(sm.outer)).max() <= h / eps + 1e-9


def test_fillet_zero_and_too_large():
    sq = F.square().regions[0]
    assert smooth_corners(sq, 0.0) is sq
    with pytest.raises(ParameterError, match="corner"):
        smooth_corners(sq, 0.6)


def test_fillet_stays_inside():
    from medlink.geometry import inside_loops
    sq = F.square().regions[0]
    sm = smooth_corners(sq, 0.1, spacing=0.01)
    centroid = sm.outer.vertices.mean(axis=0)
    pulled = centroid + (sm.outer.vertices - centroid) * (1 - 1e-9)
    assert inside_loops(pulled, [sq.outer]).all()


def _disk(rid, r, n=128):
    return {"id": rid, "outer": F.ngon(r, n=n).tolist()}


def test_containment_rewrite_annulus():
    doc = {"regions": [_disk("inner", 1.0), _disk("outer", 2.0)]}
    cfg = rewrite_containment(load_configuration(doc, validate=False))
    outer = cfg.region("outer")
    assert len(outer.holes) == 1
    assert len(cfg.shared) == 1 and cfg.shared[0].closed
    area = sum(r.area for r in cfg.regions)
    assert area == pytest.approx(signed_area(F.ngon(2.0, n=128)), rel=1e-12)


def test_containment_three_levels():
    doc = {"regions": [_disk("a", 1.0), _disk("b", 2.0), _disk("c", 3.0)]}
    cfg = load_configuration(doc, rewrite_nesting=True)
    assert len(cfg.regions) == 3
    assert len(cfg.shared) == 2


def test_no_containment_unchanged():
    cfg = F.D2()
    assert rewrite_containment(cfg).regions == cfg.regions
