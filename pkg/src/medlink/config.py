"""Multi-region configurations: loading, validation and preprocessing."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .bounding import BoundingSpec
from .errors import MalformedLoopError, ParameterError, ValidationError
from .geometry import (
    REL_TOL,
    PolyLoop,
    diameter,
    inside_loops,
    is_simple,
    signed_area,
    turning_angles,
    distance_to_segments,
    loop_segments,
)

EXTERIOR_ID = "exterior"


@dataclass(frozen=True, eq=False)
class Region:
    id: str
    outer: PolyLoop
    holes: tuple = ()
    rigid: bool = False

    @property
    def loops(self) -> tuple:
        return (self.outer, *self.holes)

    @property
    def corner_indices(self) -> tuple:
        return self.outer.corners

    @property
    def area(self) -> float:
        return signed_area(self.outer) + sum(signed_area(h) for h in self.holes)


@dataclass(frozen=True)
class SharedSegment:
    """A boundary run common to two regions.

    Ranges are inclusive vertex-index runs taken forward along each loop;
    because the two loops traverse the run in opposite directions, vertex
    ``range_a[0]`` matches ``range_b[1]``.  ``closed`` marks a run covering a
    whole loop (then the ranges are ignored).
    """

    region_a: str
    region_b: str
    range_a: tuple
    range_b: tuple
    label: str = "P2"
    loop_a: int = 0
    loop_b: int = 0
    closed: bool = False

    def indices_a(self, n: int) -> np.ndarray:
        return _run(self.range_a, n, self.closed)

    def indices_b(self, n: int) -> np.ndarray:
        return _run(self.range_b, n, self.closed)

    def to_dict(self) -> dict:
        d = {"a": self.region_a, "b": self.region_b,
             "rangeA": list(self.range_a), "rangeB": list(self.range_b),
             "label": self.label}
        if self.loop_a or self.loop_b:
            d["loopA"], d["loopB"] = self.loop_a, self.loop_b
        if self.closed:
            d["closed"] = True
        return d


def _run(rng, n, closed):
    if closed:
        return np.arange(n)
    i0, i1 = rng
    length = (i1 - i0) % n + 1
    return (i0 + np.arange(length)) % n


@dataclass(frozen=True, eq=False)
class Configuration:
    regions: tuple
    shared: tuple = ()
    bounding: BoundingSpec = field(default_factory=BoundingSpec)
    tol_rel: float = REL_TOL

    @property
    def scale(self) -> float:
        return diameter(np.vstack([r.outer.vertices for r in self.regions]))

    @property
    def tol(self) -> float:
        return self.tol_rel * self.scale

    def region(self, rid: str) -> Region:
        for r in self.regions:
            if r.id == rid:
                return r
        raise KeyError(rid)

    @property
    def ids(self) -> list:
        return [r.id for r in self.regions]

    def replace(self, **kw) -> "Configuration":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        regions = []
        for r in self.regions:
            d = {"id": r.id, "outer": r.outer.vertices.tolist(),
                 "holes": [h.vertices.tolist() for h in r.holes],
                 "corners": list(r.outer.corners), "rigid": r.rigid}
            if any(h.corners for h in r.holes):
                d["hole_corners"] = [list(h.corners) for h in r.holes]
            regions.append(d)
        return {"regions": regions, "shared": [s.to_dict() for s in self.shared],
                "bounding": self.bounding.to_dict()}


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _parse_loop(raw, corners, rid, what) -> PolyLoop:
    try:
        pts = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"region {rid!r}: {what} is not a list of [x, y] pairs",
                              regions=[rid]) from exc
    if pts.ndim != 2 or pts.shape[1:] != (2,) or len(pts) < 3:
        raise ValidationError(f"region {rid!r}: {what} is an open or degenerate loop "
                              f"(need >= 3 [x, y] vertices)", regions=[rid])
    if not np.all(np.isfinite(pts)):
        raise ValidationError(f"region {rid!r}: {what} has non-finite coordinates", regions=[rid])
    try:
        return PolyLoop(pts, tuple(corners))
    except MalformedLoopError as exc:
        raise ValidationError(f"region {rid!r}: {exc}", regions=[rid]) from exc


def parse_configuration(doc: dict) -> Configuration:
    """Build a configuration from its JSON document without validating it."""
    if not isinstance(doc, dict) or "regions" not in doc:
        raise ValidationError("configuration must be an object with a 'regions' list")
    regions = []
    flipped = {}
    for i, rd in enumerate(doc["regions"]):
        rid = str(rd.get("id", f"R{i}"))
        if rid == EXTERIOR_ID:
            raise ValidationError(f"region id {EXTERIOR_ID!r} is reserved", regions=[rid])
        if rd.get("closed", True) is False:
            raise ValidationError(f"region {rid!r}: open loop (closed = false)", regions=[rid])
        outer = _parse_loop(rd.get("outer"), rd.get("corners", []), rid, "outer loop")
        hole_corners = rd.get("hole_corners") or [[] for _ in rd.get("holes", [])]
        holes = [_parse_loop(h, c, rid, f"hole {k}")
                 for k, (h, c) in enumerate(zip(rd.get("holes", []), hole_corners))]
        fl = [signed_area(outer) < 0] + [signed_area(h) > 0 for h in holes]
        flipped[rid] = [(f, len(lp)) for f, lp in zip(fl, [outer, *holes])]
        regions.append(Region(rid, outer.ccw(), tuple(h.cw() for h in holes),
                              bool(rd.get("rigid", False))))
    ids = [r.id for r in regions]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate region ids", regions=ids)
    shared = []
    for sd in doc.get("shared", []) or []:
        a, b = str(sd["a"]), str(sd["b"])
        if a not in flipped or (b not in flipped and b != EXTERIOR_ID):
            raise ValidationError(f"shared segment refers to unknown region {a!r}/{b!r}",
                                  regions=[a, b])
        la, lb = int(sd.get("loopA", 0)), int(sd.get("loopB", 0))
        ra = _remap_range(sd.get("rangeA", [0, 0]), *flipped[a][la])
        rb = _remap_range(sd.get("rangeB", [0, 0]), *flipped[b][lb]) if b in flipped else tuple(sd.get("rangeB", [0, 0]))
        shared.append(SharedSegment(a, b, ra, rb, sd.get("label", "P2"), la, lb,
                                    bool(sd.get("closed", False))))
    return Configuration(tuple(regions), tuple(shared), BoundingSpec.from_dict(doc.get("bounding")))


def _remap_range(rng, flipped, n):
    i0, i1 = int(rng[0]), int(rng[1])
    if not flipped:
        return (i0, i1)
    return (n - 1 - i1, n - 1 - i0)


def load_configuration(document, validate: bool = True, rewrite_nesting: bool = False) -> Configuration:
    """Load a configuration from a path, JSON string or already-parsed dict.

    Loops are normalized (outer counterclockwise, holes clockwise).  With
    ``rewrite_nesting`` nested regions are first rewritten into region
    complements; otherwise nesting is a validation error.
    """
    if isinstance(document, (str, Path)) and not str(document).lstrip().startswith("{"):
        with open(document, encoding="utf-8") as fh:
            doc = json.load(fh)
    elif isinstance(document, str):
        doc = json.loads(document)
    else:
        doc = document
    config = parse_configuration(doc)
    if rewrite_nesting:
        config = rewrite_containment(config)
    if validate:
        validate_configuration(config)
    return config


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _check_loop(loop: PolyLoop, rid: str, tol: float, what: str):
    v = loop.vertices
    gaps = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
    if np.any(gaps <= tol):
        k = int(np.argmin(gaps))
        raise ValidationError(f"region {rid!r}: {what} has coincident consecutive vertices",
                              regions=[rid], locations=[v[k]])
    if not is_simple(loop):
        a, b = loop.edges
        pairs = _kernels.proper_crossings(np.ascontiguousarray(a), np.ascontiguousarray(b), 0.0)
        locs = [a[i] for i, _ in pairs[:3]]
        raise ValidationError(f"region {rid!r}: {what} is self-intersecting",
                              regions=[rid], locations=locs)
    th = np.abs(turning_angles(loop))
    for c in loop.corners:
        if th[c] <= 1e-6 or th[c] >= math.pi - 1e-6:
            raise ValidationError(f"region {rid!r}: corner {c} of {what} has degenerate turning angle",
                                  regions=[rid], locations=[v[c]])


def _region_inside(points, region: Region) -> np.ndarray:
    return inside_loops(points, region.loops)


def _loops_cross(la, lb) -> np.ndarray:
    a1, b1 = loop_segments(la)
    a2, b2 = loop_segments(lb)
    a = np.ascontiguousarray(np.vstack([a1, a2]))
    b = np.ascontiguousarray(np.vstack([b1, b2]))
    pairs = _kernels.proper_crossings(a, b, 0.0)
    n = len(a1)
    mixed = (pairs[:, 0] < n) != (pairs[:, 1] < n)
    return a[pairs[mixed, 0]] if len(pairs) else np.empty((0, 2))


def _shared_mask(config: Configuration, rid: str, loop_index: int, n: int, other: str) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    for s in config.shared:
        if s.region_a == rid and s.region_b == other and s.loop_a == loop_index:
            m[s.indices_a(n)] = True
        elif s.region_b == rid and s.region_a == other and s.loop_b == loop_index:
            m[s.indices_b(n)] = True
    return m


def validate_configuration(config: Configuration) -> Configuration:
    tol = config.tol
    for r in config.regions:
        _check_loop(r.outer, r.id, tol, "outer loop")
        for k, h in enumerate(r.holes):
            _check_loop(h, r.id, tol, f"hole {k}")
            if not np.all(inside_loops(h.vertices, [r.outer])) or len(_loops_cross([h], [r.outer])):
                raise ValidationError(f"region {r.id!r}: hole {k} is not inside the outer loop",
                                      regions=[r.id], locations=h.vertices[:1])
            for k2 in range(k):
                if len(_loops_cross([h], [r.holes[k2]])) or np.any(inside_loops(h.vertices, [r.holes[k2]])):
                    raise ValidationError(f"region {r.id!r}: holes {k2} and {k} overlap", regions=[r.id])
    for s in config.shared:
        _check_shared(config, s, tol)
    regs = config.regions
    for i in range(len(regs)):
        for j in range(i + 1, len(regs)):
            _check_pair(config, regs[i], regs[j], tol)
    return config


def _check_shared(config, s: SharedSegment, tol):
    if s.region_b == EXTERIOR_ID:
        return
    la = config.region(s.region_a).loops[s.loop_a]
    lb = config.region(s.region_b).loops[s.loop_b]
    ia = s.indices_a(len(la))
    ib = s.indices_b(len(lb))[::-1]
    if s.closed and len(la) == len(lb):
        # closed runs may start anywhere; align by the first vertex
        k = int(np.argmin(np.hypot(*(lb.vertices - la.vertices[0]).T)))
        ib = (k - np.arange(len(lb))) % len(lb)
    if len(ia) != len(ib) or len(ia) < 2:
        raise ValidationError(f"shared segment {s.region_a}/{s.region_b}: ranges have different "
                              f"lengths ({len(ia)} vs {len(ib)})", regions=[s.region_a, s.region_b])
    d = np.hypot(*(la.vertices[ia] - lb.vertices[ib]).T)
    if np.any(d > max(tol, 1e-12)):
        k = int(np.argmax(d))
        raise ValidationError(f"shared segment {s.region_a}/{s.region_b}: runs do not coincide",
                              regions=[s.region_a, s.region_b], locations=[la.vertices[ia[k]]])


def _check_pair(config, ra: Region, rb: Region, tol):
    lo_a, hi_a = ra.outer.vertices.min(0), ra.outer.vertices.max(0)
    lo_b, hi_b = rb.outer.vertices.min(0), rb.outer.vertices.max(0)
    if np.any(lo_a > hi_b + tol) or np.any(lo_b > hi_a + tol):
        return
    # loops glued along a closed shared run coincide and are not crossings
    glued_a = {s.loop_a if s.region_a == ra.id else s.loop_b for s in config.shared
               if s.closed and {s.region_a, s.region_b} == {ra.id, rb.id}}
    glued_b = {s.loop_b if s.region_a == ra.id else s.loop_a for s in config.shared
               if s.closed and {s.region_a, s.region_b} == {ra.id, rb.id}}
    la = [lp for k, lp in enumerate(ra.loops) if k not in glued_a]
    lb = [lp for k, lp in enumerate(rb.loops) if k not in glued_b]
    cross = _loops_cross(la, lb) if la and lb else np.empty((0, 2))
    if len(cross):
        raise ValidationError(f"regions {ra.id!r} and {rb.id!r} have overlapping interiors",
                              regions=[ra.id, rb.id], locations=cross[:3])
    for x, y in ((ra, rb), (rb, ra)):
        sa, sb = loop_segments(y.loops)
        for li, lp in enumerate(x.loops):
            d, _ = distance_to_segments(lp.vertices, sa, sb)
            contact = d <= max(tol, 1e-12)
            allowed = _shared_mask(config, x.id, li, len(lp), y.id)
            bad = contact & ~allowed
            if np.any(bad):
                raise ValidationError(
                    f"regions {x.id!r} and {y.id!r} touch outside any declared shared segment",
                    regions=[x.id, y.id], locations=lp.vertices[bad][:3])
            inside = _region_inside(lp.vertices, y) & ~contact
            if np.any(inside):
                raise ValidationError(
                    f"regions {x.id!r} and {y.id!r} have overlapping interiors "
                    f"(nesting must be rewritten into a region complement first)",
                    regions=[x.id, y.id], locations=lp.vertices[inside][:3])


# ---------------------------------------------------------------------------
# shared boundaries
# ---------------------------------------------------------------------------

def detect_shared_boundaries(config: Configuration, tol: float | None = None) -> Configuration:
    """Find boundary runs common to two regions and record them as shared segments.

    Matching runs must coincide vertex by vertex (within ``tol``) and run in
    opposite directions.  Run endpoints are promoted to corners of the
    incident regions, except on the rigid side of a Q2 junction where that
    boundary passes smoothly through.
    """
    tol = config.tol if tol is None else tol
    tol = max(tol, 1e-12)
    found = []
    regs = list(config.regions)
    for i in range(len(regs)):
        for j in range(i + 1, len(regs)):
            found.extend(_match_pair(regs[i], regs[j], tol))
    corner_add: dict = {}
    shared = []
    for ra, rb, la, lb, run_a, run_b, closed in found:
        A, B = config.region(ra), config.region(rb)
        label = _junction_label(A, B, la, lb, run_a, run_b, closed)
        seg = SharedSegment(ra, rb, (int(run_a[0]), int(run_a[-1])),
                            (int(run_b[-1]), int(run_b[0])), label, la, lb, closed)
        shared.append(seg)
        if closed:
            continue
        for rid, li, ends, region in ((ra, la, (run_a[0], run_a[-1]), A), (rb, lb, (run_b[0], run_b[-1]), B)):
            if label == "Q2" and region.rigid:
                continue
            corner_add.setdefault((rid, li), set()).update(int(e) for e in ends)
    # keep declared segments that detection also found, add new ones
    new_regions = []
    for r in config.regions:
        loops = []
        for li, lp in enumerate(r.loops):
            extra = corner_add.get((r.id, li), set())
            loops.append(PolyLoop(lp.vertices, tuple(sorted(set(lp.corners) | extra))) if extra else lp)
        new_regions.append(dataclasses.replace(r, outer=loops[0], holes=tuple(loops[1:])))
    return config.replace(regions=tuple(new_regions), shared=tuple(shared))


def _match_pair(A: Region, B: Region, tol):
    out = []
    for la, lpa in enumerate(A.loops):
        for lb, lpb in enumerate(B.loops):
            tree = cKDTree(lpb.vertices)
            d, idx = tree.query(lpa.vertices)
            matched = d <= tol
            if not np.any(matched):
                continue
            n = len(lpa)
            mb = len(lpb)
            nb = np.where(matched, idx, -1)
            if np.all(matched):
                steps = (nb - np.roll(nb, -1)) % mb
                if np.all(steps == 1):
                    out.append((A.id, B.id, la, lb, np.arange(n), nb, True))
                    continue
            # links i -> i+1 when the B-partner steps backwards by one
            link = matched & np.roll(matched, -1) & (((nb - np.roll(nb, -1)) % mb) == 1)
            start_candidates = np.nonzero(~link)[0]
            if len(start_candidates) == 0:
                continue
            s0 = (start_candidates[0] + 1) % n
            order = (s0 + np.arange(n)) % n
            run = []
            for k in order:
                if matched[k]:
                    run.append(k)
                if not link[k]:
                    if len(run) >= 2:
                        ra = np.array(run)
                        out.append((A.id, B.id, la, lb, ra, nb[ra], False))
                    elif len(run) == 1:
                        raise ValidationError(
                            f"regions {A.id!r} and {B.id!r} touch at an isolated point",
                            regions=[A.id, B.id], locations=[lpa.vertices[run[0]]])
                    run = []
    return out


def _junction_label(A, B, la, lb, run_a, run_b, closed) -> str:
    if A.rigid == B.rigid:
        return "P2"
    rigid, run, li = (A, run_a, la) if A.rigid else (B, run_b, lb)
    if closed:
        return "Q2"
    th = np.abs(turning_angles(rigid.loops[li]))
    ends = [run[0], run[-1]]
    return "Q2" if all(th[e] <= 1e-6 for e in ends) else "P2"


# ---------------------------------------------------------------------------
# corner smoothing
# ---------------------------------------------------------------------------

def smooth_corners(region: Region, radius: float, spacing: float | None = None) -> Region:
    """Replace every flagged corner by a sampled circular fillet of the given radius.

    Fillet samples are spaced at most ``spacing`` apart along the arc
    (default ``radius / 16``, close enough that the fillet area is within
    0.3% of the circular one).  The result carries no corner flags.
    """
    if radius == 0:
        return region
    if not radius > 0:
        raise ParameterError(f"fillet radius must be positive, got {radius}")
    spacing = radius / 16.0 if spacing is None else spacing
    if not spacing > 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    loops = [_fillet_loop(lp, radius, spacing, region.id, k) for k, lp in enumerate(region.loops)]
    return dataclasses.replace(region, outer=loops[0], holes=tuple(loops[1:]))


def _fillet_loop(loop: PolyLoop, eps, spacing, rid, loop_index) -> PolyLoop:
    if not loop.corners:
        return loop
    v = loop.vertices
    n = len(v)
    th = turning_angles(loop)
    corners = set(loop.corners)
    edge_len = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
    out = []
    for k in range(n):
        if k not in corners:
            out.append(v[k])
            continue
        p, q = v[k - 1], v[(k + 1) % n]
        d1 = (v[k] - p) / edge_len[k - 1]
        d2 = (q - v[k]) / edge_len[k]
        t = eps * math.tan(abs(th[k]) / 2.0)
        if t >= 0.5 * min(edge_len[k - 1], edge_len[k]):
            raise ParameterError(
                f"fillet radius {eps} too large for corner {k} of region {rid!r} loop {loop_index} "
                f"at {tuple(np.round(v[k], 6))}")
        sgn = 1.0 if th[k] > 0 else -1.0
        p1 = v[k] - d1 * t
        normal = sgn * np.array([-d1[1], d1[0]])
        c = p1 + eps * normal
        sweep = abs(th[k])
        m = max(1, int(math.ceil(eps * sweep / spacing - 1e-12)))
        start = p1 - c
        for s in range(m + 1):
            a = sgn * sweep * s / m
            ca, sa = math.cos(a), math.sin(a)
            out.append(c + np.array([ca * start[0] - sa * start[1], sa * start[0] + ca * start[1]]))
    return PolyLoop(np.array(out))


# ---------------------------------------------------------------------------
# containment rewriting
# ---------------------------------------------------------------------------

def rewrite_containment(config: Configuration) -> Configuration:
    """Rewrite nested regions so that each container becomes a region complement.

    A region strictly inside another gets the inner outline punched out of
    its container as a hole; the two then share that closed loop.  Nesting is
    resolved one depth level per pass.
    """
    regions = list(config.regions)
    shared = list(config.shared)
    tol = max(config.tol, 1e-12)
    while True:
        linked = {frozenset((sh.region_a, sh.region_b)) for sh in shared if sh.closed}
        parent = _direct_parents(regions, tol, linked)
        if not parent:
            break
        # innermost children first is not required; each pass handles one level
        depth = {}
        for rid in parent:
            d, cur = 0, rid
            while cur in parent:
                cur = parent[cur]
                d += 1
            depth[rid] = d
        level = min(depth.values())
        by_id = {r.id: r for r in regions}
        for child, par in sorted(parent.items()):
            if depth[child] != level:
                continue
            c = by_id[child]
            p = by_id[par]
            hole = c.outer.cw()
            p = dataclasses.replace(p, holes=(*p.holes, hole))
            by_id[par] = p
            n = len(c.outer)
            shared.append(SharedSegment(child, par, (0, n - 1), (0, n - 1), "P2",
                                        0, len(p.holes), True))
        regions = [by_id[r.id] for r in regions]
    return config.replace(regions=tuple(regions), shared=tuple(shared))


def _direct_parents(regions, tol, linked=frozenset()) -> dict:
    contains = {}
    for a in regions:
        for b in regions:
            if a is b or frozenset((a.id, b.id)) in linked:
                continue
            cross = _loops_cross([a.outer], list(b.loops))
            if len(cross):
                raise ValidationError(f"regions {a.id!r} and {b.id!r} partially overlap",
                                      regions=[a.id, b.id], locations=cross[:3])
            sa, sb = loop_segments(b.loops)
            d, _ = distance_to_segments(a.outer.vertices, sa, sb)
            inside = _region_inside(a.outer.vertices, b)
            strict = inside & (d > tol)
            if np.any(strict):
                if not np.all(inside | (d <= tol)):
                    raise ValidationError(f"regions {a.id!r} and {b.id!r} partially overlap",
                                          regions=[a.id, b.id])
                contains.setdefault(a.id, []).append(b)
    parent = {}
    for child, cands in contains.items():
        parent[child] = min(cands, key=lambda r: abs(signed_area(r.outer))).id
    return parent


__all__ = [
    "EXTERIOR_ID",
    "Region",
    "SharedSegment",
    "Configuration",
    "parse_configuration",
    "load_configuration",
    "validate_configuration",
    "detect_shared_boundaries",
    "smooth_corners",
    "rewrite_containment",
]
