"""External axis, linking functions, link records and their classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import NotLinkedError, ParameterError, UndefinedLinkingError
from .geometry import PolyLoop, loop_segments, unit
from .medial import (
    BOUND_ID,
    DoubleSheet,
    MedialParams,
    SkeletalGraph,
    StratumLabel,
    build_samples,
    label_mask,
    skeletonize,
)

EXTERNAL_ID = "__exterior__"


class LinkType2D(str, enum.Enum):
    I = "i"
    II = "ii"
    III = "iii"
    IV = "iv"
    V = "v"
    NONGENERIC = "nongeneric"

    @property
    def signature(self) -> str:
        return _SIGNATURES.get(self, "")


_SIGNATURES = {
    LinkType2D.I: "(A1_2 : A1_2, A1_2)",
    LinkType2D.II: "(A1_2 : A3, A1_2)",
    LinkType2D.III: "(A1_2 : A1_3, A1_2)",
    LinkType2D.IV: "(A1_3 : A1_2, A1_2, A1_2)",
    LinkType2D.V: "(A3 : A1_2)",
}

_TYPE_TABLE = {
    ("A1_2", ("A1_2", "A1_2")): LinkType2D.I,
    ("A1_2", ("A1_2", "A3")): LinkType2D.II,
    ("A1_2", ("A1_2", "A1_3")): LinkType2D.III,
    ("A1_3", ("A1_2", "A1_2", "A1_2")): LinkType2D.IV,
    ("A3", ("A1_2",)): LinkType2D.V,
}


def link_type_of(m0_label: str, participant_labels) -> LinkType2D:
    key = (str(m0_label), tuple(sorted(str(p) for p in participant_labels)))
    return _TYPE_TABLE.get(key, LinkType2D.NONGENERIC)


@dataclass(frozen=True)
class LinkType3D:
    numeral: str
    name: str
    dimension: int
    description: str
    group: str


_G1 = "A1^2 linking"
_G2 = "A1^3, A1^4 and A1A3 linking"
_G3 = "pure self-linking"

LINK_TYPES_3D = (
    LinkType3D("i", "(A1^2 : A1^2, A1^2)", 2, "between 2 smooth points", _G1),
    LinkType3D("ii", "(A1^2 : A1^3, A1^2)", 1, "between a smooth point and a Y-junction point", _G1),
    LinkType3D("iii", "(A1^2 : A3, A1^2)", 1, "between a smooth point and an edge point", _G1),
    LinkType3D("iv", "(A1^2 : A3A1, A1^2)", 0, "between a fin point and a smooth point", _G1),
    LinkType3D("v", "(A1^2 : A1A3, A1^2)", 0,
               "between a smooth point associated to a fin point and another smooth point", _G1),
    LinkType3D("vi", "(A1^2 : A1^4, A1^2)", 0, "between a smooth point and a 6-junction point", _G1),
    LinkType3D("vii", "(A1^2 : A1^3, A1^3)", 0, "between 2 Y-junction points", _G1),
    LinkType3D("viii", "(A1^2 : A3, A3)", 0, "between 2 edge points", _G1),
    LinkType3D("ix", "(A1^2 : A1^3, A3)", 0, "between a Y-junction point and an edge point", _G1),
    LinkType3D("x", "(A1^3 : A1^2, A1^2, A1^2)", 1, "between 3 smooth points", _G2),
    LinkType3D("xi", "(A1^3 : A1^3, A1^2, A1^2)", 0, "between 2 smooth points and a Y-junction point", _G2),
    LinkType3D("xii", "(A1^3 : A3, A1^2, A1^2)", 0, "between 2 smooth points and an edge point", _G2),
    LinkType3D("xiii", "(A1^4 : A1^2, A1^2, A1^2, A1^2)", 0, "between 4 smooth points", _G2),
    LinkType3D("xiv", "(A1A3 : A1^2, A1^2)", 0, "A1A3 linking between 2 smooth points", _G2),
    LinkType3D("xv", "(A3 : A1^2)", 1, "edge-type self-linking with a smooth point", _G3),
    LinkType3D("xvi", "(A3 : A1^3)", 0, "edge-type self-linking with a Y-junction point", _G3),
    LinkType3D("xvii", "(A3 : A3)", 0, "edge-type self-linking with an edge point", _G3),
)


@dataclass(frozen=True)
class Participant:
    region: str
    element: int
    label: str
    strat_distance: float = math.inf


@dataclass(frozen=True)
class LinkRecord:
    participants: tuple
    u0: tuple
    m0_label: str
    link_type: LinkType2D = LinkType2D.NONGENERIC
    kind: str = "mutual"
    truncated: bool = False
    diagnostics: dict | None = None

    @property
    def regions(self) -> tuple:
        return tuple(p.region for p in self.participants)


def record_kind(regions) -> str:
    """``self`` if one region, ``partial`` if some (not all) repeat among 3+, else ``mutual``."""
    regions = list(regions)
    distinct = len(set(regions))
    if distinct == 1:
        return "self"
    if len(regions) >= 3 and distinct < len(regions):
        return "partial"
    return "mutual"


@dataclass(frozen=True)
class LinkingParams:
    spacing: float
    theta_prune: float = math.radians(20.0)
    cluster_factor: float = 3.0
    strat_factor: float = 2.0
    foot_factor: float = 2.0
    support_tol: float | None = None
    truncate_infinite: bool = False

    def __post_init__(self):
        if not self.spacing > 0:
            raise ParameterError("spacing must be positive")

    @property
    def cluster_tol(self) -> float:
        return self.cluster_factor * self.spacing

    @property
    def delta_strat(self) -> float:
        return self.strat_factor * self.spacing

    @property
    def foot_tol(self) -> float:
        return self.foot_factor * self.spacing

    @property
    def support(self) -> float:
        return self.support_tol if self.support_tol is not None else self.spacing / 4


@dataclass(frozen=True, eq=False)
class LinkingStructure:
    """Per-region linking data over the doubles plus the external axis.

    ``ell`` is ``inf`` on elements flagged as unlinked at infinity;
    ``ell_bounded`` holds their truncation at the bounding loop.
    ``hit_kind`` is one of ``linking``, ``bounding``, ``shared``,
    ``corner``, ``infinite`` or ``none``.
    """

    config: object
    sheets: dict
    external: SkeletalGraph
    edge_kind: np.ndarray
    ell: dict
    ell_bounded: dict
    hit_kind: dict
    infinite: dict
    unique: dict
    records: tuple
    strata: dict
    b_infinity: dict
    bounding: object
    params: LinkingParams
    discrepancies: tuple = ()
    threshold: dict | None = None

    def endpoint(self, region: str, k: int) -> np.ndarray:
        sh = self.sheets[region]
        return sh.x[k] + self.ell[region][k] * sh.u[k]

    def w_points(self, region: str) -> np.ndarray:
        sh = self.sheets[region]
        ell = self.ell[region]
        m = np.isfinite(ell)
        return sh.x[m] + ell[m, None] * sh.u[m]

    def stratum(self, region: str, key: str) -> np.ndarray:
        return np.nonzero(self.strata[region] == key)[0]

    def type_counts(self) -> dict:
        out = {t.value: 0 for t in LinkType2D}
        for rec in self.records:
            out[rec.link_type.value] += 1
        return out

    def kind_counts(self) -> dict:
        out = {"mutual": 0, "self": 0, "partial": 0}
        for rec in self.records:
            out[rec.kind] += 1
        return out


# ---------------------------------------------------------------------------
# external axis
# ---------------------------------------------------------------------------

def _exterior_domain(config, bounding_loop):
    loops, owners, masks = [], [], []
    if bounding_loop is not None:
        loops.append(bounding_loop.ccw())
        owners.append(BOUND_ID)
        masks.append(None)
    for reg in config.regions:
        for li, lp in enumerate(reg.loops):
            m = np.zeros(len(lp), dtype=bool)
            for s in config.shared:
                if s.region_b not in config.ids:
                    continue
                if s.region_a == reg.id and s.loop_a == li:
                    m[s.indices_a(len(lp))] = True
                if s.region_b == reg.id and s.loop_b == li:
                    m[s.indices_b(len(lp))] = True
            loops.append(lp.reversed())
            owners.append(reg.id)
            masks.append(m[::-1])
    return loops, owners, masks


def compute_external_axis(config, bounding=None, spacing: float = 0.02,
                          theta_prune: float = math.radians(20.0), unbounded: bool = False,
                          clip=None) -> SkeletalGraph:
    """Medial axis of the exterior region, inside ``bounding`` (a realized bounding region).

    With ``unbounded`` the bounding loop is left out of the boundary and
    the skeleton of the plain complement is clipped to ``clip`` (default
    the bounding loop's box grown by half its diameter, so arcs run past the
    loop); this is the axis used for transversality checks.
    """
    from .bounding import realize_bounding

    if bounding is None:
        bounding = realize_bounding(config, None, spacing)
    loop = bounding.loop if hasattr(bounding, "loop") else bounding
    params = MedialParams(spacing=spacing, theta_prune=theta_prune)
    tol = config.tol
    if unbounded:
        loops, owners, masks = _exterior_domain(config, None)
        samples = build_samples(loops, owners, spacing, masks, params.corner_window, exclude_shared=True)
        if clip is None:
            v = loop.vertices
            grow = 0.5 * float(np.hypot(*np.ptp(v, axis=0)))
            lo, hi = v.min(axis=0) - grow, v.max(axis=0) + grow
            clip = PolyLoop(np.array([lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]))
        return skeletonize(samples, loops, params, EXTERNAL_ID, tol, invert=True, clip=clip)
    from .bounding import check_contains

    check_contains(config, loop)
    loops, owners, masks = _exterior_domain(config, loop)
    samples = build_samples(loops, owners, spacing, masks, params.corner_window, exclude_shared=True)
    return skeletonize(samples, loops, params, EXTERNAL_ID, tol)


def node_owners(g: SkeletalGraph) -> list:
    return [set(g.samples.owner[f].tolist()) for f in g.feet]


def classify_external_edges(g: SkeletalGraph) -> np.ndarray:
    """Per-edge kind: ``linking`` (all feet on regions), ``bounding`` (region and bounding
    loop) or ``artificial`` (only the bounding loop)."""
    owners = node_owners(g)

    def node_kind(i):
        o = owners[i]
        if o == {BOUND_ID}:
            return "artificial"
        return "bounding" if BOUND_ID in o else "linking"

    kinds = np.empty(len(g.edges), dtype=object)
    edge_index = {}
    for k, (a, b) in enumerate(g.edges):
        edge_index[(int(a), int(b))] = k
        edge_index[(int(b), int(a))] = k
    rank = {"linking": 0, "bounding": 1, "artificial": 2}
    for arc in g.arcs:
        inner = arc[1:-1] if len(arc) > 2 else arc
        votes = [node_kind(i) for i in inner]
        kind = max(set(votes), key=lambda v: (votes.count(v), -rank[v]))
        for a, b in zip(arc[:-1], arc[1:]):
            kinds[edge_index[(int(a), int(b))]] = kind
    for k in range(len(kinds)):
        if kinds[k] is None:
            a, b = g.edges[k]
            kinds[k] = max(node_kind(a), node_kind(b), key=rank.get)
    return kinds


# ---------------------------------------------------------------------------
# unlinked strata
# ---------------------------------------------------------------------------

def _support_points(config) -> np.ndarray:
    return np.vstack([r.outer.vertices for r in config.regions])


def support_test(config, feet: np.ndarray, u: np.ndarray, tol: float, far: float):
    """Supporting-line test for feet ``b`` with directions ``u``.

    Returns ``(flag, unique)``: ``flag`` iff ``q . u <= b . u + tol`` for every
    boundary vertex ``q``; ``unique`` iff no vertex farther than ``far`` from
    ``b`` comes within ``tol`` of the maximum.
    """
    q = _support_points(config)
    n = len(feet)
    flag = np.zeros(n, dtype=bool)
    uniq = np.zeros(n, dtype=bool)
    step = max(1, 4_000_000 // max(1, len(q)))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        uu = u[lo:hi]
        hq = uu @ q.T
        hb = np.einsum("ij,ij->i", feet[lo:hi], uu)
        top = hq.max(axis=1)
        flag[lo:hi] = top <= hb + tol
        d = np.hypot(q[None, :, 0] - feet[lo:hi, None, 0], q[None, :, 1] - feet[lo:hi, None, 1])
        rival = (hq >= hb[:, None] - tol) & (d > far)
        uniq[lo:hi] = ~rival.any(axis=1)
    return flag, uniq


def _b_infinity_arcs(samples, flagged: np.ndarray) -> list:
    """Runs of flagged boundary samples along each loop, as sample indices."""
    s = samples
    arcs = []
    for lp in range(len(s.loop_len)):
        n = int(s.loop_len[lp])
        start = int(s.loop_start[lp])
        on = flagged[start:start + n]
        if not on.any():
            continue
        if on.all():
            arcs.append({"loop": lp, "indices": np.arange(n) + start, "closed": True})
            continue
        # rotate so the loop starts on an unflagged sample, then split runs
        r0 = int(np.argmin(on))
        order = (np.arange(n) + r0) % n
        f = on[order]
        edges = np.flatnonzero(np.diff(np.concatenate([[0], f.astype(np.int8), [0]])))
        for a, b in zip(edges[::2], edges[1::2]):
            arcs.append({"loop": lp, "indices": order[a:b] + start, "closed": False})
    return arcs


def b_infinity_endpoints(structure: LinkingStructure, region: str | None = None) -> np.ndarray:
    pts = []
    for rid, arcs in structure.b_infinity.items():
        if region is not None and rid != region:
            continue
        s = structure.sheets[rid].graph.samples
        for arc in arcs:
            if not arc["closed"]:
                pts.append(s.points[arc["indices"][0]])
                pts.append(s.points[arc["indices"][-1]])
    return np.array(pts).reshape(-1, 2)


def compute_M_infinity(config, sheets: dict, spacing: float, support_tol: float | None = None):
    """Flag sheet elements whose foot lies on a supporting line of the configuration.

    Returns ``(flags, unique, arcs)`` keyed by region id.
    """
    tol = support_tol if support_tol is not None else spacing / 4
    flags, uniq, arcs = {}, {}, {}
    for rid, sh in sheets.items():
        u = sh.u
        f, q = support_test(config, sh.foot, u, tol, far=10.0 * spacing)
        flags[rid] = f
        uniq[rid] = f & q
        # arcs are resolved on the boundary samples with their own normals
        smp = sh.graph.samples
        fs, _ = support_test(config, smp.points, smp.normals, tol, far=10.0 * spacing)
        arcs[rid] = _b_infinity_arcs(smp, fs)
    return flags, uniq, arcs


# ---------------------------------------------------------------------------
# linking functions
# ---------------------------------------------------------------------------

def _m0_segments(g: SkeletalGraph, mask=None):
    e = g.edges if mask is None else g.edges[mask]
    a = np.ascontiguousarray(g.positions[e[:, 0]], dtype=float).reshape(-1, 2)
    b = np.ascontiguousarray(g.positions[e[:, 1]], dtype=float).reshape(-1, 2)
    return a, b


def _cast(sheet: DoubleSheet, seg_a, seg_b, s_min):
    if len(seg_a) == 0:
        return np.full(len(sheet), np.inf), np.full(len(sheet), -1)
    return _kernels.ray_hits(np.ascontiguousarray(sheet.foot, dtype=float),
                             np.ascontiguousarray(sheet.u, dtype=float), seg_a, seg_b, s_min)


def compute_linking(config, sheets: dict, external: SkeletalGraph, bounding, spacing: float,
                    theta_prune: float = math.radians(20.0), **kw) -> LinkingStructure:
    """Linking values by casting each element's normal ray from its foot onto the external axis."""
    params = LinkingParams(spacing=spacing, theta_prune=theta_prune, **kw)
    edge_kind = classify_external_edges(external)
    seg_a, seg_b = _m0_segments(external)
    box_a, box_b = loop_segments([bounding.loop])
    s_min = 1e-6 * config.scale
    flags, uniq, arcs = compute_M_infinity(config, sheets, spacing, params.support)
    owners = node_owners(external)
    ends = np.array([i for i in external.nodes_with(StratumLabel.A3) if BOUND_ID not in owners[i]],
                    dtype=int)
    # exterior axis arcs that end on a region corner (reflex for the region)
    tips = external.positions[[i for i in external.nodes_with(StratumLabel.CORNER_CONTACT)
                               if BOUND_ID not in owners[i]]].reshape(-1, 2)
    ell, ell_b, hit_kind, discrepancies = {}, {}, {}, []
    for rid, sh in sheets.items():
        s_hit, k_hit = _cast(sh, seg_a, seg_b, s_min)
        kind = np.where(k_hit >= 0, edge_kind[np.maximum(k_hit, 0)] if len(edge_kind) else "none", "none").astype(object)
        if len(ends):
            # a ray grazing an axis end point counts as hitting it
            d = external.positions[ends][None, :, :] - sh.foot[:, None, :]
            sp = np.einsum("ijk,ik->ij", d, sh.u)
            perp = np.abs(d[..., 0] * sh.u[:, None, 1] - d[..., 1] * sh.u[:, None, 0])
            ok = (perp <= spacing) & (sp > s_min) & (sp + 2 * spacing < s_hit[:, None])
            sp = np.where(ok, sp, np.inf)
            j = np.argmin(sp, axis=1)
            best = sp[np.arange(len(sh)), j]
            better = np.isfinite(best)
            s_hit = np.where(better, best, s_hit)
            kind[better] = "linking"
        if len(tips):
            # feet on such a corner meet the axis at the corner itself
            d, _ = cKDTree(tips).query(sh.foot)
            at_tip = d <= max(config.tol, s_min)
            s_hit = np.where(at_tip, 0.0, s_hit)
            kind[at_tip] = "corner"
        e = sh.r + s_hit
        s_box, _ = _cast(sh, box_a, box_b, s_min)
        shared = sh.graph.samples.shared[sh.foot_index]
        e[shared] = sh.r[shared]
        kind[shared] = "shared"
        inf = flags[rid] & ~shared
        for k in np.nonzero(inf & (kind == "linking"))[0]:
            discrepancies.append({"region": rid, "element": int(k), "kind": "supporting_but_linked"})
        for k in np.nonzero(~inf & np.isin(kind, ["bounding", "artificial"]))[0]:
            discrepancies.append({"region": rid, "element": int(k), "kind": "bounding_hit_first"})
        for k in np.nonzero(~inf & (kind == "none"))[0]:
            discrepancies.append({"region": rid, "element": int(k), "kind": "no_hit"})
        e[inf] = np.inf
        kind[inf] = "infinite"
        bad = ~inf & (kind == "none")
        e[bad] = np.inf
        ell[rid] = e
        ell_b[rid] = np.where(np.isfinite(e), e, sh.r + s_box)
        hit_kind[rid] = kind
    structure = LinkingStructure(
        config=config, sheets=dict(sheets), external=external, edge_kind=edge_kind, ell=ell,
        ell_bounded=ell_b, hit_kind=hit_kind, infinite=flags, unique=uniq, records=(),
        strata={}, b_infinity=arcs, bounding=bounding, params=params,
        discrepancies=tuple(discrepancies),
    )
    records = build_records(structure)
    return classify_links(replace(structure, records=records))


def _vertex_distance(sheet: DoubleSheet, k: int, label) -> float:
    """Distance in the double from element ``k`` to the elements of ``label`` vertices.

    Both the axis point and the foot must be close, so the fan of elements
    around an end point does not inherit the end-point label.
    """
    g = sheet.graph
    nodes = g.nodes_with(label)
    if len(nodes) == 0:
        return math.inf
    el = np.nonzero(np.isin(sheet.node, nodes))[0]
    dx = np.hypot(*(sheet.x[el] - sheet.x[k]).T)
    db = np.hypot(*(sheet.foot[el] - sheet.foot[k]).T)
    return float(np.min(np.maximum(dx, db)))


def _participant(structure: LinkingStructure, rid: str, k: int) -> Participant:
    sh = structure.sheets[rid]
    if sh.label[k] == StratumLabel.CORNER_CONTACT:
        return Participant(rid, int(k), "CORNER", 0.0)
    d = {lab: _vertex_distance(sh, k, lab) for lab in (StratumLabel.A1_3, StratumLabel.A3)}
    lab = min(d, key=d.get)
    if d[lab] <= structure.params.delta_strat:
        return Participant(rid, int(k), lab.value, d[lab])
    return Participant(rid, int(k), "A1_2", d[lab])


def build_records(structure: LinkingStructure) -> tuple:
    """Group linked elements into records: Y points, end points, then greedy pairs.

    Each element joins at most one record, so correspondences are one-to-one.
    """
    p = structure.params
    ext = structure.external
    owners = node_owners(ext)
    hits, avail = {}, {}
    for rid, sh in structure.sheets.items():
        e = structure.ell[rid]
        ok = np.isin(structure.hit_kind[rid], ["linking", "shared"]) & np.isfinite(e)
        h = np.full((len(sh), 2), np.nan)
        h[ok] = sh.x[ok] + e[ok, None] * sh.u[ok]
        hits[rid] = h
        avail[rid] = ok.copy()
    records = []

    def pick(rid, foot_pt, u0):
        sh = structure.sheets[rid]
        m = avail[rid] & (np.hypot(*(sh.foot - foot_pt).T) <= p.foot_tol)
        d = np.hypot(*(hits[rid] - u0).T)
        m &= d <= p.cluster_tol
        if not m.any():
            return None
        return int(np.nonzero(m)[0][np.argmin(d[m])])

    samples = ext.samples
    for label in (StratumLabel.A1_3, StratumLabel.A3):
        for node in ext.nodes_with(label):
            if BOUND_ID in owners[node] or ext.radius[node] <= 0:
                continue
            u0 = ext.positions[node]
            chosen = []
            for f in ext.feet[node]:
                rid = samples.owner[f]
                k = pick(rid, samples.points[f], u0)
                if k is None:
                    break
                chosen.append((rid, k))
                avail[rid][k] = False
            want = 3 if label == StratumLabel.A1_3 else 1
            if len(chosen) != want or len(ext.feet[node]) != want:
                for rid, k in chosen:
                    avail[rid][k] = True
                continue
            parts = tuple(_participant(structure, rid, k) for rid, k in chosen)
            records.append(LinkRecord(parts, tuple(map(float, u0)), label.value))
    # remaining linked elements pair up across the axis
    rids, elems = [], []
    for rid in structure.sheets:
        idx = np.nonzero(avail[rid])[0]
        rids += [rid] * len(idx)
        elems += idx.tolist()
    if len(elems) >= 2:
        rids = np.array(rids, dtype=object)
        elems = np.array(elems)
        pts = np.vstack([hits[r][k] for r, k in zip(rids, elems)])
        uu = np.vstack([structure.sheets[r].u[k] for r, k in zip(rids, elems)])
        ss = np.array([structure.ell[r][k] - structure.sheets[r].r[k] for r, k in zip(rids, elems)])
        nodes = np.array([structure.sheets[r].node[k] for r, k in zip(rids, elems)])
        pairs = cKDTree(pts).query_pairs(p.cluster_tol, output_type="ndarray")
        if len(pairs):
            i, j = pairs[:, 0], pairs[:, 1]
            cosang = np.einsum("ij,ij->i", uu[i], uu[j])
            ok = cosang <= math.cos(p.theta_prune / 2)
            ok &= np.abs(ss[i] - ss[j]) <= 2 * p.spacing
            ok &= ~((rids[i] == rids[j]) & (nodes[i] == nodes[j]))
            i, j = i[ok], j[ok]
            dist = np.hypot(*(pts[i] - pts[j]).T)
            used = np.zeros(len(elems), dtype=bool)
            for k in np.argsort(dist, kind="stable"):
                a, b = i[k], j[k]
                if used[a] or used[b]:
                    continue
                used[a] = used[b] = True
                parts = (_participant(structure, rids[a], elems[a]),
                         _participant(structure, rids[b], elems[b]))
                u0 = 0.5 * (pts[a] + pts[b])
                records.append(LinkRecord(parts, tuple(map(float, u0)), StratumLabel.A1_2.value))
    return tuple(records)


def classify_links(structure: LinkingStructure, delta_strat: float | None = None) -> LinkingStructure:
    """Label records with their generic type and kind and rebuild the strata."""
    if delta_strat is not None:
        structure = replace(structure, params=replace(structure.params,
                                                      strat_factor=delta_strat / structure.params.spacing))
    out = []
    for rec in structure.records:
        parts = tuple(_participant(structure, q.region, q.element) for q in rec.participants)
        t = link_type_of(rec.m0_label, [q.label for q in parts])
        diag = None
        if t == LinkType2D.NONGENERIC:
            diag = {"m0_label": rec.m0_label,
                    "participants": [{"region": q.region, "label": q.label,
                                      "distance_to_stratum": q.strat_distance} for q in parts]}
        out.append(replace(rec, participants=parts, link_type=t,
                           kind=record_kind(q.region for q in parts), diagnostics=diag))
    strata = {}
    for rid, sh in structure.sheets.items():
        key = np.full(len(sh), "unlinked", dtype=object)
        key[~np.isfinite(structure.ell[rid]) & structure.infinite[rid]] = "inf"
        strata[rid] = key
    for rec in out:
        for q in rec.participants:
            strata[q.region][q.element] = rec.link_type.value
    return replace(structure, records=tuple(out), strata=strata)


def linking_correspondence(structure: LinkingStructure, stratum_a, stratum_b) -> dict:
    """Element-to-element map between two strata ``(region, key)`` through shared records."""
    ra, ka = stratum_a
    rb, kb = stratum_b
    for rid, key in (stratum_a, stratum_b):
        if key in ("inf", "unlinked"):
            raise NotLinkedError(f"stratum ({rid}, {key}) carries no linking")
    out = {}
    for rec in structure.records:
        if rec.link_type.value not in (ka, kb):
            continue
        for x in rec.participants:
            if x.region != ra or structure.strata[ra][x.element] != ka:
                continue
            for y in rec.participants:
                if y is x or y.region != rb or structure.strata[rb][y.element] != kb:
                    continue
                out.setdefault(x.element, y.element)
    if not out:
        raise NotLinkedError(f"strata ({ra}, {ka}) and ({rb}, {kb}) are not linked to each other")
    return out


def linking_flow(structure: LinkingStructure, region: str, element: int, t: float) -> np.ndarray:
    """Point of the linking flow at time ``t``: radial on [0, 1/2], then out to the axis."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"flow time must lie in [0, 1], got {t}")
    sh = structure.sheets[region]
    r = sh.r[element]
    if t <= 0.5:
        chi = 2.0 * t * r
    else:
        ell = structure.ell[region][element]
        if not np.isfinite(ell):
            if structure.params.truncate_infinite:
                ell = structure.ell_bounded[region][element]
            else:
                raise UndefinedLinkingError(
                    f"element {element} of {region!r} is unlinked; flow undefined for t > 1/2")
        chi = 2.0 * (1.0 - t) * r + (2.0 * t - 1.0) * ell
    return sh.x[element] + chi * sh.u[element]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class StructureReport:
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self):
        return {"passed": self.passed, "checks": self.checks}


def _check(name, witnesses, limit=20, **extra):
    return {"passed": not witnesses, "count": len(witnesses), "witnesses": witnesses[:limit], **extra}


def validate_structure(structure: LinkingStructure) -> StructureReport:
    p = structure.params
    h = p.spacing
    tol = structure.config.tol
    rep = StructureReport()
    # (a) linking value never below the radius
    wit = []
    for rid, sh in structure.sheets.items():
        e = structure.ell[rid]
        bad = np.isfinite(e) & (e < sh.r - tol)
        wit += [{"region": rid, "element": int(k), "ell": float(e[k]), "r": float(sh.r[k])}
                for k in np.nonzero(bad)[0]]
    rep.checks["ell_ge_r"] = _check("ell_ge_r", wit)
    # (b) flow segments of one region do not cross
    wit = []
    for rid, sh in structure.sheets.items():
        e = structure.ell[rid]
        m = np.isfinite(e) & (e > sh.r + 2 * h)
        a = np.ascontiguousarray(sh.foot[m])
        b = np.ascontiguousarray(sh.x[m] + e[m, None] * sh.u[m])
        idx = np.nonzero(m)[0]
        if len(a) > 1:
            for i, j in _kernels.proper_crossings(a, b, 2 * h):
                # segments within half a sample of each other coincide at sample resolution
                if max(np.hypot(*(a[i] - a[j])), np.hypot(*(b[i] - b[j]))) < h / 2:
                    continue
                wit.append({"region": rid, "elements": [int(idx[i]), int(idx[j])]})
    rep.checks["flow_non_crossing"] = _check("flow_non_crossing", wit)
    # (c) participants of a record meet at its axis point
    wit = []
    for n, rec in enumerate(structure.records):
        if rec.truncated:
            continue
        u0 = np.array(rec.u0)
        for q in rec.participants:
            d = float(np.hypot(*(structure.endpoint(q.region, q.element) - u0)))
            if not d <= p.cluster_tol:
                wit.append({"record": n, "region": q.region, "element": q.element, "distance": d})
    rep.checks["records_coincide"] = _check("records_coincide", wit)
    # (d) unlinked rays reach the bounding loop without meeting linking arcs
    wit = []
    mask = structure.edge_kind == "linking"
    la, lb = _m0_segments(structure.external, mask)
    for rid, sh in structure.sheets.items():
        inf = ~np.isfinite(structure.ell[rid])
        if not inf.any() or len(la) == 0:
            continue
        s, _ = _kernels.ray_hits(np.ascontiguousarray(sh.foot[inf]), np.ascontiguousarray(sh.u[inf]),
                                 la, lb, 1e-6 * structure.config.scale)
        reach = structure.ell_bounded[rid][inf] - sh.r[inf]
        for k, si, ri in zip(np.nonzero(inf)[0], s, reach):
            if si < ri - h:
                wit.append({"region": rid, "element": int(k), "hit_at": float(si)})
    rep.checks["unlinked_rays_clear"] = _check("unlinked_rays_clear", wit)
    # (e) equal exterior clearance on every record
    wit = []
    bound = 1e-6 * structure.config.scale + 2 * h
    worst = 0.0
    for n, rec in enumerate(structure.records):
        if rec.truncated:
            continue
        gap = [structure.ell[q.region][q.element] - structure.sheets[q.region].r[q.element]
               for q in rec.participants]
        res = float(max(gap) - min(gap))
        worst = max(worst, res)
        if not res <= bound:
            wit.append({"record": n, "residual": res})
    rep.checks["blum_identity"] = _check("blum_identity", wit, max_residual=worst, bound=bound)
    return rep


__all__ = [
    "EXTERNAL_ID",
    "LinkType2D",
    "LinkType3D",
    "LINK_TYPES_3D",
    "Participant",
    "LinkRecord",
    "LinkingParams",
    "LinkingStructure",
    "StructureReport",
    "link_type_of",
    "record_kind",
    "compute_external_axis",
    "classify_external_edges",
    "support_test",
    "compute_M_infinity",
    "b_infinity_endpoints",
    "compute_linking",
    "build_records",
    "classify_links",
    "linking_correspondence",
    "linking_flow",
    "validate_structure",
]
