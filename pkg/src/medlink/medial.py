"""Blum medial axes from Voronoi skeletons of boundary samples.

The same machinery serves a single region and the exterior of a whole
configuration: a *domain* is a set of loops oriented with the domain on
their left, and :func:`skeletonize` returns the pruned, simplified and
labelled interior Voronoi skeleton of its boundary samples.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np
from networkx.utils import UnionFind
from scipy.spatial import Voronoi, cKDTree

from . import _kernels
from .errors import ConsistencyError, ParameterError, ResolutionError
from .geometry import PolyLoop, loop_segments, resample_loop, tangents, turning_angles, unit

BOUND_ID = "__bounding__"


class StratumLabel(str, enum.Enum):
    A1_2 = "A1_2"
    A1_3 = "A1_3"
    A3 = "A3"
    CORNER_CONTACT = "CORNER_CONTACT"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class MedialParams:
    spacing: float
    theta_prune: float = math.radians(20.0)
    cluster_factor: float = 4.0
    corner_window: float = 2.0
    corner_search: float = 8.0
    far_gap: int = 10

    def __post_init__(self):
        if not self.spacing > 0:
            raise ParameterError(f"spacing must be positive, got {self.spacing}")
        if not 0 < self.theta_prune < math.pi:
            raise ParameterError(f"theta_prune must lie in (0, pi), got {self.theta_prune}")

    @property
    def cluster_tol(self) -> float:
        return self.cluster_factor * self.spacing


# ---------------------------------------------------------------------------
# boundary samples of a domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundarySamples:
    """Resampled domain boundary.

    All per-sample arrays have one row per sample.  ``normals`` point out of
    the domain; ``owner`` is the region id the sample belongs to (or
    :data:`BOUND_ID` for the bounding loop); ``generator`` marks the samples
    fed to the Voronoi diagram.
    """

    points: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    owner: np.ndarray
    loop: np.ndarray
    index: np.ndarray
    corner: np.ndarray
    convex_corner: np.ndarray
    shared: np.ndarray
    generator: np.ndarray
    loop_start: np.ndarray
    loop_len: np.ndarray
    loops: tuple

    def __len__(self):
        return len(self.points)

    def index_gap(self, i, j):
        """Cyclic sample distance along the boundary (inf across loops)."""
        i = np.asarray(i)
        j = np.asarray(j)
        n = self.loop_len[self.loop[i]]
        d = np.abs(self.index[i] - self.index[j])
        d = np.minimum(d, n - d)
        return np.where(self.loop[i] == self.loop[j], d, np.inf)

    def global_index(self, loop_id, idx):
        return self.loop_start[loop_id] + np.mod(idx, self.loop_len[loop_id])

    @property
    def segments(self):
        return loop_segments(self.loops)


def build_samples(loops, owners, spacing, shared_masks=None, corner_window=2.0,
                  exclude_shared=False) -> BoundarySamples:
    """Resample domain loops (domain on the left of each) into :class:`BoundarySamples`.

    ``shared_masks`` gives, per input loop, a boolean mask over its vertices
    flagging vertices on shared runs; the flag is carried to the samples
    that lie on edges between two flagged vertices.
    """
    pts, nor, tan, own, lid, idx, cor, cvx, shr = ([] for _ in range(9))
    starts, lens, res_loops = [], [], []
    total = 0
    for k, (lp, owner) in enumerate(zip(loops, owners)):
        rl = resample_loop(lp, spacing)
        v = rl.vertices
        n = len(v)
        # map every original vertex to its resampled index to carry shared flags
        flags = np.zeros(n, dtype=bool)
        if shared_masks is not None and shared_masks[k] is not None:
            m = shared_masks[k]
            orig = _resample_positions(lp, spacing)
            for i in range(len(lp)):
                j = (i + 1) % len(lp)
                if m[i]:
                    flags[orig[i]] = True
                if m[i] and m[j]:
                    stop = orig[j] if orig[j] > orig[i] else n
                    flags[orig[i]:stop] = True
                    if m[j]:
                        flags[orig[j] % n] = True
        ta = turning_angles(rl)
        cm = rl.corner_mask()
        d = np.roll(v, -1, axis=0) - v
        en = np.column_stack([d[:, 1], -d[:, 0]])
        en /= np.hypot(*en.T)[:, None]
        vn = en + np.roll(en, 1, axis=0)
        vn = unit(vn)
        pts.append(v)
        nor.append(vn)
        tan.append(tangents(v))
        own.append(np.full(n, owner, dtype=object))
        lid.append(np.full(n, k))
        idx.append(np.arange(n))
        cor.append(cm)
        cvx.append(cm & (ta > 1e-9))
        shr.append(flags)
        starts.append(total)
        lens.append(n)
        res_loops.append(rl)
        total += n
    points = np.vstack(pts)
    convex = np.concatenate(cvx)
    shared = np.concatenate(shr)
    loop_arr = np.concatenate(lid)
    index_arr = np.concatenate(idx)
    gen = np.ones(len(points), dtype=bool)
    if np.any(convex):
        cpts = points[convex]
        tree = cKDTree(cpts)
        near = tree.query_ball_point(points, corner_window * spacing)
        close = np.array([len(x) > 0 for x in near])
        gen &= ~close | np.concatenate(cor)
        gen[convex] = False
    if exclude_shared and np.any(shared):
        # keep the run endpoints, which still bound the domain
        prev_s = np.zeros_like(shared)
        next_s = np.zeros_like(shared)
        for s0, n in zip(starts, lens):
            seg = shared[s0:s0 + n]
            prev_s[s0:s0 + n] = np.roll(seg, 1)
            next_s[s0:s0 + n] = np.roll(seg, -1)
        gen &= ~(shared & prev_s & next_s)
    return BoundarySamples(
        points=points, normals=np.vstack(nor), tangents=np.vstack(tan),
        owner=np.concatenate(own), loop=loop_arr, index=index_arr,
        corner=np.concatenate(cor), convex_corner=convex, shared=shared, generator=gen,
        loop_start=np.array(starts), loop_len=np.array(lens), loops=tuple(res_loops),
    )


def _resample_positions(loop: PolyLoop, spacing) -> np.ndarray:
    a, b = loop.edges
    pieces = np.maximum(1, np.ceil(np.hypot(*(b - a).T) / spacing - 1e-12).astype(int))
    return np.concatenate([[0], np.cumsum(pieces)[:-1]])


# ---------------------------------------------------------------------------
# skeletal graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SkeletalGraph:
    """Embedded medial graph with radial data.

    ``feet[i]`` holds one representative boundary-sample index per foot
    cluster of node ``i``; ``raw_feet[i]`` holds every equidistant sample.
    ``arcs`` are node-index chains between nodes of degree other than two.
    """

    region_id: str
    samples: BoundarySamples
    positions: np.ndarray
    radius: np.ndarray
    edges: np.ndarray
    feet: tuple
    raw_feet: tuple
    labels: np.ndarray
    arcs: tuple
    params: MedialParams
    diagnostics: tuple = ()

    @property
    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=len(self.positions)) if len(self.edges) else np.zeros(len(self.positions), dtype=int)

    def nodes_with(self, label) -> np.ndarray:
        return np.nonzero(label_mask(self.labels, label))[0]

    def label_counts(self) -> dict:
        return {lab.value: int(np.sum(label_mask(self.labels, lab))) for lab in StratumLabel}

    def dense_points(self, step: float | None = None) -> np.ndarray:
        """Nodes plus points interpolated along edges at most ``step`` apart."""
        step = step or self.params.spacing / 2
        out = [self.positions]
        for a, b in self.edges:
            pa, pb = self.positions[a], self.positions[b]
            k = int(np.ceil(np.hypot(*(pb - pa)) / step))
            if k > 1:
                t = np.arange(1, k)[:, None] / k
                out.append(pa + t * (pb - pa))
        return np.vstack(out)

    def neighbors(self) -> list:
        adj = [[] for _ in range(len(self.positions))]
        for a, b in self.edges:
            adj[a].append(int(b))
            adj[b].append(int(a))
        return adj


def label_mask(labels, *wanted) -> np.ndarray:
    """Boolean mask of ``labels`` equal to any of ``wanted`` (object arrays of enums)."""
    want = {StratumLabel(w) for w in wanted}
    return np.fromiter((lab in want for lab in labels), dtype=bool, count=len(labels))


def _angle_at(v, p, q):
    a = p - v
    b = q - v
    na = np.hypot(*a.T)
    nb = np.hypot(*b.T)
    c = np.einsum("ij,ij->i", a, b) / np.maximum(na * nb, 1e-300)
    return np.arccos(np.clip(c, -1.0, 1.0))


def _chains(adj, deg):
    """Split a graph into chains running between nodes of degree != 2."""
    seen = set()
    chains = []
    special = [v for v in adj if deg[v] != 2]
    for s in special:
        for nb in adj[s]:
            if (s, nb) in seen:
                continue
            path = [s, nb]
            prev, cur = s, nb
            while deg[cur] == 2:
                a, b = adj[cur]
                nxt = b if a == prev else a
                prev, cur = cur, nxt
                path.append(cur)
                if cur == s and deg[s] == 2:
                    break
            for u, w in zip(path[:-1], path[1:]):
                seen.add((u, w))
                seen.add((w, u))
            chains.append(path)
    # pure cycles
    for v in adj:
        if deg[v] == 2 and (v, adj[v][0]) not in seen:
            path = [v]
            prev, cur = v, adj[v][0]
            while cur != v:
                path.append(cur)
                a, b = adj[cur]
                nxt = b if a == prev else a
                prev, cur = cur, nxt
            path.append(v)
            for u, w in zip(path[:-1], path[1:]):
                seen.add((u, w))
                seen.add((w, u))
            chains.append(path)
    return chains


def _path_length(pos, path):
    p = pos[path]
    return float(np.sum(np.hypot(*np.diff(p, axis=0).T)))


def skeletonize(samples: BoundarySamples, domain_loops, params: MedialParams, region_id: str,
                tol: float, invert: bool = False, clip: PolyLoop | None = None) -> SkeletalGraph:
    """Pruned interior Voronoi skeleton of a domain's boundary samples.

    The domain is the even-odd interior of ``domain_loops`` (its complement
    when ``invert`` is set, for an unbounded exterior); ``clip`` optionally
    restricts the kept vertices to a polygon.
    """
    gen_idx = np.nonzero(samples.generator)[0]
    gen = samples.points[gen_idx]
    # drop coincident generators (shared-run endpoints appear on two loops)
    tree = cKDTree(gen)
    dup = tree.query_pairs(max(tol, 1e-12))
    if dup:
        drop = {max(i, j) for i, j in dup}
        keep = np.array([i for i in range(len(gen)) if i not in drop])
        gen_idx = gen_idx[keep]
        gen = gen[keep]
        tree = cKDTree(gen)
    if len(gen) < 4:
        raise ResolutionError(f"{region_id}: only {len(gen)} boundary samples", params.spacing / 2)
    vor = Voronoi(gen)
    V = vor.vertices
    seg_a, seg_b = loop_segments(domain_loops)
    inside = _kernels.crossing_parity(np.ascontiguousarray(V), seg_a, seg_b).astype(bool)
    if invert:
        inside = ~inside
    if clip is not None:
        ca, cb = loop_segments([clip])
        inside &= _kernels.crossing_parity(np.ascontiguousarray(V), ca, cb).astype(bool)
    dist_b, _ = _kernels.nearest_on_segments(np.ascontiguousarray(V), seg_a, seg_b)
    inside &= dist_b > max(tol, 1e-12)
    rp = np.asarray(vor.ridge_points)
    rv = np.asarray(vor.ridge_vertices)
    ok = np.all(rv >= 0, axis=1)
    ok[ok] &= inside[rv[ok, 0]] & inside[rv[ok, 1]]
    rp, rv = rp[ok], rv[ok]
    a0 = _angle_at(V[rv[:, 0]], gen[rp[:, 0]], gen[rp[:, 1]])
    a1 = _angle_at(V[rv[:, 1]], gen[rp[:, 0]], gen[rp[:, 1]])
    keep = np.minimum(a0, a1) >= params.theta_prune
    # bisectors of distant boundary pieces stay thin-angled far from both; keep them
    keep |= samples.index_gap(gen_idx[rp[:, 0]], gen_idx[rp[:, 1]]) >= params.far_gap
    rv = rv[keep]
    diagnostics = []
    if len(rv) == 0:
        # nothing survives pruning: fall back to the deepest interior vertex
        cand = np.nonzero(inside)[0]
        if len(cand) == 0:
            raise ResolutionError(f"{region_id}: no interior Voronoi vertices; sampling too coarse",
                                  params.spacing / 2)
        r_all, _ = tree.query(V[cand])
        best = cand[int(np.argmax(r_all))]
        node_pos = V[[best]]
        node_edges = np.empty((0, 2), dtype=int)
        members = [[best]]
    else:
        node_pos, node_edges, members = _simplify(V, rv, params.cluster_tol)
    r_nodes, _ = tree.query(node_pos)
    # feet: equidistant generators, plus all near-equidistant samples for clusters
    eps = 1e-7 * max(params.spacing, 1e-12)
    raw_feet = []
    sample_tree = cKDTree(samples.points)
    for i, p in enumerate(node_pos):
        ball = tree.query_ball_point(p, r_nodes[i] + eps)
        feet = set(gen_idx[ball].tolist())
        for m in members[i]:
            rm = float(np.hypot(*(V[m] - gen[tree.query(V[m])[1]])))
            feet.update(gen_idx[tree.query_ball_point(V[m], rm + eps)].tolist())
        raw_feet.append(np.array(sorted(feet), dtype=int))
    deg = np.bincount(node_edges.ravel(), minlength=len(node_pos)) if len(node_edges) else np.zeros(len(node_pos), dtype=int)
    node_pos, node_edges, r_nodes, raw_feet, deg = _drop_micro(node_pos, node_edges, r_nodes, raw_feet, deg,
                                                               params, region_id, diagnostics)
    # degenerate clusters see every sample within one spacing of their radius
    for i in range(len(node_pos)):
        if deg[i] == 0 or deg[i] >= 4:
            extra = sample_tree.query_ball_point(node_pos[i], r_nodes[i] + params.spacing)
            raw_feet[i] = np.array(sorted(set(raw_feet[i].tolist()) | set(extra)), dtype=int)
    graph = SkeletalGraph(
        region_id=region_id, samples=samples, positions=node_pos, radius=r_nodes,
        edges=node_edges, feet=(), raw_feet=tuple(raw_feet),
        labels=np.array([StratumLabel.A1_2] * len(node_pos), dtype=object), arcs=(),
        params=params, diagnostics=tuple(diagnostics),
    )
    graph = _attach_corners(graph, tol)
    return classify_medial_points(graph, tol)


def _simplify(V, rv, cluster_tol):
    """Collapse short chains between branch/end nodes into single cluster nodes."""
    adj: dict = {}
    for a, b in rv:
        a, b = int(a), int(b)
        if a == b:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    adj = {k: sorted(v) for k, v in adj.items()}
    deg = {k: len(v) for k, v in adj.items()}
    chains = _chains(adj, deg)
    dsu = UnionFind(list(adj))
    absorbed = set()
    long_chains = []
    short = [_path_length(V, path) < cluster_tol for path in chains]
    n_short: dict = {}
    for path, sh in zip(chains, short):
        if sh:
            for end in {path[0], path[-1]}:
                n_short[end] = n_short.get(end, 0) + 1

    def lone_spur(path):
        # a single short end branch at a clean Y is a genuine A3 arm, not clutter
        ends = [path[0], path[-1]]
        if sorted(deg[e] for e in ends) != [1, 3]:
            return False
        hub = ends[0] if deg[ends[0]] == 3 else ends[1]
        return n_short[hub] == 1

    for path, sh in zip(chains, short):
        if sh and not lone_spur(path):
            for u in path:
                dsu.union(path[0], u)
            absorbed.update(path)
        else:
            long_chains.append(path)
    # nodes: cluster representatives for absorbed/special nodes, then chain interiors
    new_id: dict = {}
    members: list = []
    pos: list = []

    def node_for(v):
        key = ("c", dsu[v]) if (v in absorbed or deg[v] != 2) else ("n", v)
        if key not in new_id:
            new_id[key] = len(members)
            members.append([])
            pos.append(None)
        return new_id[key]

    for v in adj:
        members[node_for(v)].append(v)
    for k, mem in enumerate(members):
        mem_arr = np.array(mem)
        branchy = [m for m in mem if deg[m] >= 3]
        src = branchy if branchy else mem
        pos[k] = V[src].mean(axis=0)
    edges = set()
    for path in long_chains:
        ids = [node_for(u) for u in path]
        for a, b in zip(ids[:-1], ids[1:]):
            if a != b:
                edges.add((min(a, b), max(a, b)))
    edges = np.array(sorted(edges), dtype=int).reshape(-1, 2)
    return np.array(pos), edges, members


def _drop_micro(pos, edges, r, raw_feet, deg, params, region_id, diagnostics):
    """Merge isolated degree-0 clusters and drop the ones hugging a larger component."""
    n = len(pos)
    iso = [i for i in range(n) if deg[i] == 0]
    if not iso:
        _check_connected(pos, edges, params, region_id)
        return pos, edges, r, raw_feet, deg
    others = np.array([i for i in range(n) if deg[i] > 0])
    dsu = UnionFind(iso)
    for a in iso:
        for b in iso:
            if a < b and np.hypot(*(pos[a] - pos[b])) < params.cluster_tol:
                dsu.union(a, b)
    drop = set()
    merged = {}
    for a in iso:
        merged.setdefault(dsu[a], []).append(a)
    if len(others):
        tree = cKDTree(pos[others])
    for root, group in merged.items():
        if len(others):
            d, _ = tree.query(pos[group])
            if np.min(d) < params.cluster_tol:
                drop.update(group)
                diagnostics.append({"kind": "dropped_fragment", "at": pos[group].mean(0).tolist()})
                continue
        if len(group) > 1:
            keep = group[0]
            pos[keep] = pos[group].mean(axis=0)
            raw_feet[keep] = np.unique(np.concatenate([raw_feet[g] for g in group]))
            drop.update(group[1:])
    if drop:
        keep_idx = np.array([i for i in range(n) if i not in drop])
        remap = -np.ones(n, dtype=int)
        remap[keep_idx] = np.arange(len(keep_idx))
        pos = pos[keep_idx]
        r = r[keep_idx]
        raw_feet = [raw_feet[i] for i in keep_idx]
        deg = deg[keep_idx]
        edges = remap[edges] if len(edges) else edges
    _check_connected(pos, edges, params, region_id)
    return pos, edges, r, raw_feet, deg


def _check_connected(pos, edges, params, region_id):
    g = nx.Graph()
    g.add_nodes_from(range(len(pos)))
    g.add_edges_from(map(tuple, np.asarray(edges, dtype=int)))
    comps = list(nx.connected_components(g))
    if len(comps) > 1:
        sizes = sorted((len(c) for c in comps), reverse=True)
        raise ResolutionError(
            f"{region_id}: medial axis splits into {len(comps)} components (sizes {sizes[:5]}); "
            f"sampling too coarse to separate features",
            suggested_spacing=params.spacing / 2,
        )


def _attach_corners(g: SkeletalGraph, tol: float) -> SkeletalGraph:
    """Extend the axis terminal nearest each convex corner up to the corner point."""
    s = g.samples
    corners = np.nonzero(s.convex_corner)[0]
    if len(corners) == 0:
        return g
    deg = g.degree
    ends = np.nonzero(deg == 1)[0]
    pos = list(g.positions)
    r = list(g.radius)
    edges = [tuple(e) for e in g.edges]
    raw = list(g.raw_feet)
    diags = list(g.diagnostics)
    used = set()
    radius = g.params.corner_search * g.params.spacing
    for c in corners:
        cp = s.points[c]
        if len(ends) == 0:
            diags.append({"kind": "corner_without_terminal", "corner": cp.tolist()})
            continue
        d = np.hypot(*(g.positions[ends] - cp).T)
        order = np.argsort(d)
        pick = next((ends[k] for k in order if d[k] <= radius and ends[k] not in used), None)
        if pick is None:
            diags.append({"kind": "corner_without_terminal", "corner": cp.tolist()})
            continue
        used.add(pick)
        pos.append(cp.copy())
        r.append(0.0)
        raw.append(np.array([c]))
        edges.append((int(pick), len(pos) - 1))
    return replace(g, positions=np.array(pos), radius=np.array(r),
                   edges=np.array(edges, dtype=int).reshape(-1, 2), raw_feet=tuple(raw),
                   diagnostics=tuple(diags))


def _group_feet(samples: BoundarySamples, feet: np.ndarray, at: np.ndarray, gap: int = 3) -> list:
    """Cluster foot samples that are contiguous along the boundary; one rep per cluster."""
    if len(feet) == 0:
        return []
    order = np.lexsort((samples.index[feet], samples.loop[feet]))
    f = feet[order]
    groups = [[f[0]]]
    for a in f[1:]:
        if samples.index_gap(groups[-1][-1], a) <= gap:
            groups[-1].append(a)
        else:
            groups.append([a])
    # the first and last groups may wrap around the same loop
    if len(groups) > 1 and samples.index_gap(groups[0][0], groups[-1][-1]) <= gap:
        groups[0] = groups.pop() + groups[0]
    reps = []
    for gr in groups:
        gr = np.array(gr)
        d = np.hypot(*(samples.points[gr] - at).T)
        reps.append(int(gr[np.argmin(d)]))
    return reps


def _mid_foot(samples: BoundarySamples, reps: list, at) -> int:
    if len(reps) == 1:
        return reps[0]
    # the two reps farthest apart along the boundary bracket the tangency
    best = None
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            gap = samples.index_gap(reps[i], reps[j])
            if np.isfinite(gap) and (best is None or gap > best[0]):
                best = (gap, reps[i], reps[j])
    if best is None:
        d = [np.hypot(*(samples.points[k] - at)) for k in reps]
        return reps[int(np.argmin(d))]
    _, a, b = best
    lp = samples.loop[a]
    n = samples.loop_len[lp]
    ia, ib = samples.index[a], samples.index[b]
    fwd = (ib - ia) % n
    mid = ia + fwd // 2 if fwd <= n - fwd else ib + (n - fwd) // 2
    return int(samples.global_index(lp, mid))


def classify_medial_points(g: SkeletalGraph, tol: float = 0.0) -> SkeletalGraph:
    """Label nodes by degree and radius and recompute feet clusters and arcs."""
    deg = g.degree
    r_tol = max(tol, 1e-12)
    labels = np.empty(len(g.positions), dtype=object)
    diags = [d for d in g.diagnostics if d.get("kind") != "degenerate"]
    for i, k in enumerate(deg):
        if k == 1:
            labels[i] = StratumLabel.CORNER_CONTACT if g.radius[i] <= r_tol else StratumLabel.A3
        elif k == 2:
            labels[i] = StratumLabel.A1_2
        elif k == 3:
            labels[i] = StratumLabel.A1_3
        else:
            labels[i] = StratumLabel.DEGENERATE
            why = "isolated cluster" if k == 0 else f"{k} branches meet"
            diags.append({"kind": "degenerate", "node": i, "at": g.positions[i].tolist(),
                          "reason": f"non-generic axis point ({why}); classification unreliable"})
    feet = []
    for i in range(len(g.positions)):
        reps = _group_feet(g.samples, g.raw_feet[i], g.positions[i])
        if labels[i] == StratumLabel.A3:
            reps = [_mid_foot(g.samples, reps, g.positions[i])]
        elif labels[i] == StratumLabel.DEGENERATE:
            reps = [int(x) for x in g.raw_feet[i]]
        elif labels[i] == StratumLabel.CORNER_CONTACT:
            reps = [int(g.raw_feet[i][0])]
        feet.append(np.array(reps, dtype=int))
    arcs = _arcs(g.edges, len(g.positions))
    return replace(g, labels=labels, feet=tuple(feet), arcs=tuple(arcs), diagnostics=tuple(diags))


def _arcs(edges, n) -> list:
    adj = {i: [] for i in range(n)}
    for a, b in edges:
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    adj = {k: v for k, v in adj.items() if v}
    deg = {k: len(v) for k, v in adj.items()}
    return [np.array(p, dtype=int) for p in _chains(adj, deg)]


# ---------------------------------------------------------------------------
# per-region entry points
# ---------------------------------------------------------------------------

def region_domain(region, config=None):
    """Loops, owners and shared-vertex masks of a region's interior domain."""
    loops = list(region.loops)
    owners = [region.id] * len(loops)
    masks = None
    if config is not None and config.shared:
        masks = []
        for li, lp in enumerate(loops):
            m = np.zeros(len(lp), dtype=bool)
            for s in config.shared:
                if s.region_a == region.id and s.loop_a == li:
                    m[s.indices_a(len(lp))] = True
                if s.region_b == region.id and s.loop_b == li:
                    m[s.indices_b(len(lp))] = True
            masks.append(m)
    return loops, owners, masks


def compute_medial_axis(region, spacing: float, theta_prune: float = math.radians(20.0),
                        config=None, tol: float | None = None, **kw) -> SkeletalGraph:
    """Blum medial axis of one region as a pruned interior Voronoi skeleton."""
    params = MedialParams(spacing=spacing, theta_prune=theta_prune, **kw)
    loops, owners, masks = region_domain(region, config)
    samples = build_samples(loops, owners, spacing, masks, params.corner_window)
    if tol is None:
        pts = region.outer.vertices
        tol = 1e-9 * float(np.hypot(*np.ptp(pts, axis=0)))
    return skeletonize(samples, loops, params, region.id, tol)


# ---------------------------------------------------------------------------
# the double
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DoubleSheet:
    """Sided copy of a medial graph: one element per (axis node, foot).

    Element ``k`` sits at ``x[k]`` with radial vector ``r[k] * u[k]`` ending
    at ``foot[k]``; ``side`` is +1/-1 for the two sides of an arc (sign of
    tangent x u) and 0 at vertices.
    """

    region_id: str
    node: np.ndarray
    x: np.ndarray
    r: np.ndarray
    u: np.ndarray
    foot: np.ndarray
    foot_index: np.ndarray
    side: np.ndarray
    label: np.ndarray
    graph: SkeletalGraph = field(repr=False)

    def __len__(self):
        return len(self.node)

    def with_radius(self, r) -> "DoubleSheet":
        r = np.asarray(r, dtype=float)
        return replace(self, r=r, foot=self.x + r[:, None] * self.u)

    def elements_of(self, node: int) -> np.ndarray:
        return np.nonzero(self.node == node)[0]


def build_double(g: SkeletalGraph) -> DoubleSheet:
    if len(g.feet) != len(g.positions) or any(len(f) == 0 for f in g.feet):
        raise ConsistencyError(f"{g.region_id}: medial graph is missing feet data")
    s = g.samples
    tang = _node_tangents(g)
    rows = []
    for i, feet in enumerate(g.feet):
        x = g.positions[i]
        for f in feet:
            b = s.points[f]
            d = b - x
            rr = float(np.hypot(*d))
            u = d / rr if rr > 0 else s.normals[f]
            side = 0
            if g.labels[i] == StratumLabel.A1_2:
                side = 1 if tang[i, 0] * u[1] - tang[i, 1] * u[0] > 0 else -1
            rows.append((i, x, rr, u, b, f, side, g.labels[i]))
    node, x, r, u, b, f, side, lab = zip(*rows)
    x = np.array(x)
    b = np.array(b)
    f = np.array(f)
    refine = label_mask(np.array(lab, dtype=object), StratumLabel.A1_2, StratumLabel.A1_3)
    if refine.any():
        b = b.copy()
        b[refine] = _project_to_adjacent_edges(s, f[refine], x[refine])
        d = b - x
        r = np.hypot(*d.T)
        u = np.array(u)
        ok = refine & (r > 0)
        u[ok] = d[ok] / r[ok, None]
    return DoubleSheet(
        region_id=g.region_id, node=np.array(node), x=x, r=np.array(r),
        u=np.array(u), foot=b, foot_index=f, side=np.array(side),
        label=np.array(lab, dtype=object), graph=g,
    )


def _project_to_adjacent_edges(s: BoundarySamples, idx, x) -> np.ndarray:
    """Nearest point to ``x`` on the two boundary edges incident to sample ``idx``."""
    lp = s.loop[idx]
    prev = s.global_index(lp, s.index[idx] - 1)
    nxt = s.global_index(lp, s.index[idx] + 1)
    p = s.points[idx]
    best = np.repeat(p[:, None, :], 1, axis=1)[:, 0]
    dbest = np.hypot(*(best - x).T)
    for other in (prev, nxt):
        q = s.points[other]
        e = q - p
        t = np.clip(np.einsum("ij,ij->i", x - p, e) / np.maximum(np.einsum("ij,ij->i", e, e), 1e-300), 0, 1)
        c = p + t[:, None] * e
        dc = np.hypot(*(c - x).T)
        better = dc < dbest
        best[better] = c[better]
        dbest[better] = dc[better]
    return best


def _node_tangents(g: SkeletalGraph) -> np.ndarray:
    t = np.zeros_like(g.positions)
    adj = g.neighbors()
    for i, nb in enumerate(adj):
        if len(nb) == 2:
            t[i] = unit(g.positions[nb[1]] - g.positions[nb[0]])
        elif len(nb) == 1:
            t[i] = unit(g.positions[i] - g.positions[nb[0]])
    return t


def radial_flow(sheet: DoubleSheet, k: int, t: float) -> np.ndarray:
    """Point ``x + t * r * u`` of element ``k``; ``t = 1`` is the radial map onto the boundary."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"flow time must lie in [0, 1], got {t}")
    return sheet.x[k] + t * sheet.r[k] * sheet.u[k]


def radial_level_set(sheet: DoubleSheet, t: float, labels=None) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"flow time must lie in [0, 1], got {t}")
    m = np.ones(len(sheet), dtype=bool) if labels is None else label_mask(sheet.label, *labels)
    return sheet.x[m] + t * sheet.r[m, None] * sheet.u[m]


@dataclass
class CompatibilityResidual:
    """Per-element residuals of the compatibility 1-form and boundary orthogonality.

    ``eta`` is ``dr/ds + t . u`` along arcs (NaN off the smooth strata),
    ``ortho`` is ``u . t_B`` at the foot and ``foot_offset`` the distance of
    the foot from the boundary.
    """

    eta: np.ndarray
    ortho: np.ndarray
    foot_offset: np.ndarray
    included: np.ndarray
    skipped_arcs: int = 0
    notes: list = field(default_factory=list)

    @property
    def max_eta(self) -> float:
        v = self.eta[self.included & np.isfinite(self.eta)]
        return float(np.max(np.abs(v))) if len(v) else 0.0

    @property
    def max_ortho(self) -> float:
        v = self.ortho[self.included]
        return float(np.max(np.abs(v))) if len(v) else 0.0

    @property
    def max_foot_offset(self) -> float:
        v = self.foot_offset[self.included]
        return float(np.max(v)) if len(v) else 0.0

    def flagged(self, threshold: float) -> bool:
        return max(self.max_eta, self.max_ortho, self.max_foot_offset) > threshold

    def to_dict(self):
        return {"max_eta": self.max_eta, "max_ortho": self.max_ortho,
                "max_foot_offset": self.max_foot_offset, "skipped_arcs": self.skipped_arcs,
                "notes": self.notes}


def compatibility_check(sheet: DoubleSheet) -> CompatibilityResidual:
    """Discrete compatibility residual ``dr/ds + t . u`` and orthogonality ``u . t_B``.

    ``t_B`` is the sampled boundary tangent nearest the foot.  Feet at
    corners are excluded, since the normal there is a cone.
    """
    g = sheet.graph
    s = g.samples
    n = len(sheet)
    eta = np.full(n, np.nan)
    included = ~label_mask(sheet.label, StratumLabel.DEGENERATE, StratumLabel.CORNER_CONTACT)
    included &= ~s.corner[sheet.foot_index]
    notes = []
    if np.any(label_mask(sheet.label, StratumLabel.DEGENERATE)):
        notes.append("degenerate strata excluded from residual summary")
    skipped = 0
    for arc in g.arcs:
        p = g.positions[arc]
        seg = np.hypot(*np.diff(p, axis=0).T)
        if len(arc) < 3 or np.any(seg == 0):
            skipped += 1
            continue
        sarc = np.concatenate([[0.0], np.cumsum(seg)])
        tang = unit(np.gradient(p, sarc, axis=0))
        for side in (1, -1):
            rows = _side_rows(sheet, arc, side)
            if np.any(rows < 0):
                skipped += 1
                continue
            dr = np.gradient(sheet.r[rows], sarc)
            e = dr + np.einsum("ij,ij->i", tang, sheet.u[rows])
            eta[rows[1:-1]] = e[1:-1]
    if skipped:
        warnings.warn(f"{sheet.region_id}: {skipped} arc sides skipped in compatibility check", stacklevel=2)
    _, near = cKDTree(s.points).query(sheet.foot)
    ortho = np.einsum("ij,ij->i", sheet.u, s.tangents[near])
    seg_a, seg_b = s.segments
    off, _ = _kernels.nearest_on_segments(np.ascontiguousarray(sheet.foot), seg_a, seg_b)
    return CompatibilityResidual(eta=eta, ortho=ortho, foot_offset=off, included=included,
                                 skipped_arcs=skipped, notes=notes)


def _side_rows(sheet: DoubleSheet, arc, side) -> np.ndarray:
    """Element per arc node on one side; arc ends take the best-aligned element."""
    rows = -np.ones(len(arc), dtype=int)
    for k, node in enumerate(arc):
        el = np.nonzero((sheet.node == node) & (sheet.side == side))[0]
        if len(el):
            rows[k] = el[0]
    for k, ref in ((0, 1), (len(arc) - 1, len(arc) - 2)):
        if rows[k] < 0 and rows[ref] >= 0:
            cand = sheet.elements_of(arc[k])
            if len(cand):
                rows[k] = cand[np.argmax(sheet.u[cand] @ sheet.u[rows[ref]])]
    return rows


def check_edge_corner_form(region, g: SkeletalGraph, r_window: float | None = None,
                           former_corners=None) -> list:
    """Compare the axis direction at each convex corner with the corner bisector.

    Returns one entry per corner with ``status`` in ``pass``, ``fail``,
    ``not_applicable`` (concave corner) or ``smoothed`` (for
    ``former_corners`` of a filleted region, where ``min_axis_distance``
    reports how close the axis comes).
    """
    sp = g.params.spacing
    r_window = r_window or 10.0 * sp
    bound = 5.0 * sp / r_window
    out = []
    cc = g.nodes_with(StratumLabel.CORNER_CONTACT)
    adj = g.neighbors()
    dense = g.dense_points()
    for li, lp in enumerate(region.loops):
        th = turning_angles(lp)
        v = lp.vertices
        for c in lp.corners:
            p = v[c]
            entry = {"loop": li, "corner": int(c), "at": p.tolist()}
            if th[c] <= 0:
                entry["status"] = "not_applicable"
                out.append(entry)
                continue
            d1 = unit(v[c] - v[c - 1])
            d2 = unit(v[(c + 1) % len(v)] - v[c])
            bis = unit(d2 - d1)
            entry["bisector"] = bis.tolist()
            hit = [k for k in cc if np.hypot(*(g.positions[k] - p)) <= 1e-9 + 1e-9 * np.abs(p).max()]
            if not hit:
                entry.update(status="fail", reason="no axis terminal at corner")
                out.append(entry)
                continue
            # walk inward from the contact node, keeping nodes inside the window
            path = [hit[0]]
            prev, cur = None, hit[0]
            while True:
                nxt = [w for w in adj[cur] if w != prev]
                if len(nxt) != 1 and cur != hit[0]:
                    break
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                if np.hypot(*(g.positions[cur] - p)) > r_window:
                    break
                path.append(cur)
            far = g.positions[path[-1]]
            direction = unit(far - p)
            dev = float(np.arccos(np.clip(direction @ bis, -1, 1)))
            entry.update(direction=direction.tolist(), deviation=dev, bound=bound,
                         status="pass" if dev <= bound else "fail")
            out.append(entry)
    for p in former_corners if former_corners is not None else ():
        p = np.asarray(p, dtype=float)
        out.append({"at": p.tolist(), "status": "smoothed",
                    "min_axis_distance": float(np.min(np.hypot(*(dense - p).T)))})
    return out


__all__ = [
    "BOUND_ID",
    "StratumLabel",
    "MedialParams",
    "BoundarySamples",
    "SkeletalGraph",
    "DoubleSheet",
    "CompatibilityResidual",
    "build_samples",
    "skeletonize",
    "compute_medial_axis",
    "classify_medial_points",
    "label_mask",
    "build_double",
    "radial_flow",
    "radial_level_set",
    "compatibility_check",
    "check_edge_corner_form",
]
