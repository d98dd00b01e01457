"""Brute-force verification by grid distance transforms.

Nothing here shares pruning or sampling logic with the Voronoi pipeline:
the grid ridge is defined purely by the spread of nearest-boundary
witness directions over a cell's 8-neighbourhood.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .bounding import realize_bounding
from .errors import ParameterError, ResourceError
from ._kernels import nearest_segment
from .geometry import inside_loops, loop_segments

CELL_CAP = 10_000_000
BOUNDING_OWNER = "__bounding__"

_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True, eq=False)
class GridField:
    """Signed distance sampled at cell centres (negative inside any region).

    ``values``, ``witness`` and ``owner`` are indexed ``[row, col]`` with
    rows along y.  ``owner`` indexes into ``owner_ids``.
    """

    origin: np.ndarray
    hg: float
    width: int
    height: int
    values: np.ndarray
    witness: np.ndarray
    owner: np.ndarray
    owner_ids: tuple

    def centers(self) -> np.ndarray:
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.hg
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.hg
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def cell_of(self, p) -> tuple[int, int]:
        p = np.asarray(p, dtype=float)
        col = int(np.clip(np.floor((p[0] - self.origin[0]) / self.hg), 0, self.width - 1))
        row = int(np.clip(np.floor((p[1] - self.origin[1]) / self.hg), 0, self.height - 1))
        return row, col

    def value_at(self, p) -> float:
        return float(self.values[self.cell_of(p)])


def distance_transform(config, hg: float, bounding=None, include_bounding: bool = False,
                       extent=None, cell_cap: int = CELL_CAP) -> GridField:
    """Exact per-cell distance to the boundary segments of ``config``.

    The grid covers the realized bounding polygon unless ``extent``
    (``(xmin, ymin, xmax, ymax)``) is given.  With ``include_bounding`` the
    bounding polygon itself is a witness source with owner
    :data:`BOUNDING_OWNER`.
    """
    if not hg > 0:
        raise ParameterError(f"grid cell size must be positive, got {hg}")
    bloop = None
    if extent is None or include_bounding:
        bloop = (bounding if bounding is not None else realize_bounding(config)).loop
    if extent is None:
        lo, hi = bloop.vertices.min(axis=0), bloop.vertices.max(axis=0)
    else:
        lo, hi = np.asarray(extent[:2], float), np.asarray(extent[2:], float)
    width = int(math.ceil((hi[0] - lo[0]) / hg))
    height = int(math.ceil((hi[1] - lo[1]) / hg))
    cells = width * height
    if cells > cell_cap:
        raise ResourceError(f"grid of {cells} cells exceeds the cap of {cell_cap}",
                            suggested_spacing=hg * math.sqrt(cells / cell_cap) * 1.01)
    xs = lo[0] + (np.arange(width) + 0.5) * hg
    ys = lo[1] + (np.arange(height) + 0.5) * hg
    pts = np.column_stack([np.tile(xs, height), np.repeat(ys, width)])

    groups = [(r.id, list(r.loops)) for r in config.regions]
    if include_bounding:
        groups.append((BOUNDING_OWNER, [bloop]))
    seg_a, seg_b, seg_owner = [], [], []
    inside = np.zeros(len(pts), dtype=bool)
    for k, (rid, loops) in enumerate(groups):
        a, b = loop_segments(loops)
        seg_a.append(a)
        seg_b.append(b)
        seg_owner.append(np.full(len(a), k))
        if rid != BOUNDING_OWNER:
            vlo, vhi = a.min(axis=0), a.max(axis=0)
            box = np.all((pts >= vlo) & (pts <= vhi), axis=1)
            inside[box] |= inside_loops(pts[box], loops)
    dist, wit, seg = _nearest_blocked(pts, width, height, hg, np.vstack(seg_a), np.vstack(seg_b))
    own = np.concatenate(seg_owner)[seg]
    values = np.where(inside, -dist, dist)
    return GridField(
        origin=lo.astype(float), hg=float(hg), width=width, height=height,
        values=values.reshape(height, width), witness=wit.reshape(height, width, 2),
        owner=own.reshape(height, width), owner_ids=tuple(g[0] for g in groups),
    )


def _nearest_blocked(pts, width, height, hg, seg_a, seg_b, block: int = 32):
    """Exact nearest-segment query, culling segments per block of cells.

    For a block with centre ``c`` and half-diagonal ``rho`` only segments
    with ``dist(c, seg) <= D(c) + 2 rho`` can be nearest to one of its
    cells (triangle inequality), so the others are skipped.
    """
    dist = np.empty(len(pts))
    near = np.empty((len(pts), 2))
    which = np.empty(len(pts), dtype=np.int64)
    grid_idx = np.arange(len(pts)).reshape(height, width)
    rho = block * hg / math.sqrt(2.0)
    for r0 in range(0, height, block):
        for c0 in range(0, width, block):
            idx = grid_idx[r0:r0 + block, c0:c0 + block].ravel()
            c = pts[idx].mean(axis=0)
            d_each = _point_segment_dist(c, seg_a, seg_b)
            cand = np.nonzero(d_each <= d_each.min() + 2 * rho)[0]
            d, q, j = nearest_segment(pts[idx], seg_a[cand], seg_b[cand])
            dist[idx], near[idx], which[idx] = d, q, cand[j]
    return dist, near, which


def _point_segment_dist(p, a, b):
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
    return np.hypot(*(a + t[:, None] * d - p).T)


def _spread(grid: GridField):
    """Largest witness-direction angle between each cell and its neighbours.

    Returns the angle, the neighbour witness realizing it, that witness's
    owner and the largest witness jump to any neighbour.
    """
    c = grid.centers()
    d0 = grid.witness - c
    n0 = np.hypot(d0[..., 0], d0[..., 1])
    best = np.zeros(grid.values.shape)
    partner = grid.witness.copy()
    partner_owner = grid.owner.copy()
    jump = np.zeros(grid.values.shape)
    H, W = grid.values.shape
    for dy, dx in _OFFSETS:
        ys = slice(max(0, -dy), H - max(0, dy))
        xs = slice(max(0, -dx), W - max(0, dx))
        ys_n = slice(max(0, dy), H - max(0, -dy))
        xs_n = slice(max(0, dx), W - max(0, -dx))
        wn = grid.witness[ys_n, xs_n]
        dn = wn - c[ys, xs]
        nn = np.hypot(dn[..., 0], dn[..., 1])
        cos = np.einsum("ijk,ijk->ij", d0[ys, xs], dn) / np.maximum(n0[ys, xs] * nn, 1e-300)
        ang = np.arccos(np.clip(cos, -1.0, 1.0))
        sub = best[ys, xs]
        upd = ang > sub
        sub[upd] = ang[upd]
        partner[ys, xs][upd] = wn[upd]
        partner_owner[ys, xs][upd] = grid.owner[ys_n, xs_n][upd]
        gap = np.hypot(*(wn - grid.witness[ys, xs]).transpose(2, 0, 1))
        np.maximum(jump[ys, xs], gap, out=jump[ys, xs])
    return best, partner, partner_owner, jump


def _ridge_mask(grid: GridField, theta_sep: float, min_depth: float | None, exterior: bool,
                min_jump: float | None = None):
    min_depth = 8 * grid.hg if min_depth is None else min_depth
    spread, partner, partner_owner, jump = _spread(grid)
    side = grid.values > 0 if exterior else grid.values < 0
    ridge = spread >= theta_sep
    if min_jump is not None:
        ridge |= jump >= min_jump
    mask = side & (np.abs(grid.values) >= min_depth) & ridge
    return mask, partner, partner_owner


def medial_axis_oracle(grid: GridField, theta_sep: float = math.radians(20.0),
                       min_depth: float | None = None, exterior: bool = False) -> np.ndarray:
    """Centres of ridge cells: witness directions in the 8-neighbourhood spread by ``theta_sep``.

    Cells closer than ``min_depth`` (default ``8 hg``) to the boundary are
    dropped; there the grid cannot resolve witness jumps from curvature.
    """
    mask, _, _ = _ridge_mask(grid, theta_sep, min_depth, exterior)
    return grid.centers()[mask]


@dataclass(frozen=True, eq=False)
class OracleLinks:
    """Brute-force link tuples ``(w_a, w_b, cell, clearance)`` in array form."""

    w_a: np.ndarray
    w_b: np.ndarray
    cells: np.ndarray
    clearance: np.ndarray
    owner_a: np.ndarray
    owner_b: np.ndarray
    grid: GridField

    def __len__(self):
        return len(self.cells)

    def tuples(self) -> list:
        return [(a, b, c, float(r)) for a, b, c, r in zip(self.w_a, self.w_b, self.cells, self.clearance)]


def linking_oracle(config, hg: float | None = None, bounding=None, theta_sep: float = math.radians(20.0),
                   min_depth: float | None = None, spacing: float = 0.02, jump_factor: float = 10.0,
                   cell_cap: int = CELL_CAP) -> OracleLinks:
    """Exterior ridge cells whose two witnesses both lie on region boundaries.

    Besides the angular spread test, a cell is a ridge cell when a
    neighbour's witness lies ``jump_factor * hg`` or more away from its own:
    far from a shallow pocket the two witnesses subtend a small angle yet
    still sit on separate boundary pieces.
    """
    hg = spacing / 2 if hg is None else hg
    bounding = bounding if bounding is not None else realize_bounding(config, spacing=spacing)
    grid = distance_transform(config, hg, bounding=bounding, include_bounding=True, cell_cap=cell_cap)
    mask, partner, partner_owner = _ridge_mask(grid, theta_sep, min_depth, exterior=True,
                                               min_jump=jump_factor * hg)
    mask &= inside_loops(grid.centers().reshape(-1, 2), [bounding.loop]).reshape(mask.shape)
    bidx = grid.owner_ids.index(BOUNDING_OWNER)
    mask &= (grid.owner != bidx) & (partner_owner != bidx)
    ids = np.array(grid.owner_ids, dtype=object)
    return OracleLinks(
        w_a=grid.witness[mask], w_b=partner[mask], cells=grid.centers()[mask],
        clearance=grid.values[mask], owner_a=ids[grid.owner[mask]], owner_b=ids[partner_owner[mask]],
        grid=grid,
    )


def match_link_records(structure, links: OracleLinks, tol: float) -> list:
    """For each record: ``(matched, worst participant-to-witness distance)``.

    A record is matched when some oracle cell lies within ``tol`` of its
    ``u0`` and every participant foot is within ``tol`` of a witness of
    those cells.
    """
    out = []
    if len(links) == 0:
        return [(False, math.inf) for _ in structure.records]
    tree = cKDTree(links.cells)
    for rec in structure.records:
        near = tree.query_ball_point(rec.u0, tol)
        if not near:
            out.append((False, math.inf))
            continue
        wits = np.vstack([links.w_a[near], links.w_b[near]])
        worst = 0.0
        for p in rec.participants:
            foot = structure.sheets[p.region].foot[p.element]
            worst = max(worst, float(np.min(np.hypot(*(wits - foot).T))))
        out.append((worst <= tol, worst))
    return out


@dataclass(frozen=True)
class HausdorffReport:
    hausdorff: float
    computed_to_oracle: float
    oracle_to_computed: float
    n_computed: int
    n_oracle: int
    comparable: bool
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _as_point_set(obj, step=None) -> np.ndarray:
    if hasattr(obj, "dense_points"):
        return obj.dense_points(step)
    return np.asarray(obj, dtype=float).reshape(-1, 2)


def compare_structures(computed, oracle) -> HausdorffReport:
    """Symmetric and directed Hausdorff distances between two point sets (or a graph)."""
    a, b = _as_point_set(computed), _as_point_set(oracle)
    if len(a) == 0 or len(b) == 0:
        note = "empty computed set" if len(a) == 0 else "empty oracle set"
        if len(a) == 0 and len(b) == 0:
            note = "both sets empty"
        return HausdorffReport(math.nan, math.nan, math.nan, len(a), len(b), False, note)
    dab = float(cKDTree(b).query(a)[0].max())
    dba = float(cKDTree(a).query(b)[0].max())
    return HausdorffReport(max(dab, dba), dab, dba, len(a), len(b), True)


def axis_points(graph, min_depth: float = 0.0, step: float | None = None) -> np.ndarray:
    """Dense points of a skeletal graph whose interpolated radius is at least ``min_depth``."""
    step = step or graph.params.spacing / 2
    pos, rad = graph.positions, graph.radius
    pts, rs = [pos], [rad]
    for a, b in graph.edges:
        k = int(np.ceil(np.hypot(*(pos[b] - pos[a])) / step))
        if k > 1:
            t = np.arange(1, k)[:, None] / k
            pts.append(pos[a] + t * (pos[b] - pos[a]))
            rs.append(rad[a] + t[:, 0] * (rad[b] - rad[a]))
    pts, rs = np.vstack(pts), np.concatenate(rs)
    return pts[rs >= min_depth]


__all__ = [
    "GridField", "distance_transform", "medial_axis_oracle", "OracleLinks", "linking_oracle",
    "match_link_records", "HausdorffReport", "compare_structures", "axis_points", "CELL_CAP",
]
