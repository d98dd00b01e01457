"""Spherical axis: directions whose supporting line touches the configuration twice."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DegenerateTripleError, ParameterError
from .geometry import circumcenter, resample_loop


def _outer_vertices(config) -> np.ndarray:
    return np.vstack([r.outer.vertices for r in config.regions])


def height(config, v) -> float:
    """Support value ``max x . v`` over the configuration boundary."""
    v = np.asarray(v, dtype=float)
    if v.shape != (2,) or not np.all(np.isfinite(v)):
        raise ParameterError(f"direction must be a finite 2-vector, got {v!r}")
    if abs(float(np.hypot(*v)) - 1.0) > 1e-9:
        raise ParameterError(f"direction must be a unit vector, |v| = {float(np.hypot(*v))}")
    return float(np.max(_outer_vertices(config) @ v))


@dataclass(frozen=True, eq=False)
class SphericalStructure:
    """Directions with two tangencies, their heights and tangency offsets.

    ``offsets[k]`` holds ``V = x - h u`` for each tangency point ``x`` of
    direction ``k``; flattened (degenerate) directions carry no offsets.
    """

    directions: np.ndarray
    heights: np.ndarray
    offsets: tuple
    owners: tuple
    degenerate: np.ndarray
    notes: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.directions)

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.directions[:, 1], self.directions[:, 0]) if len(self) else np.zeros(0)

    @property
    def generic(self) -> np.ndarray:
        """Indices of the non-degenerate directions (the spherical axis proper)."""
        return np.nonzero(~self.degenerate)[0]

    def to_dict(self) -> dict:
        return {
            "directions": self.directions.tolist(),
            "heights": self.heights.tolist(),
            "offsets": [o.tolist() for o in self.offsets],
            "owners": [list(o) for o in self.owners],
            "degenerate": self.degenerate.tolist(),
            "notes": list(self.notes),
        }


def compute_spherical_axis(config, spacing: float = 0.02, gap_factor: float = 10.0) -> SphericalStructure:
    """Hull bridge edges of the sampled configuration give the spherical axis.

    An edge between samples of two regions, or of one region more than
    ``gap_factor * spacing`` apart along its boundary, is a bitangent.  A
    same-region bridge whose skipped boundary is straight (three-point
    circumradius unbounded) is a flattening: flagged, with no offsets.
    """
    pts, owner, index, arc, loop_id = [], [], [], [], []
    loops = []
    for k, reg in enumerate(config.regions):
        lp = resample_loop(reg.outer, spacing)
        v = lp.vertices
        seg = np.hypot(*(np.roll(v, -1, axis=0) - v).T)
        pts.append(v)
        owner += [reg.id] * len(v)
        index.append(np.arange(len(v)))
        arc.append(np.concatenate([[0.0], np.cumsum(seg)[:-1]]))
        loop_id.append(np.full(len(v), k))
        loops.append((v, float(seg.sum())))
    pts = np.vstack(pts)
    index = np.concatenate(index)
    arc = np.concatenate(arc)
    loop_id = np.concatenate(loop_id)
    hull = ConvexHull(pts)
    hv = hull.vertices  # counterclockwise in 2-d
    dirs, hs, offs, owns, deg, notes = [], [], [], [], [], []
    for a, b in zip(hv, np.roll(hv, -1)):
        same = loop_id[a] == loop_id[b]
        if same:
            total = loops[loop_id[a]][1]
            gap = (arc[b] - arc[a]) % total
            if gap <= gap_factor * spacing:
                continue
        e = pts[b] - pts[a]
        u = np.array([e[1], -e[0]]) / float(np.hypot(*e))
        h = float(pts[a] @ u)
        flat = False
        if same:
            v, _ = loops[loop_id[a]]
            n = len(v)
            span = (index[b] - index[a]) % n
            mid = v[(index[a] + span // 2) % n]
            try:
                c = circumcenter(pts[a], mid, pts[b])
                flat = float(np.hypot(*(c - mid))) > 1.0 / max(config.tol, 1e-300)
            except DegenerateTripleError:
                flat = True
        dirs.append(u)
        hs.append(h)
        owns.append((owner[a], owner[b]))
        deg.append(flat)
        if flat:
            offs.append(np.zeros((0, 2)))
            notes.append(f"direction {math.degrees(math.atan2(u[1], u[0])):.3f} deg: flat support "
                         f"(degenerate tangency along {owner[a]})")
        else:
            offs.append(np.array([pts[a] - h * u, pts[b] - h * u]))
    return SphericalStructure(
        directions=np.array(dirs).reshape(-1, 2), heights=np.array(hs), offsets=tuple(offs),
        owners=tuple(owns), degenerate=np.array(deg, dtype=bool), notes=tuple(notes),
    )


def reconstruct_B_infinity_boundary(structure: SphericalStructure) -> list:
    """Tangency points ``V + h u``: the end points of the unlinked boundary arcs."""
    out = []
    for u, h, off in zip(structure.directions, structure.heights, structure.offsets):
        for v in off:
            out.append(v + h * u)
    return out


__all__ = ["SphericalStructure", "height", "compute_spherical_axis", "reconstruct_B_infinity_boundary"]
