"""Planar primitives, predicates and polyline utilities."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateTripleError,
    MalformedLoopError,
    OrientationError,
    ParameterError,
)

#: predicate tolerance relative to the configuration diameter
REL_TOL = 1e-9


class Location(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


def as_points(pts) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(pts, dtype=np.float64))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise MalformedLoopError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedLoopError("non-finite coordinate")
    return arr


@dataclass(frozen=True, eq=False)
class PolyLoop:
    """Closed polyline; the edge from the last vertex back to the first is implicit.

    ``corners`` lists indices of vertices that are genuine boundary corners
    (as opposed to sampling vertices of a smooth curve).
    """

    vertices: np.ndarray
    corners: tuple = field(default=())

    def __post_init__(self):
        v = as_points(self.vertices)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "corners", tuple(sorted(int(c) for c in self.corners)))
        if len(v) < 3:
            raise MalformedLoopError(f"loop has {len(v)} vertices, need at least 3")
        for c in self.corners:
            if not 0 <= c < len(v):
                raise MalformedLoopError(f"corner index {c} out of range")

    def __len__(self):
        return len(self.vertices)

    @property
    def edges(self):
        """Start and end points of every edge, as two (n, 2) arrays."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @property
    def perimeter(self) -> float:
        a, b = self.edges
        return float(np.sum(np.hypot(*(b - a).T)))

    @property
    def orientation(self) -> int:
        return 1 if signed_area(self) > 0 else -1

    def reversed(self) -> "PolyLoop":
        n = len(self)
        v = self.vertices[::-1]
        return PolyLoop(v, tuple(n - 1 - c for c in self.corners))

    def ccw(self) -> "PolyLoop":
        return self if self.orientation > 0 else self.reversed()

    def cw(self) -> "PolyLoop":
        return self if self.orientation < 0 else self.reversed()

    def corner_mask(self) -> np.ndarray:
        m = np.zeros(len(self), dtype=bool)
        m[list(self.corners)] = True
        return m


def signed_area(loop) -> float:
    v = loop.vertices if isinstance(loop, PolyLoop) else np.asarray(loop, dtype=float)
    if len(v) < 3:
        raise MalformedLoopError(f"loop has {len(v)} vertices, need at least 3")
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def diameter(points) -> float:
    p = np.asarray(points, dtype=float)
    lo, hi = p.min(axis=0), p.max(axis=0)
    return float(np.hypot(*(hi - lo)))


def circumcenter(p, q, r) -> np.ndarray:
    p, q, r = (np.asarray(v, dtype=float) for v in (p, q, r))
    b = q - p
    c = r - p
    d = 2.0 * (b[0] * c[1] - b[1] * c[0])
    span = max(np.dot(b, b), np.dot(c, c), np.dot(r - q, r - q))
    if span == 0.0 or abs(d) <= 1e-12 * span:
        raise DegenerateTripleError(f"collinear or coincident points {p}, {q}, {r}")
    bb = np.dot(b, b)
    cc = np.dot(c, c)
    ux = (c[1] * bb - b[1] * cc) / d
    uy = (b[0] * cc - c[0] * bb) / d
    return p + np.array([ux, uy])


def resample_loop(loop: PolyLoop, spacing: float) -> PolyLoop:
    """Subdivide every edge so no gap exceeds ``spacing``.

    All input vertices survive (so corners are preserved exactly) and the
    operation is idempotent at fixed spacing.
    """
    if not spacing > 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    a, b = loop.edges
    lengths = np.hypot(*(b - a).T)
    pieces = np.maximum(1, np.ceil(lengths / spacing - 1e-12).astype(int))
    out = []
    new_index = np.empty(len(loop), dtype=int)
    for i, (pa, pb, k) in enumerate(zip(a, b, pieces)):
        new_index[i] = len(out)
        t = np.arange(k)[:, None] / k
        out.extend(pa + t * (pb - pa))
    return PolyLoop(np.array(out), tuple(new_index[c] for c in loop.corners))


def edge_normals(loop: PolyLoop) -> np.ndarray:
    """Outward unit normals of each edge of a CCW loop."""
    a, b = loop.edges
    d = b - a
    n = np.column_stack([d[:, 1], -d[:, 0]])
    return n / np.hypot(*n.T)[:, None]


def outward_normals(loop: PolyLoop) -> np.ndarray:
    if signed_area(loop) <= 0:
        raise OrientationError("outward_normals needs a counterclockwise loop")
    en = edge_normals(loop)
    n = en + np.roll(en, 1, axis=0)
    norm = np.hypot(*n.T)
    # a hairpin vertex has opposite edge normals; fall back to the incoming one
    bad = norm < 1e-12
    n[bad] = np.roll(en, 1, axis=0)[bad]
    norm[bad] = 1.0
    return n / norm[:, None]


def tangents(points: np.ndarray) -> np.ndarray:
    """Unit central-difference tangents of a closed sampled curve."""
    d = np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)
    return d / np.hypot(*d.T)[:, None]


def loop_segments(loops) -> tuple[np.ndarray, np.ndarray]:
    a = [lp.edges[0] for lp in loops]
    b = [lp.edges[1] for lp in loops]
    return np.ascontiguousarray(np.vstack(a)), np.ascontiguousarray(np.vstack(b))


def distance_to_segments(points, seg_a, seg_b):
    """Minimum distance from each point to a set of segments, and the nearest point."""
    pts = as_points(points)
    if len(seg_a) == 0:
        return np.full(len(pts), np.inf), np.full((len(pts), 2), np.nan)
    return _kernels.nearest_on_segments(pts, np.ascontiguousarray(seg_a, dtype=float),
                                        np.ascontiguousarray(seg_b, dtype=float))


def inside_loops(points, loops) -> np.ndarray:
    """Even-odd containment of ``points`` in the union of ``loops``."""
    pts = as_points(points)
    a, b = loop_segments(loops)
    return _kernels.crossing_parity(pts, a, b).astype(bool)


def classify_points(points, outer: PolyLoop, holes=(), tol: float | None = None) -> np.ndarray:
    """Vectorized :func:`point_in_region`; returns an array of :class:`Location` values."""
    loops = [outer, *holes]
    pts = as_points(points)
    if tol is None:
        tol = REL_TOL * diameter(outer.vertices)
    a, b = loop_segments(loops)
    dist, _ = distance_to_segments(pts, a, b)
    inside = _kernels.crossing_parity(pts, a, b).astype(bool)
    # numpy mangles str-enum fill values, so build the object array from a list
    out = np.empty(len(pts), dtype=object)
    out[:] = [Location.BOUNDARY if d < tol else (Location.INSIDE if i else Location.OUTSIDE)
              for d, i in zip(dist, inside)]
    return out


def point_in_region(p, outer: PolyLoop, holes=(), tol: float | None = None) -> Location:
    return classify_points(np.asarray(p, dtype=float)[None], outer, holes, tol)[0]


def is_simple(loop: PolyLoop) -> bool:
    a, b = loop.edges
    if np.any(np.hypot(*(b - a).T) == 0.0):
        return False
    return len(_kernels.proper_crossings(np.ascontiguousarray(a), np.ascontiguousarray(b), 0.0)) == 0


def turning_angles(loop: PolyLoop) -> np.ndarray:
    """Signed exterior turning angle at each vertex (positive = left turn)."""
    v = loop.vertices
    din = v - np.roll(v, 1, axis=0)
    dout = np.roll(v, -1, axis=0) - v
    cross = din[:, 0] * dout[:, 1] - din[:, 1] * dout[:, 0]
    dot = np.einsum("ij,ij->i", din, dout)
    return np.arctan2(cross, dot)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, n, out=np.zeros_like(v), where=n > 0)


def angle_between(u, v) -> np.ndarray:
    u = unit(u)
    v = unit(v)
    c = np.clip(np.sum(u * v, axis=-1), -1.0, 1.0)
    return np.arccos(c)


def polygon_from_function(fn, n: int) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.column_stack(fn(t))
