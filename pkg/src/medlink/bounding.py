"""Bounding regions for the exterior analysis and post-hoc threshold modes."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from . import _kernels
from .errors import ContainmentError, ParameterError
from .geometry import PolyLoop, angle_between, inside_loops, is_simple

VARIANTS = ("box", "hull", "intrinsic")
THRESHOLD_MODES = ("absolute", "truncated")


@dataclass(frozen=True)
class BoundingSpec:
    """Geometric bounding variant plus an optional threshold on the linking function.

    ``margin`` is used by the box variant; ``None`` means half the
    configuration diameter, which leaves room for the exterior axis between
    facing regions.  ``polygon`` is the intrinsic bounding polygon.
    """

    variant: str = "box"
    margin: float | None = None
    polygon: PolyLoop | None = None
    threshold_mode: str | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown bounding variant {self.variant!r}")
        if self.margin is not None and not self.margin > 0:
            raise ParameterError(f"box margin must be positive, got {self.margin}")
        if self.variant == "intrinsic":
            if self.polygon is None:
                raise ParameterError("intrinsic bounding needs a polygon")
            if not is_simple(self.polygon):
                raise ParameterError("intrinsic bounding polygon is not simple")
        if self.threshold_mode is not None:
            if self.threshold_mode not in THRESHOLD_MODES:
                raise ParameterError(f"unknown threshold mode {self.threshold_mode!r}")
            if self.tau is None or not self.tau > 0:
                raise ParameterError(f"threshold tau must be positive, got {self.tau}")

    @classmethod
    def from_dict(cls, d: dict | None) -> "BoundingSpec":
        if not d:
            return cls()
        d = dict(d)
        variant = d.pop("variant", "box")
        variant = {"convex_hull": "hull", "convexhull": "hull"}.get(variant, variant)
        poly = d.pop("polygon", None)
        thr = d.pop("threshold", None) or {}
        return cls(
            variant=variant,
            margin=d.pop("margin", None),
            polygon=PolyLoop(np.asarray(poly, dtype=float)).ccw() if poly is not None else None,
            threshold_mode=thr.get("mode"),
            tau=thr.get("tau"),
        )

    def to_dict(self) -> dict:
        out: dict = {"variant": self.variant}
        if self.margin is not None:
            out["margin"] = self.margin
        if self.polygon is not None:
            out["polygon"] = self.polygon.vertices.tolist()
        if self.threshold_mode is not None:
            out["threshold"] = {"mode": self.threshold_mode, "tau": self.tau}
        return out


@dataclass(frozen=True, eq=False)
class RealizedBounding:
    loop: PolyLoop
    variant: str
    inflation: float = 0.0


def _config_points(config) -> np.ndarray:
    return np.vstack([r.outer.vertices for r in config.regions])


def realize_bounding(config, spec: BoundingSpec | None = None, spacing: float = 0.0) -> RealizedBounding:
    """Turn a bounding spec into a CCW polygon strictly containing the configuration.

    The hull variant is inflated by ``2 * spacing`` so that the exterior
    region keeps a positive clearance along the supporting arcs.
    """
    spec = spec or config.bounding
    pts = _config_points(config)
    if spec.variant == "box":
        margin = spec.margin if spec.margin is not None else 0.5 * config.scale
        lo = pts.min(axis=0) - margin
        hi = pts.max(axis=0) + margin
        box = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        return RealizedBounding(PolyLoop(box, (0, 1, 2, 3)), "box")
    if spec.variant == "hull":
        inflation = 2.0 * spacing
        if inflation > 0:
            ang = np.linspace(0, 2 * math.pi, 32, endpoint=False)
            ring = inflation * np.column_stack([np.cos(ang), np.sin(ang)])
            cloud = (pts[:, None, :] + ring[None]).reshape(-1, 2)
        else:
            cloud = pts
        hull = ConvexHull(cloud)
        # qhull returns 2-d hull vertices in counterclockwise order
        return RealizedBounding(PolyLoop(cloud[hull.vertices]), "hull", inflation)
    poly = spec.polygon.ccw()
    check_contains(config, poly)
    return RealizedBounding(poly, "intrinsic")


def check_contains(config, poly: PolyLoop) -> None:
    """Raise :class:`ContainmentError` unless ``poly`` strictly contains every region."""
    pts = _config_points(config)
    strictly_in = inside_loops(pts, [poly])
    if not np.all(strictly_in) or _edges_cross(config, poly):
        raise ContainmentError(
            "bounding polygon does not contain the configuration",
            regions=[r.id for r in config.regions],
            locations=pts[~strictly_in][:5],
        )


def _edges_cross(config, poly: PolyLoop) -> bool:
    pa, pb = poly.edges
    for r in config.regions:
        ra, rb = r.outer.edges
        a = np.ascontiguousarray(np.vstack([pa, ra]))
        b = np.ascontiguousarray(np.vstack([pb, rb]))
        pairs = _kernels.proper_crossings(a, b, 0.0)
        n = len(pa)
        if np.any((pairs[:, 0] < n) != (pairs[:, 1] < n)):
            return True
    return False


def apply_threshold(structure, tau: float, mode: str):
    """Return a copy of a linking structure with a threshold applied.

    ``truncated`` replaces every finite linking value by ``min(ell, tau)`` and
    marks records that needed more than ``tau``; ``absolute`` leaves the
    values alone and drops every record with a participant beyond ``tau``.
    """
    if not tau > 0:
        raise ParameterError(f"threshold tau must be positive, got {tau}")
    if mode not in THRESHOLD_MODES:
        raise ParameterError(f"unknown threshold mode {mode!r}")
    ell = {k: v.copy() for k, v in structure.ell.items()}
    records = []
    for rec in structure.records:
        over = any(structure.ell[p.region][p.element] > tau for p in rec.participants)
        if mode == "absolute":
            if not over:
                records.append(rec)
        else:
            records.append(dataclasses.replace(rec, truncated=rec.truncated or over))
    if mode == "truncated":
        for k, v in ell.items():
            finite = np.isfinite(v)
            v[finite] = np.minimum(v[finite], tau)
    return dataclasses.replace(
        structure, ell=ell, records=tuple(records),
        threshold={"mode": mode, "tau": float(tau)},
    )


@dataclass
class TransversalityReport:
    crossings: list = field(default_factory=list)
    floor_deg: float = 10.0

    @property
    def passed(self) -> bool:
        return all(c["angle_deg"] >= self.floor_deg and not c["at_vertex"] for c in self.crossings)

    def failures(self):
        return [c for c in self.crossings if c["angle_deg"] < self.floor_deg or c["at_vertex"]]

    def to_dict(self):
        return {"passed": self.passed, "floor_deg": self.floor_deg, "crossings": self.crossings}


def transversality_check(axis, boundary: PolyLoop, floor_deg: float = 10.0,
                         tol: float | None = None) -> TransversalityReport:
    """Crossing angles between the edges of an axis graph and a bounding loop.

    Also reports axis vertices that sit on the loop, using the smaller of the
    angles against the two adjacent loop edges for vertices at loop corners.
    """
    pos = axis.positions
    edges = axis.edges
    if tol is None:
        tol = 1e-9 * max(1.0, float(np.ptp(boundary.vertices, axis=0).max()))
    report = TransversalityReport(floor_deg=floor_deg)
    if len(edges) == 0:
        return report
    la, lb = boundary.edges
    ea, eb = pos[edges[:, 0]], pos[edges[:, 1]]
    ld = lb - la
    ed = eb - ea
    degree = np.bincount(edges.ravel(), minlength=len(pos))
    for k in range(len(edges)):
        w = la - ea[k]
        den = ed[k, 0] * ld[:, 1] - ed[k, 1] * ld[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[:, 0] * ld[:, 1] - w[:, 1] * ld[:, 0]) / den
            t = (w[:, 0] * ed[k, 1] - w[:, 1] * ed[k, 0]) / den
        elen = float(np.hypot(*ed[k]))
        hit = (den != 0) & (s >= -tol / elen) & (s <= 1 + tol / elen) & (t >= 0) & (t <= 1)
        for j in np.nonzero(hit)[0]:
            at_end = s[j] <= tol / elen or s[j] >= 1 - tol / elen
            p = ea[k] + s[j] * ed[k]
            cand = [j]
            tj = t[j]
            if tj <= 1e-9:
                cand.append((j - 1) % len(la))
            elif tj >= 1 - 1e-9:
                cand.append((j + 1) % len(la))
            ang = min(_line_angle(ed[k], ld[c]) for c in cand)
            vertex_hit = at_end and degree[edges[k, 0] if s[j] <= 0.5 else edges[k, 1]] > 1
            report.crossings.append({
                "point": [float(p[0]), float(p[1])],
                "angle_deg": math.degrees(ang),
                "edge": int(k),
                "at_vertex": bool(vertex_hit),
            })
    # de-duplicate contacts found from several edges / loop edges
    seen = {}
    for c in report.crossings:
        key = (round(c["point"][0] / max(tol, 1e-12)), round(c["point"][1] / max(tol, 1e-12)))
        if key not in seen or c["angle_deg"] < seen[key]["angle_deg"]:
            seen[key] = c
    report.crossings = list(seen.values())
    return report


def _line_angle(d1, d2) -> float:
    """Angle in [0, pi/2] between two undirected lines."""
    a = float(angle_between(d1, d2))
    return min(a, math.pi - a)


__all__ = [
    "BoundingSpec",
    "RealizedBounding",
    "realize_bounding",
    "check_contains",
    "apply_threshold",
    "transversality_check",
    "TransversalityReport",
]
