"""End-to-end analysis: medial axes, external axis, linking, spherical axis, checks."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bounding import BoundingSpec, apply_threshold, realize_bounding
from .config import detect_shared_boundaries
from .errors import ValidationError
from .geometry import inside_loops
from .linking import (
    b_infinity_endpoints,
    classify_links,
    compute_external_axis,
    compute_linking,
    validate_structure,
)
from .medial import build_double, compatibility_check, compute_medial_axis
from .spherical import compute_spherical_axis, reconstruct_B_infinity_boundary

SIG_DIGITS = 12


@dataclass(frozen=True)
class AnalysisOptions:
    spacing: float = 0.02
    theta_prune_deg: float = 20.0
    delta_strat: float | None = None
    bounding: str | None = None
    margin: float | None = None
    threshold_mode: str | None = None
    tau: float | None = None
    support_tol: float | None = None
    truncate_infinite: bool = False
    oracle: bool = False
    hg: float | None = None

    @property
    def theta_prune(self) -> float:
        return math.radians(self.theta_prune_deg)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(eq=False)
class Analysis:
    """Live objects produced by :func:`run_analysis`."""

    config: object
    options: AnalysisOptions
    axes: dict
    sheets: dict
    bounding: object
    external: object
    structure: object
    spherical: object
    validation: object
    compatibility: dict
    oracle: dict | None = None


def _bounding_spec(config, opts: AnalysisOptions) -> BoundingSpec:
    spec = config.bounding
    kw = {}
    if opts.bounding is not None:
        kw["variant"] = opts.bounding
    if opts.margin is not None:
        kw["margin"] = opts.margin
    if opts.threshold_mode is not None:
        kw["threshold_mode"] = opts.threshold_mode
    if opts.tau is not None:
        kw["tau"] = opts.tau
    return dataclasses.replace(spec, **kw) if kw else spec


def run_analysis(config, options: AnalysisOptions | None = None) -> Analysis:
    opts = options or AnalysisOptions()
    h = opts.spacing
    config = detect_shared_boundaries(config)
    spec = _bounding_spec(config, opts)
    config = dataclasses.replace(config, bounding=spec)
    axes = {r.id: compute_medial_axis(r, h, opts.theta_prune, config=config) for r in config.regions}
    sheets = {rid: build_double(g) for rid, g in axes.items()}
    compat = {rid: compatibility_check(sh) for rid, sh in sheets.items()}
    bounding = realize_bounding(config, spec, h)
    external = compute_external_axis(config, bounding, h, opts.theta_prune)
    kw = {"truncate_infinite": opts.truncate_infinite}
    if opts.support_tol is not None:
        kw["support_tol"] = opts.support_tol
    structure = compute_linking(config, sheets, external, bounding, h, opts.theta_prune, **kw)
    if opts.delta_strat is not None:
        structure = classify_links(structure, opts.delta_strat)
    if spec.threshold_mode is not None:
        structure = apply_threshold(structure, spec.tau, spec.threshold_mode)
    spherical = compute_spherical_axis(config, h)
    validation = validate_structure(structure)
    out = Analysis(config, opts, axes, sheets, bounding, external, structure, spherical, validation, compat)
    if opts.oracle:
        out.oracle = oracle_comparison(out)
    return out


def oracle_comparison(an: Analysis) -> dict:
    """Hausdorff distances between computed axes and grid ridges, plus record matching."""
    from .oracle import (axis_points, compare_structures, distance_transform, linking_oracle,
                         match_link_records, medial_axis_oracle)

    h = an.options.spacing
    hg = an.options.hg if an.options.hg is not None else h / 2
    bound = 3 * max(hg, h)
    min_depth = 8 * hg
    axes = {}
    for reg in an.config.regions:
        v = np.vstack([lp.vertices for lp in reg.loops])
        lo, hi = v.min(axis=0) - 4 * hg, v.max(axis=0) + 4 * hg
        grid = distance_transform(an.config, hg, extent=(*lo, *hi))
        ridge = medial_axis_oracle(grid, min_depth=min_depth)
        ridge = ridge[inside_loops(ridge, list(reg.loops))]
        rep = compare_structures(axis_points(an.axes[reg.id], min_depth), ridge)
        axes[reg.id] = {**rep.to_dict(), "bound": bound,
                        "passed": bool(rep.comparable and rep.hausdorff <= bound)}
    links = linking_oracle(an.config, hg, bounding=an.bounding, spacing=h)
    tol = 3 * hg + 3 * h
    matched = match_link_records(an.structure, links, tol)
    n_ok = sum(ok for ok, _ in matched)
    return {
        "hg": hg,
        "axes": axes,
        "links": {"oracle_tuples": len(links), "records": len(matched), "matched": n_ok,
                  "tolerance": tol, "passed": n_ok == len(matched)},
        "passed": all(a["passed"] for a in axes.values()) and n_ok == len(matched),
    }


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _num(x):
    """Round to the report precision; non-finite values stay as floats."""
    x = float(x)
    if not math.isfinite(x):
        return x
    return float(f"{x:.{SIG_DIGITS}g}")


def normalize(obj):
    """Recursively convert numpy containers/scalars and round floats."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if hasattr(obj, "value"):  # enums
        return obj.value
    return obj


@dataclass(eq=True)
class AnalysisReport:
    version: str
    flags: dict
    configuration: dict
    regions: dict
    linking: dict
    records: list
    spherical: dict
    validation: dict
    geometry: dict
    oracle: dict | None = None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        names = {f.name for f in dataclasses.fields(cls)}
        missing = names - set(d) - {"oracle"}
        if missing:
            raise ValidationError(f"report is missing fields {sorted(missing)}")
        return cls(**{k: d.get(k) for k in names})


def _region_summary(an: Analysis, rid: str) -> dict:
    g, sh, S = an.axes[rid], an.sheets[rid], an.structure
    strata = S.strata[rid]
    kinds, counts = np.unique(strata, return_counts=True) if len(strata) else ([], [])
    pts = g.samples.points
    arcs = [{"loop": a["loop"], "closed": a["closed"], "samples": len(a["indices"]),
             "start": pts[a["indices"][0]], "end": pts[a["indices"][-1]]}
            for a in S.b_infinity[rid]]
    return {
        "labels": g.label_counts(),
        "nodes": len(g.positions),
        "edges": len(g.edges),
        "r_range": [float(g.radius.min()), float(g.radius.max())] if len(g.radius) else [],
        "elements": len(sh),
        "diagnostics": list(g.diagnostics),
        "compatibility": an.compatibility[rid].to_dict(),
        "strata": dict(zip(map(str, kinds), map(int, counts))),
        "m_infinity_fraction": float(np.mean(S.infinite[rid])) if len(sh) else 0.0,
        "m_infinity_unique": int(np.sum(S.unique[rid])),
        "b_infinity": arcs,
    }


def _record_dict(S, rec) -> dict:
    parts = []
    gaps = []
    for p in rec.participants:
        sh = S.sheets[p.region]
        ell = float(S.ell[p.region][p.element])
        parts.append({"region": p.region, "element": p.element, "label": p.label,
                      "x": sh.x[p.element], "foot": sh.foot[p.element],
                      "r": float(sh.r[p.element]), "ell": ell})
        gaps.append(ell - float(sh.r[p.element]))
    residual = (max(gaps) - min(gaps)) if gaps else 0.0
    return {"type": rec.link_type.value, "kind": rec.kind, "m0_label": rec.m0_label,
            "u0": list(rec.u0), "truncated": rec.truncated, "blum_residual": residual,
            "participants": parts, "diagnostics": rec.diagnostics}


def build_report(an: Analysis) -> AnalysisReport:
    S, cfg = an.structure, an.config
    sph = an.spherical
    from collections import Counter

    configuration = {
        "regions": cfg.ids, "scale": cfg.scale, "tol": cfg.tol,
        "shared": [s.to_dict() for s in cfg.shared],
        "bounding": {"variant": an.bounding.variant, "loop": an.bounding.loop.vertices,
                     "inflation": an.bounding.inflation},
    }
    linking = {
        "types": S.type_counts(), "kinds": S.kind_counts(),
        "discrepancies": dict(sorted(Counter(d["kind"] for d in S.discrepancies).items())),
        "threshold": S.threshold,
        "b_infinity_endpoints": b_infinity_endpoints(S),
    }
    spherical = {**sph.to_dict(), "count": int(len(sph.generic)),
                 "reconstruction": reconstruct_B_infinity_boundary(sph)}
    geometry = {
        "loops": {r.id: [lp.vertices for lp in r.loops] for r in cfg.regions},
        "axes": {rid: {"positions": g.positions, "edges": g.edges,
                       "labels": [lab.value for lab in g.labels]} for rid, g in an.axes.items()},
        "external": {"positions": an.external.positions, "edges": an.external.edges,
                     "kinds": [str(k) for k in S.edge_kind]},
        "m_infinity": {rid: {"x": an.sheets[rid].x[S.infinite[rid]],
                             "u": an.sheets[rid].u[S.infinite[rid]],
                             "ell": S.ell_bounded[rid][S.infinite[rid]]} for rid in S.sheets},
        "b_infinity": {rid: [an.axes[rid].samples.points[a["indices"]] for a in S.b_infinity[rid]]
                       for rid in S.sheets},
    }
    rep = AnalysisReport(
        version=__version__,
        flags=an.options.to_dict(),
        configuration=configuration,
        regions={rid: _region_summary(an, rid) for rid in an.axes},
        linking=linking,
        records=[_record_dict(S, rec) for rec in S.records],
        spherical=spherical,
        validation=an.validation.to_dict(),
        geometry=geometry,
        oracle=an.oracle,
    )
    return AnalysisReport(**normalize(rep.to_dict()))


def analyze(config, options: AnalysisOptions | None = None) -> AnalysisReport:
    return build_report(run_analysis(config, options))


__all__ = ["AnalysisOptions", "Analysis", "AnalysisReport", "run_analysis", "build_report",
           "analyze", "oracle_comparison", "normalize", "SIG_DIGITS"]
