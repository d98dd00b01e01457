"""Command line interface, JSON report I/O and SVG rendering."""
from __future__ import annotations

import argparse
import json
import math
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .config import detect_shared_boundaries, load_configuration
from .errors import InputError, MedlinkError, ParameterError
from .pipeline import AnalysisOptions, AnalysisReport, normalize, run_analysis, build_report

_NONFINITE = {"Infinity": math.inf, "-Infinity": -math.inf, "NaN": math.nan}

LAYERS = ("regions", "boundaries", "medial", "external", "links", "m_infinity", "b_infinity", "spherical")
LAYER_ALIASES = {"axes": ("medial", "external"), "all": LAYERS}

LABEL_COLORS = {
    "A1_2": "#4c72b0",
    "A1_3": "#c44e52",
    "A3": "#55a868",
    "CORNER_CONTACT": "#dd8452",
    "DEGENERATE": "#8172b3",
}
TYPE_COLORS = {"i": "#1f77b4", "ii": "#ff7f0e", "iii": "#2ca02c", "iv": "#d62728", "v": "#9467bd",
               "nongeneric": "#7f7f7f"}
FILLS = ["#cfe2f3", "#f4cccc", "#d9ead3", "#fff2cc", "#d9d2e9", "#fce5cd"]


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _encode(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "NaN" if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if isinstance(obj, str):
        return _NONFINITE.get(obj, obj)
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, 12 significant digits, non-finite values as strings."""
    if isinstance(obj, AnalysisReport):
        obj = obj.to_dict()
    return json.dumps(_encode(normalize(obj)), sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str):
    return _decode(json.loads(text))


def write_report(report: AnalysisReport, path=None) -> str:
    text = dumps(report)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_report(source) -> AnalysisReport:
    text = source if str(source).lstrip().startswith("{") else Path(source).read_text(encoding="utf-8")
    return AnalysisReport.from_dict(loads(text))


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

def parse_layers(spec: str | None) -> tuple:
    if spec is None:
        return LAYERS
    out = []
    for name in (s.strip() for s in spec.split(",") if s.strip()):
        if name in LAYER_ALIASES:
            out.extend(LAYER_ALIASES[name])
        elif name in LAYERS:
            out.append(name)
        else:
            raise ParameterError(f"unknown layer {name!r}; choose from {', '.join(LAYERS + tuple(LAYER_ALIASES))}")
    return tuple(dict.fromkeys(out))


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _points(pts) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in np.asarray(pts, dtype=float).reshape(-1, 2))


def _polylines(positions, edges) -> list:
    """Split a graph into maximal chains for compact polyline output."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    adj: dict = {}
    for a, b in np.asarray(edges, dtype=int).reshape(-1, 2):
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    used = set()
    lines = []
    starts = [v for v in sorted(adj) if len(adj[v]) != 2] + sorted(adj)
    for s in starts:
        for nb in adj[s]:
            if (s, nb) in used:
                continue
            path = [s]
            prev, cur = s, nb
            while True:
                used.add((prev, cur))
                used.add((cur, prev))
                path.append(cur)
                if len(adj[cur]) != 2:
                    break
                nxt = [w for w in adj[cur] if (cur, w) not in used]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
            lines.append(positions[path])
    return lines


def render_svg(report: AnalysisReport, layers=LAYERS, width_px: int = 900) -> str:
    """Layered SVG of a report; geometry coordinates are kept y-up by a flip transform."""
    geo = report.geometry
    box = np.asarray(report.configuration["bounding"]["loop"], dtype=float)
    lo, hi = box.min(axis=0), box.max(axis=0)
    span = hi - lo
    sw = float(max(span)) / 600.0
    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg", "version": "1.1",
        "width": str(width_px), "height": str(int(round(width_px * span[1] / span[0]))),
        "viewBox": f"{_fmt(lo[0])} {_fmt(-hi[1])} {_fmt(span[0])} {_fmt(span[1])}",
    })
    ET.SubElement(svg, "title").text = "medial linking structure"
    root = ET.SubElement(svg, "g", {"id": "world", "transform": "scale(1,-1)"})

    def layer(name):
        return ET.SubElement(root, "g", {"id": f"layer-{name}", "class": "layer"})

    ids = list(report.configuration["regions"])
    if "regions" in layers:
        g = layer("regions")
        for k, rid in enumerate(ids):
            loops = geo["loops"][rid]
            d = " ".join("M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in lp) + " Z" for lp in loops)
            ET.SubElement(g, "path", {"d": d, "fill": FILLS[k % len(FILLS)], "fill-rule": "evenodd",
                                      "stroke": "none", "data-region": rid})
    if "boundaries" in layers:
        g = layer("boundaries")
        ET.SubElement(g, "polygon", {"points": _points(box), "fill": "none", "stroke": "#999999",
                                     "stroke-width": _fmt(sw), "data-role": "bounding"})
        for rid in ids:
            for lp in geo["loops"][rid]:
                ET.SubElement(g, "polygon", {"points": _points(lp), "fill": "none", "stroke": "#222222",
                                             "stroke-width": _fmt(sw), "data-region": rid})
    if "medial" in layers:
        g = layer("medial")
        for rid in ids:
            ax = geo["axes"][rid]
            sub = ET.SubElement(g, "g", {"data-region": rid})
            for line in _polylines(ax["positions"], ax["edges"]):
                ET.SubElement(sub, "polyline", {"points": _points(line), "fill": "none",
                                                "stroke": LABEL_COLORS["A1_2"], "stroke-width": _fmt(sw)})
            for p, lab in zip(ax["positions"], ax["labels"]):
                if lab != "A1_2":
                    ET.SubElement(sub, "circle", {"cx": _fmt(p[0]), "cy": _fmt(p[1]), "r": _fmt(3 * sw),
                                                  "fill": LABEL_COLORS[lab], "data-label": lab})
    if "external" in layers:
        g = layer("external")
        ext = geo["external"]
        for line in _polylines(ext["positions"], ext["edges"]):
            ET.SubElement(g, "polyline", {"points": _points(line), "fill": "none", "stroke": "#555555",
                                          "stroke-width": _fmt(sw), "data-axis": "M0"})
    if "links" in layers:
        g = layer("links")
        for rec in report.records:
            c = TYPE_COLORS.get(rec["type"], "#000000")
            for p in rec["participants"]:
                ET.SubElement(g, "line", {
                    "x1": _fmt(p["foot"][0]), "y1": _fmt(p["foot"][1]),
                    "x2": _fmt(rec["u0"][0]), "y2": _fmt(rec["u0"][1]),
                    "stroke": c, "stroke-width": _fmt(0.6 * sw), "data-type": rec["type"]})
    if "m_infinity" in layers:
        g = layer("m_infinity")
        for rid, mi in geo["m_infinity"].items():
            for x, u, ell in zip(mi["x"], mi["u"], mi["ell"]):
                end = np.asarray(x) + ell * np.asarray(u)
                ET.SubElement(g, "line", {
                    "x1": _fmt(x[0]), "y1": _fmt(x[1]), "x2": _fmt(end[0]), "y2": _fmt(end[1]),
                    "stroke": "#aaaaaa", "stroke-width": _fmt(0.5 * sw),
                    "stroke-dasharray": f"{_fmt(4 * sw)} {_fmt(3 * sw)}", "data-region": rid})
    if "b_infinity" in layers:
        g = layer("b_infinity")
        for rid, arcs in geo["b_infinity"].items():
            for arc in arcs:
                ET.SubElement(g, "polyline", {"points": _points(arc), "fill": "none", "stroke": "#e377c2",
                                              "stroke-width": _fmt(4 * sw), "data-region": rid})
    if "spherical" in layers:
        g = layer("spherical")
        sph = report.spherical
        for u, h, off, flat in zip(sph["directions"], sph["heights"], sph["offsets"], sph["degenerate"]):
            if flat:
                continue
            for v in off:
                x = np.asarray(v) + h * np.asarray(u)
                tip = x + 10 * sw * np.asarray(u)
                ET.SubElement(g, "line", {"x1": _fmt(x[0]), "y1": _fmt(x[1]), "x2": _fmt(tip[0]),
                                          "y2": _fmt(tip[1]), "stroke": "#17becf",
                                          "stroke-width": _fmt(2 * sw)})
    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode") + "\n"


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _add_analysis_flags(p: argparse.ArgumentParser):
    p.add_argument("--spacing", type=_positive, default=0.02, help="boundary sample spacing (default 0.02)")
    p.add_argument("--theta-prune", type=_positive, default=20.0, help="Voronoi pruning angle in degrees")
    p.add_argument("--delta-strat", type=_positive, default=None,
                   help="stratum snapping distance (default 2 x spacing)")
    p.add_argument("--bounding", choices=("box", "hull", "intrinsic"), default=None)
    p.add_argument("--margin", type=_positive, default=None, help="box margin (default half the diameter)")
    p.add_argument("--threshold-mode", choices=("truncated", "absolute"), default=None)
    p.add_argument("--tau", type=_positive, default=None)
    p.add_argument("--support-tol", type=_positive, default=None, help="support test tolerance")
    p.add_argument("--truncate-infinite", action="store_true",
                   help="flow unlinked elements up to the bounding loop")
    p.add_argument("--oracle", action="store_true", help="add grid-oracle comparisons")
    p.add_argument("--hg", type=_positive, default=None, help="oracle cell size (default spacing/2)")


def _options(args) -> AnalysisOptions:
    return AnalysisOptions(
        spacing=args.spacing, theta_prune_deg=args.theta_prune, delta_strat=args.delta_strat,
        bounding=args.bounding, margin=args.margin, threshold_mode=args.threshold_mode, tau=args.tau,
        support_tol=args.support_tol, truncate_infinite=args.truncate_infinite,
        oracle=getattr(args, "oracle", False), hg=args.hg,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="check a configuration file")
    p.add_argument("config")
    p = sub.add_parser("analyze", help="run the full pipeline and write a JSON report")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None, help="report path (default stdout)")
    _add_analysis_flags(p)
    p = sub.add_parser("render", help="draw a configuration or report as SVG")
    p.add_argument("input", help="configuration or report JSON")
    p.add_argument("-o", "--output", default=None, help="SVG path (default stdout)")
    p.add_argument("--layers", default=None,
                   help=f"comma-separated subset of {', '.join(LAYERS)} (aliases: axes, all)")
    _add_analysis_flags(p)
    p = sub.add_parser("oracle-check", help="compare the pipeline against the grid oracle")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    _add_analysis_flags(p)
    return parser


def _emit(text: str, path, out):
    if path is None:
        out.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _error_doc(exc: Exception) -> dict:
    doc = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    for attr in ("regions", "suggested_spacing"):
        v = getattr(exc, attr, None)
        if v is not None:
            doc[attr] = list(v) if isinstance(v, (list, tuple)) else v
    return doc


def cmd_validate(args, out) -> int:
    try:
        config = detect_shared_boundaries(load_configuration(args.config))
    except MedlinkError as exc:
        out.write(dumps(_error_doc(exc)))
        return exc.exit_code
    except (OSError, ValueError) as exc:
        out.write(dumps(_error_doc(exc)))
        return 2
    out.write(dumps({"status": "ok", "regions": config.ids,
                     "shared": [s.to_dict() for s in config.shared]}))
    return 0


def _load_input(path):
    try:
        doc = loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return doc


def cmd_analyze(args, out) -> int:
    config = load_configuration(_load_input(args.config))
    report = build_report(run_analysis(config, _options(args)))
    _emit(dumps(report), args.output, out)
    return 0


def cmd_render(args, out) -> int:
    layers = parse_layers(args.layers)
    doc = _load_input(args.input)
    if "geometry" in doc and "records" in doc:
        report = AnalysisReport.from_dict(doc)
    else:
        report = build_report(run_analysis(load_configuration(doc), _options(args)))
    _emit(render_svg(report, layers), args.output, out)
    return 0


def cmd_oracle_check(args, out) -> int:
    config = load_configuration(_load_input(args.config))
    opts = _options(args)
    an = run_analysis(config, AnalysisOptions(**{**opts.to_dict(), "oracle": True}))
    _emit(dumps({"flags": an.options.to_dict(), "oracle": an.oracle}), args.output, out)
    return 0 if an.oracle["passed"] else 1


COMMANDS = {"validate": cmd_validate, "analyze": cmd_analyze, "render": cmd_render,
            "oracle-check": cmd_oracle_check}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "render" and args.layers is not None:
            parse_layers(args.layers)
        return COMMANDS[args.command](args, out)
    except ParameterError as exc:
        parser.print_usage(err)
        err.write(dumps(_error_doc(exc)))
        return exc.exit_code
    except MedlinkError as exc:
        err.write(dumps(_error_doc(exc)))
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit code
        err.write(dumps(_error_doc(exc)))
        return 1


__all__ = ["dumps", "loads", "write_report", "read_report", "render_svg", "parse_layers", "LAYERS",
           "build_parser", "main"]
