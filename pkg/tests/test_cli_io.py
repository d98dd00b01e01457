import io
import json
import math
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from medlink import fixtures as F
from medlink.cli_io import dumps, loads, main, parse_layers, read_report, render_svg, write_report
from medlink.errors import ParameterError
from medlink.pipeline import AnalysisReport, build_report

from conftest import analysis

DATA = Path(__file__).resolve().parents[1] / "data"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


# -- validate -------------------------------------------------------------------

def test_validate_ok():
    code, out, _ = run("validate", DATA / "D2.json")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "ok" and doc["regions"] == ["L", "R"]


def test_validate_open_loop(tmp_path):
    doc = F.D2().to_dict()
    doc["regions"][1]["closed"] = False
    code, out, _ = run("validate", write(tmp_path, "open.json", doc))
    assert code == 2
    diag = json.loads(out)
    assert diag["status"] == "error" and diag["regions"] == ["R"]


def test_validate_overlap(tmp_path):
    doc = {"regions": [{"id": "a", "outer": F.ngon(1.0, (0, 0)).tolist()},
                       {"id": "b", "outer": F.ngon(1.0, (1.5, 0)).tolist()}]}
    code, out, _ = run("validate", write(tmp_path, "overlap.json", doc))
    assert code == 2
    assert set(json.loads(out)["regions"]) == {"a", "b"}


def test_validate_missing_file(tmp_path):
    code, out, _ = run("validate", tmp_path / "nope.json")
    assert code == 2


def test_validate_reports_shared_segments(tmp_path):
    code, out, _ = run("validate", write(tmp_path, "sq.json", F.abutting_squares()))
    assert code == 0
    assert len(json.loads(out)["shared"]) == 1


# -- analyze ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def d2_report_text():
    code, out, _ = run("analyze", DATA / "D2.json")
    assert code == 0
    return out


def test_analyze_d2(d2_report_text):
    doc = json.loads(d2_report_text)
    assert doc["linking"]["types"]["i"] >= 1
    assert doc["linking"]["kinds"]["mutual"] >= 1
    assert doc["spherical"]["count"] == 2
    assert doc["validation"]["passed"]
    assert doc["flags"]["spacing"] == 0.02


def test_analyze_e1():
    code, out, _ = run("analyze", DATA / "E1.json")
    doc = json.loads(out)
    assert code == 0
    assert doc["records"] == []
    assert doc["regions"]["E1"]["m_infinity_fraction"] == 1.0
    assert doc["spherical"]["count"] == 0


def test_analyze_writes_file(tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run("analyze", DATA / "E1.json", "-o", target)
    assert code == 0 and out == ""
    assert read_report(target).version


def test_analyze_is_deterministic(d2_report_text):
    _, again, _ = run("analyze", DATA / "D2.json")
    assert again == d2_report_text


def test_flags_echo_into_report():
    code, out, _ = run("analyze", DATA / "D2.json", "--spacing", "0.04", "--bounding", "box",
                       "--margin", "1", "--threshold-mode", "truncated", "--tau", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["flags"]["spacing"] == 0.04
    assert doc["flags"]["margin"] == 1.0
    assert doc["linking"]["threshold"] == {"mode": "truncated", "tau": 2.0}


def test_analyze_with_oracle():
    code, out, _ = run("analyze", DATA / "D2.json", "--oracle")
    assert code == 0
    oracle = json.loads(out)["oracle"]
    assert oracle["passed"]
    for reg in oracle["axes"].values():
        assert reg["hausdorff"] <= reg["bound"]
    assert oracle["links"]["matched"] == oracle["links"]["records"]


def test_oracle_check_command(tmp_path):
    code, out, _ = run("oracle-check", DATA / "E1.json")
    assert code == 0
    assert json.loads(out)["oracle"]["passed"]


def test_resolution_error_exit_code():
    code, _, err = run("analyze", DATA / "E1.json", "--spacing", "3")
    assert code == 3
    assert "suggested_spacing" in json.loads(err)


def test_threshold_without_tau_is_rejected():
    code, _, err = run("analyze", DATA / "D2.json", "--threshold-mode", "absolute")
    assert code == 2
    assert "usage" in err


# -- argument errors ----------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["analyze", "--frobnicate", "x.json"],
    ["analyze", "x.json", "--spacing", "-1"],
    ["render", "x.json", "--bounding", "circle"],
    [],
])
def test_invalid_flags_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "medlink", "validate", str(DATA / "E1.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "ok"


# -- rendering ------------------------------------------------------------------------

def layer_ids(svg):
    return re.findall(r'<g id="layer-([a-z_]+)"', svg)


def test_render_d2_has_mirror_polyline():
    code, svg, _ = run("render", DATA / "D2.json")
    assert code == 0
    assert svg.startswith("<svg")
    assert 'transform="scale(1,-1)"' in svg
    ext = svg.split('<g id="layer-external"')[1].split("</g>")[0]
    lines = re.findall(r'points="([^"]+)"', ext)
    assert lines
    near_axis = 0
    for pts in lines:
        xy = np.array([[float(v) for v in p.split(",")] for p in pts.split()])
        near_axis += np.all(np.abs(xy[:, 0]) <= 0.04)
    assert near_axis >= 1


def test_render_axes_only():
    code, svg, _ = run("render", DATA / "D2.json", "--layers", "axes")
    assert code == 0
    assert layer_ids(svg) == ["medial", "external"]


def test_render_all_layers_from_report(tmp_path, d2_report_text):
    rep = tmp_path / "d2.json"
    rep.write_text(d2_report_text)
    code, svg, _ = run("render", rep)
    assert code == 0
    assert layer_ids(svg) == ["regions", "boundaries", "medial", "external", "links",
                              "m_infinity", "b_infinity", "spherical"]


def test_render_unknown_layer():
    code, _, err = run("render", DATA / "D2.json", "--layers", "bogus")
    assert code == 2
    assert "usage" in err


def test_parse_layers():
    assert parse_layers("links,axes") == ("links", "medial", "external")
    assert parse_layers(None) == parse_layers("all")
    with pytest.raises(ParameterError):
        parse_layers("links,nope")


# -- serialization ------------------------------------------------------------------

def test_report_round_trip(tmp_path):
    rep = build_report(analysis("crescent"))
    path = tmp_path / "c.json"
    write_report(rep, path)
    back = read_report(path)
    assert back == AnalysisReport.from_dict(loads(dumps(rep)))
    assert dumps(back) == path.read_text()


def test_non_finite_values_survive():
    doc = {"a": math.inf, "b": -math.inf, "c": [1.0, math.nan]}
    back = loads(dumps(doc))
    assert back["a"] == math.inf and back["b"] == -math.inf and math.isnan(back["c"][1])
    json.loads(dumps(doc))  # strict JSON


def test_floats_use_twelve_significant_digits():
    text = dumps({"x": 1 / 3})
    assert json.loads(text)["x"] == 0.333333333333


def test_render_from_report_object():
    svg = render_svg(build_report(analysis("three_disks")), ("spherical",))
    assert layer_ids(svg) == ["spherical"]
