import functools

import numpy as np
import pytest

from medlink import fixtures as F
from medlink.pipeline import AnalysisOptions, run_analysis

SPACING = 0.02


@functools.lru_cache(maxsize=None)
def analysis(name: str, spacing: float = SPACING):
    """Full pipeline run on a named fixture, shared across test modules."""
    return run_analysis(F.ALL[name](), AnalysisOptions(spacing=spacing))


def element_with_foot(sheet, foot, tol=1e-6):
    d = np.hypot(*(sheet.foot - np.asarray(foot)).T)
    k = int(np.argmin(d))
    assert d[k] <= tol, f"no element with foot near {foot} (closest {d[k]:.3g})"
    return k


@pytest.fixture
def d2():
    return analysis("D2")


@pytest.fixture
def e1():
    return analysis("E1")


# acceptance criterion number -> (passed, detail); filled by test_acceptance
RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
