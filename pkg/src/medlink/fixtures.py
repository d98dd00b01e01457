"""Named fixture configurations used by the tests, the acceptance suite and the CLI."""
from __future__ import annotations

import math

import numpy as np

from .config import Configuration, load_configuration


def ellipse(a=2.0, b=1.0, center=(0.0, 0.0), n=256, phase=0.0) -> np.ndarray:
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False) + phase
    return np.column_stack([center[0] + a * np.cos(t), center[1] + b * np.sin(t)])


def ngon(radius=1.0, center=(0.0, 0.0), n=64) -> np.ndarray:
    return ellipse(radius, radius, center, n)


def rectangle(w, h, origin=(0.0, 0.0)) -> np.ndarray:
    x0, y0 = origin
    return np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]], dtype=float)


def rotate(points, angle, center=(0.0, 0.0)) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    p = np.asarray(points, dtype=float) - center
    return p @ np.array([[c, s], [-s, c]]) + center


def blob(coeffs, center=(0.0, 0.0), radius=1.0, n=256, rotation=0.0) -> np.ndarray:
    """Star-shaped smooth curve r(t) = radius * (1 + sum a_k cos(k t + p_k))."""
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    r = np.ones_like(t)
    for k, (amp, ph) in coeffs.items():
        r += amp * np.cos(k * t + ph)
    r *= radius
    pts = np.column_stack([r * np.cos(t + rotation), r * np.sin(t + rotation)])
    return pts + np.asarray(center, dtype=float)


def crescent_outline(center=(0.0, 0.0), n=400, depth=0.5, width=0.55, rotation=0.0,
                     skew=0.45) -> np.ndarray:
    """Smooth bean whose indentation opens towards +x (before rotation).

    The indentation is a Gaussian notch in the polar radius, centred
    slightly off the x axis (``skew``) and paired with a mild second
    harmonic so the shape has no mirror symmetry.
    """
    t = np.linspace(-math.pi, math.pi, n, endpoint=False)
    r = 1.0 + 0.06 * np.cos(2 * t + 0.7) - depth * np.exp(-((t - skew) / width) ** 2)
    pts = np.column_stack([r * np.cos(t), 0.8 * r * np.sin(t)])
    return rotate(pts, rotation) + np.asarray(center, dtype=float)


def _region(rid, pts, corners=(), rigid=False, holes=()):
    return {"id": rid, "outer": np.asarray(pts).tolist(), "holes": [np.asarray(h).tolist() for h in holes],
            "corners": list(corners), "rigid": rigid}


def _config(regions, shared=(), bounding=None) -> Configuration:
    doc = {"regions": regions, "shared": list(shared)}
    if bounding is not None:
        doc["bounding"] = bounding
    return load_configuration(doc)


def E1(bounding=None) -> Configuration:
    return _config([_region("E1", ellipse(2.0, 1.0))], bounding=bounding)


def D2(bounding=None) -> Configuration:
    return _config([_region("L", ngon(1.0, (-3.0, 0.0))), _region("R", ngon(1.0, (3.0, 0.0)))],
                   bounding=bounding)


def disk(n=256) -> Configuration:
    return _config([_region("disk", ngon(1.0, n=n))])


def square(side=1.0) -> Configuration:
    return _config([_region("square", rectangle(side, side), corners=range(4))])


def rect4x2() -> Configuration:
    return _config([_region("rect", rectangle(4.0, 2.0, (-2.0, -1.0)), corners=range(4))])


def l_shape() -> Configuration:
    pts = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]
    return _config([_region("L", pts, corners=range(6))])


def crescent() -> Configuration:
    return _config([_region("crescent", crescent_outline())])


def three_disks(side=6.0) -> Configuration:
    h = side / math.sqrt(3.0)
    centers = [(h * math.cos(a), h * math.sin(a)) for a in (math.pi / 2, math.pi * 7 / 6, math.pi * 11 / 6)]
    return _config([_region(f"D{k}", ngon(1.0, c)) for k, c in enumerate(centers)])


def abutting_squares(rigid_right=False, declare=True) -> dict:
    """Document for two unit squares sharing the edge x = 1 (not loaded)."""
    left = rectangle(1.0, 1.0)
    right = rectangle(1.0, 1.0, (1.0, 0.0))
    doc = {"regions": [_region("A", left, range(4)), _region("B", right, range(4), rigid=rigid_right)],
           "shared": []}
    if declare:
        # A's edge 1->2 runs (1,0)->(1,1); B's edge 3->0 runs (1,1)->(1,0)
        doc["shared"] = [{"a": "A", "b": "B", "rangeA": [1, 2], "rangeB": [3, 0]}]
    return doc


def flexible_on_rigid() -> dict:
    """Document: a flexible unit square resting on the straight side of a rigid slab."""
    slab = [[1.0, -1.0], [2.0, -1.0], [2.0, 2.0], [1.0, 2.0], [1.0, 1.0], [1.0, 0.0]]
    return {"regions": [_region("A", rectangle(1.0, 1.0), range(4)),
                        _region("B", slab, range(4), rigid=True)],
            "shared": [{"a": "A", "b": "B", "rangeA": [1, 2], "rangeB": [4, 5]}]}


def random_blobs(seed: int, count: int = 1, n=256):
    """Smooth random star-shaped blobs placed on a loose grid without overlap."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        coeffs = {2: (rng.uniform(0.08, 0.22), rng.uniform(0, 2 * math.pi)),
                  3: (rng.uniform(0.0, 0.07), rng.uniform(0, 2 * math.pi))}
        center = (4.0 * (k % 2) - 2.0 * (count > 1), 4.0 * (k // 2) - 2.0 * (count > 2))
        out.append(_region(f"B{k}", blob(coeffs, center, rng.uniform(0.9, 1.2), n)))
    return _config(out)


def five_types() -> Configuration:
    """One configuration exhibiting every generic planar linking type.

    Left to right: two facing blobs (type i), an ellipse tip pointing at a
    blob flank (type ii), a rounded triangle whose Y-branch faces a blob
    (type iii), three blobs around a common centre (type iv) and a bean
    with an indentation (type v).
    """
    regions = [
        # type i: two slightly flattened, tilted ellipses facing each other
        _region("i_a", ellipse(0.9, 1.2, (-1.3, 0.0), phase=0.1)),
        _region("i_b", ellipse(1.0, 1.3, (1.4, 0.25), phase=0.3)),
        # type ii: ellipse tip pointing right at the flank of a big ellipse
        _region("ii_tip", rotate(ellipse(1.2, 0.45, (0.0, 0.0)), 0.05) + [0.0, 5.0]),
        _region("ii_flank", ellipse(0.9, 1.6, (2.6, 5.2))),
        # type iii: rounded triangle with a flat side facing a blob
        _region("iii_tri", rounded_triangle((0.0, 10.0), 1.6, 0.45, rotation=math.pi / 2 + 0.06)),
        _region("iii_blob", ellipse(1.0, 1.5, (2.5, 10.3))),
        # type iv: three blobs around a centre
        # (major axes tangential, so no two tips face each other)
        *[_region(f"iv_{k}", rotate(ellipse(0.8, 0.65 + 0.05 * k), -(a + math.pi / 2))
                  + [12.0 + 2.2 * math.cos(a), 5.0 + 2.2 * math.sin(a)])
          for k, a in enumerate((math.pi / 2 + 0.05, math.pi * 7 / 6, math.pi * 11 / 6 - 0.04))],
        # type v: indentation
        _region("v_bean", crescent_outline((12.0, 11.0), rotation=0.0)),
    ]
    return _config(regions)


def rounded_triangle(center, size, fillet, rotation=0.0, spacing=0.02) -> np.ndarray:
    """Equilateral triangle with circumradius ``size`` and filleted corners."""
    from .config import Region, smooth_corners
    from .geometry import PolyLoop

    ang = rotation + np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
    tri = np.column_stack([size * np.cos(ang), size * np.sin(ang)]) + np.asarray(center, dtype=float)
    reg = Region("t", PolyLoop(tri, (0, 1, 2)).ccw())
    return smooth_corners(reg, fillet, spacing / 2).outer.vertices


ALL = {
    "E1": E1,
    "D2": D2,
    "disk": disk,
    "square": square,
    "rect4x2": rect4x2,
    "l_shape": l_shape,
    "crescent": crescent,
    "three_disks": three_disks,
    "five_types": five_types,
}
