"""Hot numeric loops.

Each kernel exists twice: a numba ``@njit`` version and a vectorized numpy
version.  The numpy path is used when numba is missing or when the
``MEDLINK_DISABLE_NUMBA`` environment variable is set to a non-empty value
other than ``0``.  Both paths return identical results up to float rounding.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_flag = os.environ.get("MEDLINK_DISABLE_NUMBA", "")
USE_NUMBA = numba is not None and _flag in ("", "0")

# rows per chunk for the numpy fallbacks, keeps temporaries near 64 MB
_CHUNK_ELEMS = 8_000_000

# slack on the segment parameter so rays through a shared vertex still register
_T_EPS = 1e-9


def _chunks(n_rows: int, n_cols: int):
    step = max(1, _CHUNK_ELEMS // max(1, n_cols))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


# ---------------------------------------------------------------------------
# nearest point on a segment soup
# ---------------------------------------------------------------------------

def _nearest_on_segments_np(points, seg_a, seg_b):
    n = points.shape[0]
    dist = np.empty(n)
    near = np.empty((n, 2))
    which = np.empty(n, dtype=np.int64)
    d = seg_b - seg_a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd > 0.0, dd, 1.0)
    for lo, hi in _chunks(n, seg_a.shape[0]):
        p = points[lo:hi, None, :]
        t = np.einsum("ijk,jk->ij", p - seg_a[None], d) / dd[None]
        np.clip(t, 0.0, 1.0, out=t)
        q = seg_a[None] + t[..., None] * d[None]
        d2 = np.sum((p - q) ** 2, axis=2)
        k = np.argmin(d2, axis=1)
        rows = np.arange(hi - lo)
        dist[lo:hi] = np.sqrt(d2[rows, k])
        near[lo:hi] = q[rows, k]
        which[lo:hi] = k
    return dist, near, which


def _nearest_on_segments_nb(points, seg_a, seg_b):  # pragma: no cover - jitted
    n = points.shape[0]
    m = seg_a.shape[0]
    dist = np.empty(n)
    near = np.empty((n, 2))
    which = np.empty(n, dtype=np.int64)
    for i in range(n):
        px = points[i, 0]
        py = points[i, 1]
        best = np.inf
        bx = 0.0
        by = 0.0
        bj = 0
        for j in range(m):
            ax = seg_a[j, 0]
            ay = seg_a[j, 1]
            dx = seg_b[j, 0] - ax
            dy = seg_b[j, 1] - ay
            dd = dx * dx + dy * dy
            t = 0.0
            if dd > 0.0:
                t = ((px - ax) * dx + (py - ay) * dy) / dd
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            qx = ax + t * dx
            qy = ay + t * dy
            d2 = (px - qx) ** 2 + (py - qy) ** 2
            if d2 < best:
                best = d2
                bx = qx
                by = qy
                bj = j
        dist[i] = np.sqrt(best)
        near[i, 0] = bx
        near[i, 1] = by
        which[i] = bj
    return dist, near, which


# ---------------------------------------------------------------------------
# even-odd crossing parity
# ---------------------------------------------------------------------------

def _crossing_parity_np(points, seg_a, seg_b):
    n = points.shape[0]
    out = np.zeros(n, dtype=np.int64)
    ay, by = seg_a[:, 1], seg_b[:, 1]
    ax, bx = seg_a[:, 0], seg_b[:, 0]
    for lo, hi in _chunks(n, seg_a.shape[0]):
        px = points[lo:hi, 0:1]
        py = points[lo:hi, 1:2]
        straddle = (ay[None] > py) != (by[None] > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = ax[None] + (py - ay[None]) * (bx - ax)[None] / (by - ay)[None]
        hit = straddle & (px < xc)
        out[lo:hi] = np.sum(hit, axis=1) % 2
    return out


def _crossing_parity_nb(points, seg_a, seg_b):  # pragma: no cover - jitted
    n = points.shape[0]
    m = seg_a.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        px = points[i, 0]
        py = points[i, 1]
        c = 0
        for j in range(m):
            ay = seg_a[j, 1]
            by = seg_b[j, 1]
            if (ay > py) != (by > py):
                ax = seg_a[j, 0]
                bx = seg_b[j, 0]
                xc = ax + (py - ay) * (bx - ax) / (by - ay)
                if px < xc:
                    c += 1
        out[i] = c % 2
    return out


# ---------------------------------------------------------------------------
# ray casting against a segment soup
# ---------------------------------------------------------------------------

def _ray_hits_np(origins, dirs, seg_a, seg_b, s_min):
    n = origins.shape[0]
    s_out = np.full(n, np.inf)
    k_out = np.full(n, -1, dtype=np.int64)
    e = seg_b - seg_a
    for lo, hi in _chunks(n, seg_a.shape[0]):
        o = origins[lo:hi, None, :]
        dv = dirs[lo:hi, None, :]
        w = seg_a[None] - o
        den = dv[..., 0] * e[None, :, 1] - dv[..., 1] * e[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[..., 0] * e[None, :, 1] - w[..., 1] * e[None, :, 0]) / den
            t = (w[..., 0] * dv[..., 1] - w[..., 1] * dv[..., 0]) / den
        ok = (den != 0.0) & (s >= s_min) & (t >= -_T_EPS) & (t <= 1.0 + _T_EPS)
        s = np.where(ok, s, np.inf)
        k = np.argmin(s, axis=1)
        rows = np.arange(hi - lo)
        best = s[rows, k]
        s_out[lo:hi] = best
        k_out[lo:hi] = np.where(np.isfinite(best), k, -1)
    return s_out, k_out


def _ray_hits_nb(origins, dirs, seg_a, seg_b, s_min):  # pragma: no cover - jitted
    n = origins.shape[0]
    m = seg_a.shape[0]
    s_out = np.full(n, np.inf)
    k_out = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        ox = origins[i, 0]
        oy = origins[i, 1]
        dx = dirs[i, 0]
        dy = dirs[i, 1]
        best = np.inf
        kb = -1
        for j in range(m):
            ex = seg_b[j, 0] - seg_a[j, 0]
            ey = seg_b[j, 1] - seg_a[j, 1]
            den = dx * ey - dy * ex
            if den == 0.0:
                continue
            wx = seg_a[j, 0] - ox
            wy = seg_a[j, 1] - oy
            s = (wx * ey - wy * ex) / den
            if s < s_min or s >= best:
                continue
            t = (wx * dy - wy * dx) / den
            if t < -_T_EPS or t > 1.0 + _T_EPS:
                continue
            best = s
            kb = j
        s_out[i] = best
        k_out[i] = kb
    return s_out, k_out


# ---------------------------------------------------------------------------
# pairwise proper crossings inside one segment set
# ---------------------------------------------------------------------------

def _proper_crossings_np(seg_a, seg_b, end_tol):
    n = seg_a.shape[0]
    found = []
    e = seg_b - seg_a
    length = np.hypot(e[:, 0], e[:, 1])
    for lo, hi in _chunks(n, n):
        a = seg_a[lo:hi, None, :]
        ea = e[lo:hi, None, :]
        w = seg_a[None] - a
        den = ea[..., 0] * e[None, :, 1] - ea[..., 1] * e[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[..., 0] * e[None, :, 1] - w[..., 1] * e[None, :, 0]) / den
            t = (w[..., 0] * ea[..., 1] - w[..., 1] * ea[..., 0]) / den
        la = length[lo:hi, None]
        lb = length[None, :]
        with np.errstate(invalid="ignore"):
            ok = (
                (den != 0.0)
                & (s * la > end_tol) & ((1.0 - s) * la > end_tol)
                & (t * lb > end_tol) & ((1.0 - t) * lb > end_tol)
            )
        idx = np.arange(lo, hi)[:, None]
        ok &= np.arange(n)[None, :] > idx
        ii, jj = np.nonzero(ok)
        for i, j in zip(ii + lo, jj):
            found.append((i, j))
    if not found:
        return np.empty((0, 2), dtype=np.int64)
    return np.asarray(found, dtype=np.int64)


def _proper_crossings_nb(seg_a, seg_b, end_tol):  # pragma: no cover - jitted
    n = seg_a.shape[0]
    cap = 64
    out = np.empty((cap, 2), dtype=np.int64)
    c = 0
    for i in range(n):
        ax = seg_a[i, 0]
        ay = seg_a[i, 1]
        eax = seg_b[i, 0] - ax
        eay = seg_b[i, 1] - ay
        la = np.sqrt(eax * eax + eay * eay)
        for j in range(i + 1, n):
            ebx = seg_b[j, 0] - seg_a[j, 0]
            eby = seg_b[j, 1] - seg_a[j, 1]
            den = eax * eby - eay * ebx
            if den == 0.0:
                continue
            wx = seg_a[j, 0] - ax
            wy = seg_a[j, 1] - ay
            s = (wx * eby - wy * ebx) / den
            if s * la <= end_tol or (1.0 - s) * la <= end_tol:
                continue
            lb = np.sqrt(ebx * ebx + eby * eby)
            t = (wx * eay - wy * eax) / den
            if t * lb <= end_tol or (1.0 - t) * lb <= end_tol:
                continue
            if c == out.shape[0]:
                grown = np.empty((2 * c, 2), dtype=np.int64)
                grown[:c] = out[:c]
                out = grown
            out[c, 0] = i
            out[c, 1] = j
            c += 1
    return out[:c].copy()


if USE_NUMBA:
    _jit = numba.njit(cache=True)
    nearest_segment = _jit(_nearest_on_segments_nb)
    crossing_parity = _jit(_crossing_parity_nb)
    ray_hits = _jit(_ray_hits_nb)
    proper_crossings = _jit(_proper_crossings_nb)
else:
    nearest_segment = _nearest_on_segments_np
    crossing_parity = _crossing_parity_np
    ray_hits = _ray_hits_np
    proper_crossings = _proper_crossings_np

BACKEND = "numba" if USE_NUMBA else "numpy"


def nearest_on_segments(points, seg_a, seg_b):
    """Distance to and nearest point on a segment soup, per query point."""
    dist, near, _ = nearest_segment(points, seg_a, seg_b)
    return dist, near

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "nearest_on_segments",
    "nearest_segment",
    "crossing_parity",
    "ray_hits",
    "proper_crossings",
]
