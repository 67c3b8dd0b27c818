"""Hot numeric kernels: vessel rasterization and filter-bank image features.

Each kernel is written as a plain-Python/numpy loop nest and JIT-compiled
with numba when available. Setting ``ANGIODIFF_NUMBA=0`` (or missing numba)
selects the interpreted fallback, which runs the *same* function body, so
both paths produce bit-identical results (no fastmath). See
``benchmarks/benchmark_kernels.py`` for the speed comparison.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAS_NUMBA = False

USE_NUMBA = _HAS_NUMBA and os.environ.get("ANGIODIFF_NUMBA", "1") != "0"


def _jit(fn):
    return njit(cache=True)(fn) if USE_NUMBA else fn


def draw_segments_py(canvas, segments):
    """Accumulate thick soft-edged line segments into ``canvas`` (additive).

    ``segments`` rows are (x0, y0, x1, y1, radius, weight) in pixel
    coordinates. Coverage falls off linearly over one pixel at the rim,
    giving cheap anti-aliasing.
    """
    h, w = canvas.shape
    for k in range(segments.shape[0]):
        x0 = segments[k, 0]
        y0 = segments[k, 1]
        x1 = segments[k, 2]
        y1 = segments[k, 3]
        r = segments[k, 4]
        weight = segments[k, 5]
        if r <= 0.0 or weight == 0.0:
            continue
        pad = r + 1.0
        ilo = int(max(0.0, math.floor(min(y0, y1) - pad)))
        ihi = int(min(h - 1.0, math.ceil(max(y0, y1) + pad)))
        jlo = int(max(0.0, math.floor(min(x0, x1) - pad)))
        jhi = int(min(w - 1.0, math.ceil(max(x0, x1) + pad)))
        dx = x1 - x0
        dy = y1 - y0
        seg_len2 = dx * dx + dy * dy
        for i in range(ilo, ihi + 1):
            for j in range(jlo, jhi + 1):
                px = j - x0
                py = i - y0
                if seg_len2 > 0.0:
                    s = (px * dx + py * dy) / seg_len2
                    if s < 0.0:
                        s = 0.0
                    elif s > 1.0:
                        s = 1.0
                else:
                    s = 0.0
                ex = px - s * dx
                ey = py - s * dy
                dist = math.sqrt(ex * ex + ey * ey)
                cover = (r + 0.5 - dist) if dist > r - 0.5 else 1.0
                if cover <= 0.0:
                    continue
                if cover > 1.0:
                    cover = 1.0
                canvas[i, j] += weight * cover
    return canvas


def filterbank_features_py(img, grid, n_orient, n_hist):
    """Hand-crafted embedding: grid block means, gradient-orientation
    energies, and an intensity histogram. ``img`` is float64 in [0, 1]."""
    h, w = img.shape
    dim = grid * grid + n_orient + n_hist
    out = np.zeros(dim, dtype=np.float64)

    # block means over a grid x grid partition
    for bi in range(grid):
        i0 = bi * h // grid
        i1 = (bi + 1) * h // grid
        for bj in range(grid):
            j0 = bj * w // grid
            j1 = (bj + 1) * w // grid
            acc = 0.0
            for i in range(i0, i1):
                for j in range(j0, j1):
                    acc += img[i, j]
            out[bi * grid + bj] = acc / ((i1 - i0) * (j1 - j0))

    # gradient-orientation energy (central differences, interior pixels)
    base = grid * grid
    bin_width = math.pi / n_orient
    npix = (h - 2) * (w - 2)
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            gx = 0.5 * (img[i, j + 1] - img[i, j - 1])
            gy = 0.5 * (img[i + 1, j] - img[i - 1, j])
            e = gx * gx + gy * gy
            if e == 0.0:
                continue
            theta = math.atan2(gy, gx)
            if theta < 0.0:
                theta += math.pi
            if theta >= math.pi:
                theta = 0.0
            b = int(theta / bin_width)
            if b >= n_orient:
                b = n_orient - 1
            out[base + b] += e
    for b in range(n_orient):
        out[base + b] /= npix

    # intensity histogram over [0, 1]
    base = grid * grid + n_orient
    for i in range(h):
        for j in range(w):
            b = int(img[i, j] * n_hist)
            if b >= n_hist:
                b = n_hist - 1
            if b < 0:
                b = 0
            out[base + b] += 1.0
    for b in range(n_hist):
        out[base + b] /= h * w
    return out


def box_resize_py(img, side):
    """Area-average resize of a square image to ``side`` x ``side``."""
    h, w = img.shape
    out = np.zeros((side, side), dtype=np.float64)
    for bi in range(side):
        i0 = bi * h // side
        i1 = (bi + 1) * h // side
        if i1 <= i0:
            i1 = i0 + 1
        for bj in range(side):
            j0 = bj * w // side
            j1 = (bj + 1) * w // side
            if j1 <= j0:
                j1 = j0 + 1
            acc = 0.0
            for i in range(i0, i1):
                for j in range(j0, j1):
                    acc += img[i, j]
            out[bi, bj] = acc / ((i1 - i0) * (j1 - j0))
    return out


draw_segments = _jit(draw_segments_py)
filterbank_features = _jit(filterbank_features_py)
box_resize = _jit(box_resize_py)
