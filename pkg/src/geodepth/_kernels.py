"""Compiled inner loops. Kept free of Python objects so numba can cache them."""

import math

import numba
import numpy as np

# the TBB layer is probed first by default and warns on older installs
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@numba.njit(parallel=True, cache=True)
def march_rays(layers, gsd, cell_z, cx, cy, oz, step, n_steps, dirs, out):
    """Uniform-step ray march against a column-layer voxel grid.

    ``layers[row, col]`` is the number of occupied layers in that column;
    ``(cx, cy)`` is the origin in cell units (col axis east, row axis south).
    Writes the first hit distance, or -1, into ``out``.
    """
    n_rows, n_cols = layers.shape
    for idx in numba.prange(dirs.shape[0]):
        dn = dirs[idx, 0]
        de = dirs[idx, 1]
        dz = dirs[idx, 2]
        depth = -1.0
        for n in range(1, n_steps + 1):
            t = n * step
            z = oz + t * dz
            if z <= 0.0:
                depth = t
                break
            col = math.floor(cx + (t * de) / gsd)
            row = math.floor(cy - (t * dn) / gsd)
            if 0 <= col < n_cols and 0 <= row < n_rows:
                k = math.floor(z / cell_z)
                if k < layers[row, col]:
                    depth = t
                    break
        out[idx] = depth


@numba.njit(cache=True)
def _sample_one(pano, x, y, shift):
    n_rows, n_cols = pano.shape
    x0 = math.floor(x)
    y0 = math.floor(y)
    fx = x - x0
    fy = y - y0
    c0 = (x0 + shift) % n_cols
    c1 = (c0 + 1) % n_cols
    r0 = min(max(y0, 0), n_rows - 1)
    r1 = min(max(y0 + 1, 0), n_rows - 1)
    v00 = pano[r0, c0]
    v01 = pano[r0, c1]
    v10 = pano[r1, c0]
    v11 = pano[r1, c1]
    if v00 > 0.0 and v01 > 0.0 and v10 > 0.0 and v11 > 0.0:
        a = np.float64(v00)
        b = np.float64(v01)
        c = np.float64(v10)
        d = np.float64(v11)
        # lerp form is exact for equal neighbors
        top = a + fx * (b - a)
        bot = c + fx * (d - c)
        val = top + fy * (bot - top)
        lo = min(min(a, b), min(c, d))
        hi = max(max(a, b), max(c, d))
        return min(max(val, lo), hi)
    # nearest finite neighbor; fixed scan order breaks distance ties
    best = -1.0
    best_d = np.inf
    if v00 > 0.0:
        dd = fx * fx + fy * fy
        if dd < best_d:
            best_d = dd
            best = np.float64(v00)
    if v01 > 0.0:
        dd = (1.0 - fx) * (1.0 - fx) + fy * fy
        if dd < best_d:
            best_d = dd
            best = np.float64(v01)
    if v10 > 0.0:
        dd = fx * fx + (1.0 - fy) * (1.0 - fy)
        if dd < best_d:
            best_d = dd
            best = np.float64(v10)
    if v11 > 0.0:
        dd = (1.0 - fx) * (1.0 - fx) + (1.0 - fy) * (1.0 - fy)
        if dd < best_d:
            best_d = dd
            best = np.float64(v11)
    return best


@numba.njit(parallel=True, cache=True)
def sample_pano(pano, xs, ys, shift, out):
    """Sentinel-aware bilinear lookup at continuous index coordinates.

    ``xs``/``ys`` are array-index coordinates (pixel centers at integers);
    ``shift`` is an integer column offset added before wrapping.
    """
    for idx in numba.prange(xs.shape[0]):
        out[idx] = _sample_one(pano, xs[idx], ys[idx], shift)


@numba.njit(cache=True)
def sample_pano_mae(pano, xs, ys, shift, query):
    """Sample a cutout and score it against ``query`` in one pass.

    Returns (sum of |diff| over mutually valid pixels, count). The sum runs
    in pixel order so the score is reproducible.
    """
    total = 0.0
    count = 0
    for idx in range(xs.shape[0]):
        q = query[idx]
        if q <= 0.0:
            continue
        v = np.float32(_sample_one(pano, xs[idx], ys[idx], shift))
        if v <= 0.0:
            continue
        total += abs(np.float64(v) - np.float64(q))
        count += 1
    return total, count
