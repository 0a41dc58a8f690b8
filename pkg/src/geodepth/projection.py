"""
Equirectangular panorama <-> perspective cutout resampling.

Continuous panorama coordinates put pixel edges at integers, so column
``c`` has its center at ``c + 0.5``::

    col = azimuth / 360 * pano_w
    row = (90 - elevation) / 180 * pano_h
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .camera import (
    Geocalibration,
    _apply_roll_pitch,
    _camera_rays,
    _normalize,
    direction_angles,
    ray_direction,
)
from .errors import ContractError
from .raster import DepthPanorama, PerspectiveDepthMap

# yaw offsets closer than this to a whole column are treated as whole
_SHIFT_SNAP = 1e-9


def direction_to_pano_coords(d, pano_w: int, pano_h: int):
    """Continuous (col, row) of unit direction(s) ``d`` in (north, east, up) order."""
    az, el = direction_angles(d)
    col = az / 360.0 * pano_w
    row = (90.0 - el) / 180.0 * pano_h
    if np.ndim(col) == 0:
        return float(col), float(row)
    return col, row


def pano_coords_to_direction(col, row, pano_w: int, pano_h: int) -> np.ndarray:
    az = np.asarray(col, dtype=np.float64) * (360.0 / pano_w)
    el = 90.0 - np.asarray(row, dtype=np.float64) * (180.0 / pano_h)
    return ray_direction(az, el)


def rotate_columns(pano: DepthPanorama, theta: float) -> DepthPanorama:
    """Re-center the panorama on heading ``theta``: new column c shows old column c + k.

    ``k`` is ``theta`` in whole columns (rounded).
    """
    k = int(round(theta * pano.width / 360.0))
    return DepthPanorama(np.roll(pano.values, -k, axis=1))


def relative_sample_coords(calib: Geocalibration, out_w: int, out_h: int, pano_w: int, pano_h: int):
    """Yaw-free sampling coordinates for a cutout, flattened in row-major pixel order.

    Returns ``(cols, rows)`` as array-index coordinates (pixel centers at
    integers). Yaw enters later as a column offset, see :func:`yaw_shift`.
    """
    u, v = np.meshgrid(np.arange(out_w), np.arange(out_h))
    rays = _normalize(_apply_roll_pitch(_camera_rays(calib.fov, out_w, out_h, u, v), calib.pitch, calib.roll))
    col, row = direction_to_pano_coords(rays.reshape(-1, 3), pano_w, pano_h)
    return np.ascontiguousarray(col - 0.5), np.ascontiguousarray(row - 0.5)


def yaw_shift(yaw: float, pano_w: int) -> tuple[int, float]:
    """Split a yaw into whole panorama columns plus a fractional remainder."""
    s = yaw * pano_w / 360.0
    n = int(round(s))
    frac = s - n
    if abs(frac) < _SHIFT_SNAP:
        frac = 0.0
    return n, frac


def extract_cutout(pano: DepthPanorama, calib: Geocalibration, out_w: int, out_h: int) -> PerspectiveDepthMap:
    """Resample a pinhole cutout from ``pano`` under ``calib``.

    Bilinear where all four neighbors are finite; otherwise the nearest
    finite neighbor; -1 when all four are sentinels. Columns wrap at the
    0/360 seam, rows clamp at the poles.
    """
    if out_w <= 0 or out_h <= 0:
        raise ContractError("cutout dimensions must be positive")
    cols, rows = relative_sample_coords(calib, out_w, out_h, pano.width, pano.height)
    n, frac = yaw_shift(calib.yaw, pano.width)
    if frac:
        cols = cols + frac
    out = np.empty(cols.shape[0], dtype=np.float64)
    _kernels.sample_pano(pano.values, cols, rows, n, out)
    return PerspectiveDepthMap(out.astype(np.float32).reshape(out_h, out_w), calib)
