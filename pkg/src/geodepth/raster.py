"""
Raster data model and PFM / sidecar I/O.

Rasters are stored as 32-bit floats in memory and on disk. Arrays are
indexed ``values[row, col]`` with row 0 at the top (north edge for height
maps, zenith for panoramas); the PFM bottom-to-top row order is handled
only inside :func:`read_pfm` / :func:`write_pfm`.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ContractError, DataError, FormatError, MetadataError

SENTINEL = -1.0

#: default camera height above the terrain at the grid center, meters
DEFAULT_EYE_HEIGHT = 2.5
#: default vertical voxel layer thickness, meters
DEFAULT_CELL_Z = 1.0


def _frozen(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=np.float32, copy=True)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ContractError(f"raster must be a non-empty 2-D grid, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_finite(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise DataError("raster contains NaN or Inf values")


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Overhead elevation raster in meters, centered on the camera geolocation.

    ``eye_height`` and ``cell_z`` carry optional sidecar metadata; ``None``
    means the downstream default applies.
    """

    values: np.ndarray
    gsd: float
    eye_height: float | None = None
    cell_z: float | None = None

    def __post_init__(self):
        arr = _frozen(self.values)
        _check_finite(arr)
        object.__setattr__(self, "values", arr)
        if not (math.isfinite(self.gsd) and self.gsd > 0):
            raise ContractError(f"gsd must be positive, got {self.gsd}")
        object.__setattr__(self, "gsd", float(self.gsd))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def replace(self, values) -> "HeightMap":
        return HeightMap(values, self.gsd, self.eye_height, self.cell_z)


@dataclass(frozen=True, eq=False)
class DepthPanorama:
    """Equirectangular depth image; every pixel is > 0 or exactly -1.

    Column ``c`` spans azimuth ``[c, c+1) * 360 / width`` degrees clockwise
    from north; row ``r`` spans elevation ``90 - [r, r+1) * 180 / height``.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values)
        _check_finite(arr)
        bad = (arr <= 0) & (arr != SENTINEL)
        if bad.any():
            raise DataError(f"{int(bad.sum())} depth values are non-positive but not the -1 sentinel")
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def hit_fraction(self) -> float:
        return float(np.mean(self.values != SENTINEL))


@dataclass(frozen=True, eq=False)
class PerspectiveDepthMap:
    """Pinhole depth cutout, same value domain as :class:`DepthPanorama`."""

    values: np.ndarray
    calib: Any = None  # Geocalibration; typed loosely to avoid an import cycle

    def __post_init__(self):
        arr = _frozen(self.values)
        _check_finite(arr)
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(rb"^(P[fF])\s+(\d+)\s+(\d+)\s+(\S+)\s")


def read_pfm(path) -> np.ndarray:
    """Decode a grayscale PFM file into a top-to-bottom float32 array."""
    data = Path(path).read_bytes()
    m = _HEADER_RE.match(data)
    if m is None:
        raise FormatError(f"{path}: not a PFM file (bad header)")
    magic, w, h, scale_tok = m.groups()
    if magic != b"Pf":
        raise FormatError(f"{path}: only single-channel 'Pf' PFM is supported, got {magic.decode()!r}")
    width, height = int(w), int(h)
    try:
        scale = float(scale_tok)
    except ValueError:
        raise FormatError(f"{path}: bad scale field {scale_tok!r}") from None
    if width <= 0 or height <= 0 or scale == 0 or not math.isfinite(scale):
        raise FormatError(f"{path}: invalid dimensions or scale")
    payload = data[m.end():]
    expected = width * height * 4
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return np.flipud(arr).astype(np.float32)


def write_pfm(path, values: np.ndarray) -> None:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise ContractError("PFM writer expects a 2-D array")
    height, width = arr.shape
    header = f"Pf\n{width} {height}\n-1.0\n".encode("ascii")
    body = np.ascontiguousarray(np.flipud(arr)).astype("<f4").tobytes()
    Path(path).write_bytes(header + body)


# ---------------------------------------------------------------------------
# sidecars
# ---------------------------------------------------------------------------

def sidecar_path(path) -> Path:
    """``scene.pfm`` -> ``scene.geo.json``."""
    return Path(path).with_suffix(".geo.json")


def calib_sidecar_path(path) -> Path:
    return Path(path).with_suffix(".calib.json")


_SIDECAR_KEYS = {"gsd_m", "eye_height_m", "vertical_voxel_m"}


def read_sidecar(path) -> dict:
    p = sidecar_path(path)
    if not p.exists():
        raise MetadataError(f"missing georeferencing sidecar {p}")
    try:
        meta = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise MetadataError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(meta, dict):
        raise MetadataError(f"{p}: expected a JSON object")
    unknown = set(meta) - _SIDECAR_KEYS
    if unknown:
        raise MetadataError(f"{p}: unknown keys {sorted(unknown)}")
    if "gsd_m" not in meta:
        raise MetadataError(f"{p}: gsd_m is required")
    for key, val in meta.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            raise MetadataError(f"{p}: {key} must be a positive number")
    return meta


def write_sidecar(path, hm: HeightMap) -> None:
    meta = {"gsd_m": hm.gsd}
    if hm.eye_height is not None:
        meta["eye_height_m"] = hm.eye_height
    if hm.cell_z is not None:
        meta["vertical_voxel_m"] = hm.cell_z
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


# ---------------------------------------------------------------------------
# public load / save
# ---------------------------------------------------------------------------

def load_raster(path, expected_kind: str = "depth"):
    """Load a PFM raster as a :class:`HeightMap` or :class:`DepthPanorama`.

    Height rasters require a ``.geo.json`` sidecar. Values are returned
    bit-identical to the file payload.
    """
    if expected_kind not in ("height", "depth"):
        raise ContractError(f"expected_kind must be 'height' or 'depth', got {expected_kind!r}")
    values = read_pfm(path)
    _check_finite(values)
    if expected_kind == "height":
        meta = read_sidecar(path)
        return HeightMap(
            values,
            gsd=float(meta["gsd_m"]),
            eye_height=meta.get("eye_height_m"),
            cell_z=meta.get("vertical_voxel_m"),
        )
    return DepthPanorama(values)


def load_depth(path) -> np.ndarray:
    """Load any finite depth-valued PFM (panorama, cutout, prediction) as an array."""
    values = read_pfm(path)
    _check_finite(values)
    return values


def save_raster(raster, path) -> None:
    if isinstance(raster, np.ndarray):
        write_pfm(path, raster)
        return
    write_pfm(path, raster.values)
    if isinstance(raster, HeightMap):
        write_sidecar(path, raster)
    elif isinstance(raster, PerspectiveDepthMap) and raster.calib is not None:
        calib_sidecar_path(path).write_text(json.dumps(raster.calib.to_dict(), indent=2) + "\n")


def normalize_height(h: HeightMap) -> HeightMap:
    """Shift the raster so its minimum is exactly zero."""
    vals = h.values
    if vals.size == 0 or not np.isfinite(vals).any():
        raise DataError("height map has no finite values")
    return h.replace(vals - vals.min())
