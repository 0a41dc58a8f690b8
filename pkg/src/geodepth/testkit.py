"""
Procedural scenes and reference renderers.

The oracles here are deliberately naive: plain Python loops, one sample at
a time, testing ``height > k * cell_z`` straight off the height raster.
They share only the ray-direction convention with the fast path, so any
disagreement points at the marching or voxelization code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import Geocalibration, pixel_directions
from .errors import DegenerateOriginError, SceneSpecError
from .raster import DepthPanorama, HeightMap, PerspectiveDepthMap
from .voxel import RayCastConfig, panorama_ray_directions

SCENE_KINDS = ("flat", "wall", "box-field", "ramp")

_DEFAULTS = {
    "flat": {},
    "wall": {"distance": 20.0, "wall_height": 10.0, "thickness": 1.0, "side": "north"},
    "box-field": {
        "n_boxes": 24,
        "min_size": 3.0,
        "max_size": 12.0,
        "min_height": 4.0,
        "max_height": 30.0,
        "clear_radius": 6.0,
    },
    "ramp": {"slope": 0.1, "axis": "east"},
}


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    width: int = 64
    height: int = 64
    gsd: float = 1.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def resolved_params(self) -> dict:
        if self.kind not in SCENE_KINDS:
            raise SceneSpecError(f"unknown scene kind {self.kind!r}; expected one of {SCENE_KINDS}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise SceneSpecError(f"unknown {self.kind} parameters {sorted(unknown)}")
        return {**_DEFAULTS[self.kind], **self.params}


def generate_scene(spec: SceneSpec) -> HeightMap:
    """Build a normalized height map (minimum 0) from ``spec``."""
    p = spec.resolved_params()
    if spec.width <= 0 or spec.height <= 0 or not spec.gsd > 0:
        raise SceneSpecError("grid dimensions and gsd must be positive")
    for key, val in p.items():
        if isinstance(val, (int, float)) and key != "slope" and val < 0:
            raise SceneSpecError(f"{key} must be non-negative")
    h = np.zeros((spec.height, spec.width), dtype=np.float64)

    if spec.kind == "wall":
        _place_wall(h, spec, p)
    elif spec.kind == "box-field":
        _place_boxes(h, spec, p)
    elif spec.kind == "ramp":
        if p["axis"] == "east":
            h[:, :] = p["slope"] * spec.gsd * np.arange(spec.width)[None, :]
        elif p["axis"] == "north":
            h[:, :] = p["slope"] * spec.gsd * np.arange(spec.height)[::-1, None]
        else:
            raise SceneSpecError(f"ramp axis must be 'east' or 'north', got {p['axis']!r}")
        h -= h.min()
    return HeightMap(h, spec.gsd)


def _place_wall(h: np.ndarray, spec: SceneSpec, p: dict) -> None:
    """Full-width wall whose near face lies ``distance`` meters from the grid center.

    Distances are snapped to whole cells.
    """
    d = int(round(p["distance"] / spec.gsd))
    t = max(1, int(round(p["thickness"] / spec.gsd)))
    if d < 1 or not p["wall_height"] > 0:
        raise SceneSpecError("wall distance must be at least one cell and height positive")
    half_w, half_h = spec.width // 2, spec.height // 2
    side = p["side"]
    # row r covers north offsets (H/2 - r - 1, H/2 - r]; col c covers east [c - W/2, c - W/2 + 1)
    if side == "north":
        lo, hi = half_h - d - t, half_h - d
        if lo < 0:
            raise SceneSpecError("wall exceeds grid bounds")
        h[lo:hi, :] = p["wall_height"]
    elif side == "south":
        lo, hi = half_h + d, half_h + d + t
        if hi > spec.height:
            raise SceneSpecError("wall exceeds grid bounds")
        h[lo:hi, :] = p["wall_height"]
    elif side == "east":
        lo, hi = half_w + d, half_w + d + t
        if hi > spec.width:
            raise SceneSpecError("wall exceeds grid bounds")
        h[:, lo:hi] = p["wall_height"]
    elif side == "west":
        lo, hi = half_w - d - t, half_w - d
        if lo < 0:
            raise SceneSpecError("wall exceeds grid bounds")
        h[:, lo:hi] = p["wall_height"]
    else:
        raise SceneSpecError(f"wall side must be north/south/east/west, got {side!r}")


def _place_boxes(h: np.ndarray, spec: SceneSpec, p: dict) -> None:
    rng = np.random.default_rng(spec.seed)
    lo_sz = max(1, int(round(p["min_size"] / spec.gsd)))
    hi_sz = max(lo_sz, int(round(p["max_size"] / spec.gsd)))
    if hi_sz >= min(spec.width, spec.height):
        raise SceneSpecError("box size exceeds grid bounds")
    if p["max_height"] < p["min_height"]:
        raise SceneSpecError("max_height must be >= min_height")
    clear = p["clear_radius"] / spec.gsd
    cx, cy = spec.width / 2.0, spec.height / 2.0
    placed = 0
    attempts = 0
    while placed < int(p["n_boxes"]) and attempts < 100 * max(1, int(p["n_boxes"])):
        attempts += 1
        w = int(rng.integers(lo_sz, hi_sz + 1))
        d = int(rng.integers(lo_sz, hi_sz + 1))
        c0 = int(rng.integers(0, spec.width - w + 1))
        r0 = int(rng.integers(0, spec.height - d + 1))
        height = float(rng.uniform(p["min_height"], p["max_height"]))
        # nearest point of the box footprint to the camera
        nx = min(max(cx, c0), c0 + w) - cx
        ny = min(max(cy, r0), r0 + d) - cy
        if math.hypot(nx, ny) < clear:
            continue
        h[r0:r0 + d, c0:c0 + w] = np.maximum(h[r0:r0 + d, c0:c0 + w], height)
        placed += 1


# ---------------------------------------------------------------------------
# reference renderers
# ---------------------------------------------------------------------------

def _reference_origin(h: HeightMap, cfg: RayCastConfig) -> tuple[float, float, float]:
    vals = h.values
    oz = float(vals[h.height // 2, h.width // 2]) + cfg.eye_height
    k = math.floor(oz / cfg.cell_z)
    if float(vals[h.height // 2, h.width // 2]) > k * cfg.cell_z:
        raise DegenerateOriginError("camera origin inside an occupied voxel")
    return h.width / 2.0, h.height / 2.0, oz


def reference_march(heights: list, gsd: float, origin, direction, cfg: RayCastConfig) -> float:
    """March one ray through the raw height rows; returns depth or -1.0."""
    cx, cy, oz = origin
    dn, de, dz = (float(c) for c in direction)
    n_rows, n_cols = len(heights), len(heights[0])
    for n in range(1, cfg.n_steps + 1):
        t = n * cfg.step
        z = oz + t * dz
        if z <= 0.0:
            return t
        col = math.floor(cx + (t * de) / gsd)
        row = math.floor(cy - (t * dn) / gsd)
        if 0 <= col < n_cols and 0 <= row < n_rows:
            k = math.floor(z / cfg.cell_z)
            if heights[row][col] > k * cfg.cell_z:
                return t
    return -1.0


def oracle_render(h: HeightMap, cfg: RayCastConfig) -> DepthPanorama:
    """Triple-loop reference for :func:`geodepth.voxel.render_panorama`."""
    heights = h.values.astype(np.float64).tolist()
    origin = _reference_origin(h, cfg)
    dirs = panorama_ray_directions(cfg.pano_width, cfg.pano_height).tolist()
    out = np.empty((cfg.pano_height, cfg.pano_width), dtype=np.float32)
    for r in range(cfg.pano_height):
        for c in range(cfg.pano_width):
            out[r, c] = reference_march(heights, h.gsd, origin, dirs[r][c], cfg)
    return DepthPanorama(out)


def oracle_perspective(h: HeightMap, calib: Geocalibration, cfg: RayCastConfig, out_w: int, out_h: int) -> PerspectiveDepthMap:
    """Cast one ray per cutout pixel directly against the height map."""
    heights = h.values.astype(np.float64).tolist()
    origin = _reference_origin(h, cfg)
    dirs = pixel_directions(calib, out_w, out_h).tolist()
    out = np.empty((out_h, out_w), dtype=np.float32)
    for v in range(out_h):
        for u in range(out_w):
            out[v, u] = reference_march(heights, h.gsd, origin, dirs[v][u], cfg)
    return PerspectiveDepthMap(out, calib)


def smooth_region_mask(depth: np.ndarray, step: float, jump_factor: float = 5.0) -> np.ndarray:
    """Pixels at least one pixel away from sentinel edges and depth jumps > ``jump_factor * step``."""
    finite = depth > 0
    bad = ~finite
    d = np.where(finite, depth.astype(np.float64), np.nan)
    for axis in (0, 1):
        diff = np.abs(np.diff(d, axis=axis))
        edge = ~(diff <= jump_factor * step)  # NaN comparisons count as edges
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        bad[tuple(lo)] |= edge
        bad[tuple(hi)] |= edge
    # grow by one pixel in all eight directions
    grown = bad.copy()
    padded = np.pad(bad, 1, constant_values=False)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            grown |= padded[1 + dr:1 + dr + bad.shape[0], 1 + dc:1 + dc + bad.shape[1]]
    return ~grown
