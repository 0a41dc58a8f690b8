"""
Height map -> voxel occupancy grid -> equirectangular depth panorama.

The camera sits at the horizontal center of the grid, ``eye_height``
meters above the terrain at the center pixel. Rays are sampled at
``step, 2*step, ...`` up to ``max_range``; the reported depth is the first
sample inside an occupied voxel or at/below the ground plane ``z = 0``.

Horizontal mapping from a camera-relative offset (east, north) in meters
to raster indices::

    col = floor(width / 2 + east / gsd)
    row = floor(height / 2 - north / gsd)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels
from .camera import ray_direction
from .errors import ContractError, DegenerateOriginError
from .raster import DEFAULT_CELL_Z, DEFAULT_EYE_HEIGHT, DepthPanorama, HeightMap


@dataclass(frozen=True)
class RayCastConfig:
    step: float
    max_range: float
    pano_width: int = 1024
    pano_height: int = 512
    eye_height: float = DEFAULT_EYE_HEIGHT
    cell_z: float = DEFAULT_CELL_Z

    def __post_init__(self):
        if not self.step > 0:
            raise ContractError("step must be positive")
        if not self.max_range > self.step:
            raise ContractError("max_range must exceed step")
        if self.pano_height <= 0 or self.pano_width != 2 * self.pano_height:
            raise ContractError(
                f"panorama must be 2:1, got {self.pano_width}x{self.pano_height}"
            )
        if not self.eye_height > 0:
            raise ContractError("eye_height must be positive")
        if not self.cell_z > 0:
            raise ContractError("cell_z must be positive")

    @property
    def n_steps(self) -> int:
        # small slack so max_range that is an exact multiple of step is included
        return int(math.floor(self.max_range / self.step + 1e-9))

    @classmethod
    def for_heightmap(cls, h: HeightMap, **overrides) -> "RayCastConfig":
        """Defaults derived from the raster: step = gsd/2, range = half diagonal.

        Sidecar metadata on ``h`` supplies eye height and layer thickness
        when not overridden. ``None`` overrides are ignored.
        """
        params = {
            "step": h.gsd / 2.0,
            "max_range": 0.5 * math.hypot(h.width, h.height) * h.gsd,
            "eye_height": h.eye_height if h.eye_height is not None else DEFAULT_EYE_HEIGHT,
            "cell_z": h.cell_z if h.cell_z is not None else DEFAULT_CELL_Z,
        }
        params.update({k: v for k, v in overrides.items() if v is not None})
        if "pano_height" in params and "pano_width" not in params:
            params["pano_width"] = 2 * params["pano_height"]
        elif "pano_width" in params and "pano_height" not in params:
            params["pano_height"] = params["pano_width"] // 2
        return cls(**params)


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Column-compressed occupancy: voxel (i, j, k) is occupied iff ``k < layers[j, i]``.

    ``i`` indexes columns (east), ``j`` rows (south), ``k`` vertical layers.
    """

    layers: np.ndarray
    cell_xy: float
    cell_z: float
    nz: int
    center_height: float = field(default=0.0)

    @property
    def nx(self) -> int:
        return self.layers.shape[1]

    @property
    def ny(self) -> int:
        return self.layers.shape[0]

    def occupancy(self, i: int, j: int, k: int) -> bool:
        return bool(k < self.layers[j, i])

    def dense(self) -> np.ndarray:
        """Boolean array indexed ``[j, i, k]`` (row, col, layer)."""
        k = np.arange(self.nz)
        return k[None, None, :] < self.layers[:, :, None]


def voxelize(h: HeightMap, cell_z: float = DEFAULT_CELL_Z) -> VoxelGrid:
    if not cell_z > 0:
        raise ContractError("cell_z must be positive")
    vals = h.values.astype(np.float64)
    if vals.min() != 0.0:
        raise ContractError("height map must be normalized (minimum 0) before voxelization")
    # layers = #{k >= 0 : h > k * cell_z}; start from ceil and repair rounding
    layers = np.maximum(np.ceil(vals / cell_z), 0).astype(np.int64)
    while True:
        over = vals > layers * cell_z
        if not over.any():
            break
        layers[over] += 1
    while True:
        under = (layers > 0) & ~(vals > (layers - 1) * cell_z)
        if not under.any():
            break
        layers[under] -= 1
    layers = layers.astype(np.int32)
    layers.setflags(write=False)
    nz = max(1, int(layers.max()))
    center = float(vals[h.height // 2, h.width // 2])
    return VoxelGrid(layers, h.gsd, float(cell_z), nz, center)


def panorama_pixel_angles(pano_w: int, pano_h: int) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth and elevation (degrees) at every panorama pixel center."""
    az = (np.arange(pano_w, dtype=np.float64) + 0.5) * (360.0 / pano_w)
    el = 90.0 - (np.arange(pano_h, dtype=np.float64) + 0.5) * (180.0 / pano_h)
    return np.meshgrid(az, el)


def panorama_ray_directions(pano_w: int, pano_h: int) -> np.ndarray:
    """(pano_h, pano_w, 3) unit rays in (north, east, up) order."""
    az, el = panorama_pixel_angles(pano_w, pano_h)
    return ray_direction(az, el)


def camera_origin(grid: VoxelGrid, cfg: RayCastConfig) -> tuple[float, float, float]:
    """Origin as (col, row) in cell units plus elevation in meters."""
    cx = grid.nx / 2.0
    cy = grid.ny / 2.0
    oz = grid.center_height + cfg.eye_height
    k = math.floor(oz / grid.cell_z)
    if k < grid.layers[grid.ny // 2, grid.nx // 2]:
        raise DegenerateOriginError(
            f"camera at z={oz:.3f} m lies inside an occupied voxel at the grid center"
        )
    return cx, cy, oz


def _check_cfg(grid: VoxelGrid, cfg: RayCastConfig) -> None:
    if grid.cell_z != cfg.cell_z:
        raise ContractError(
            f"grid layer thickness {grid.cell_z} does not match config cell_z {cfg.cell_z}"
        )


def cast_rays(grid: VoxelGrid, cfg: RayCastConfig, dirs: np.ndarray, threads: int | None = None) -> np.ndarray:
    """March arbitrary (N, 3) unit rays; returns float32 depths with -1 for misses."""
    _check_cfg(grid, cfg)
    cx, cy, oz = camera_origin(grid, cfg)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    out = np.empty(dirs.shape[0], dtype=np.float64)
    prev = numba.get_num_threads()
    if threads is not None:
        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        _kernels.march_rays(
            grid.layers, grid.cell_xy, grid.cell_z, cx, cy, oz,
            cfg.step, cfg.n_steps, dirs, out,
        )
    finally:
        numba.set_num_threads(prev)
    return out.astype(np.float32)


def render_panorama(grid: VoxelGrid, cfg: RayCastConfig, threads: int | None = None) -> DepthPanorama:
    """Render the north-aligned depth panorama seen from the grid center.

    ``threads`` bounds the worker count; the output does not depend on it.
    """
    dirs = panorama_ray_directions(cfg.pano_width, cfg.pano_height)
    depth = cast_rays(grid, cfg, dirs.reshape(-1, 3), threads=threads)
    return DepthPanorama(depth.reshape(cfg.pano_height, cfg.pano_width))


def heightfield_depth_at(source, azimuth: float, elevation: float, cfg: RayCastConfig) -> float:
    """Depth along a single (azimuth, elevation) ray, or -1.0.

    ``source`` may be a :class:`VoxelGrid` or a normalized :class:`HeightMap`.
    """
    grid = source if isinstance(source, VoxelGrid) else voxelize(source, cfg.cell_z)
    d = ray_direction(np.array([azimuth], dtype=np.float64), np.array([elevation], dtype=np.float64))
    return float(cast_rays(grid, cfg, d)[0])
