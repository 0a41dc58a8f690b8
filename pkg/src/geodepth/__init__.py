"""Metric depth from overhead height rasters: voxel ray casting, cutouts, evaluation."""

__version__ = "0.1.0"

from .camera import Geocalibration, pixel_directions, pixel_to_direction, ray_direction
from .errors import (
    CalibrationError,
    ConfigError,
    ContractError,
    DataError,
    DegenerateOriginError,
    EmptySelectionError,
    FormatError,
    GeodepthError,
    MetadataError,
    RegistrationError,
    SceneSpecError,
)
from .evaluation import (
    CurvePoint,
    DepthMetrics,
    EvalSelection,
    apply_scale,
    compute_metrics,
    error_vs_distance,
    inject_heading_noise,
    median_scale_factor,
    rmse_vs_depthcap,
    scale_scatter,
)
from .losses import LossConfig, combined_loss, masked_mean_loss, pseudo_huber
from .projection import direction_to_pano_coords, extract_cutout, pano_coords_to_direction, rotate_columns
from .raster import (
    SENTINEL,
    DepthPanorama,
    HeightMap,
    PerspectiveDepthMap,
    load_raster,
    normalize_height,
    save_raster,
)
from .registration import RegistrationResult, SearchGrid, register_orientation
from .testkit import SceneSpec, generate_scene, oracle_perspective, oracle_render
from .voxel import RayCastConfig, VoxelGrid, heightfield_depth_at, render_panorama, voxelize
