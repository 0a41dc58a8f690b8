"""
Orientation recovery by exhaustive yaw/pitch search.

Every grid cell extracts a cutout from the panorama with the query's
dimensions and scores it by mean absolute error over pixels that are
finite in both images. Cells whose overlap falls below
``min_overlap * query pixels`` are skipped.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .camera import Geocalibration
from .errors import ContractError, RegistrationError
from .projection import relative_sample_coords, yaw_shift
from .raster import DepthPanorama, PerspectiveDepthMap


@dataclass(frozen=True)
class SearchGrid:
    yaw_min: float = 0.0
    yaw_max: float = 359.0
    yaw_step: float = 1.0
    pitch_min: float = -10.0
    pitch_max: float = 10.0
    pitch_step: float = 1.0
    roll: float = 0.0
    fov: float = 90.0
    min_overlap: float = 0.25
    top_k: int = 5

    def __post_init__(self):
        if not (self.yaw_step > 0 and self.pitch_step > 0):
            raise ContractError("search steps must be positive")
        if self.yaw_max < self.yaw_min or self.pitch_max < self.pitch_min:
            raise ContractError("search ranges must be non-empty")
        if not 0 <= self.min_overlap <= 1:
            raise ContractError("min_overlap must be in [0, 1]")

    def yaws(self) -> np.ndarray:
        return _axis(self.yaw_min, self.yaw_max, self.yaw_step)

    def pitches(self) -> np.ndarray:
        return _axis(self.pitch_min, self.pitch_max, self.pitch_step)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n, dtype=np.float64)


@dataclass(frozen=True)
class Candidate:
    yaw: float
    pitch: float
    score: float
    n_valid: int


@dataclass(frozen=True)
class RegistrationResult:
    yaw: float
    pitch: float
    score: float
    n_valid: int
    ranked_alternatives: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def score_grid(query: PerspectiveDepthMap, pano: DepthPanorama, grid: SearchGrid) -> np.ndarray:
    """Per-cell (score, n_valid) as an array of shape (n_pitch, n_yaw, 2).

    Cells without enough overlap score ``inf``.
    """
    q = np.ascontiguousarray(query.values.reshape(-1))
    min_count = max(1, int(math.ceil(grid.min_overlap * q.size)))
    pitches = grid.pitches()
    yaws = grid.yaws()
    out = np.full((pitches.size, yaws.size, 2), np.inf)
    for pi, pitch in enumerate(pitches):
        calib = Geocalibration(0.0, float(pitch), grid.roll, grid.fov)
        cols, rows = relative_sample_coords(calib, query.width, query.height, pano.width, pano.height)
        for yi, yaw in enumerate(yaws):
            n, frac = yaw_shift(float(yaw) % 360.0, pano.width)
            xs = cols + frac if frac else cols
            total, count = _kernels.sample_pano_mae(pano.values, xs, rows, n, q)
            out[pi, yi, 1] = count
            if count >= min_count:
                out[pi, yi, 0] = total / count
    return out


def register_orientation(query: PerspectiveDepthMap, pano: DepthPanorama,
                         grid: SearchGrid | None = None) -> RegistrationResult:
    """Return the lowest-MAE (yaw, pitch); ties go to smaller yaw, then smaller pitch."""
    grid = grid or SearchGrid()
    scores = score_grid(query, pano, grid)
    pitches = grid.pitches()
    yaws = grid.yaws()
    cands = [
        Candidate(float(yaws[yi]) % 360.0, float(pitches[pi]), float(scores[pi, yi, 0]), int(scores[pi, yi, 1]))
        for yi in range(yaws.size)
        for pi in range(pitches.size)
        if math.isfinite(scores[pi, yi, 0])
    ]
    if not cands:
        raise RegistrationError("no orientation on the search grid overlaps the query enough to score")
    # stable sort keeps the (yaw, pitch) scan order among equal scores
    cands.sort(key=lambda c: c.score)
    best = cands[0]
    return RegistrationResult(best.yaw, best.pitch, best.score, best.n_valid, cands[:grid.top_k])
