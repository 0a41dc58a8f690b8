"""
Depth metrics, median scaling, error curves and heading noise.

A pixel is valid when it is selected by the mask, its ground truth lies
in ``(min_depth, depth_cap]`` and the prediction is positive. All
reductions run over valid pixels in row-major order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .camera import Geocalibration
from .errors import CalibrationError, ContractError, EmptySelectionError

DEFAULT_DEPTH_CAP = 80.0
DEFAULT_BIN_WIDTH = 10.0
DEFAULT_MAX_DIST = 400.0


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float
    n_valid: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class EvalSelection:
    mask: np.ndarray | None = None
    depth_cap: float = DEFAULT_DEPTH_CAP
    min_depth: float = 0.0

    def __post_init__(self):
        if not self.depth_cap > self.min_depth:
            raise ContractError("depth_cap must exceed min_depth")

    def with_cap(self, cap: float) -> "EvalSelection":
        return EvalSelection(self.mask, cap, self.min_depth)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    y: float | None
    n: int


def _as_pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(getattr(pred, "values", pred), dtype=np.float64)
    g = np.asarray(getattr(gt, "values", gt), dtype=np.float64)
    if p.shape != g.shape:
        raise ContractError(f"shape mismatch: pred {p.shape} vs reference {g.shape}")
    return p, g


def valid_pixels(pred, gt, sel: EvalSelection) -> np.ndarray:
    p, g = _as_pair(pred, gt)
    valid = (g > sel.min_depth) & (g <= sel.depth_cap) & (p > 0)
    if sel.mask is not None:
        mask = np.asarray(sel.mask, dtype=bool)
        if mask.shape != g.shape:
            raise ContractError(f"mask shape {mask.shape} does not match raster {g.shape}")
        valid &= mask
    return valid


def _selected(pred, gt, sel) -> tuple[np.ndarray, np.ndarray]:
    p, g = _as_pair(pred, gt)
    valid = valid_pixels(p, g, sel)
    if not valid.any():
        raise EmptySelectionError("no valid pixels after masking and depth cap")
    return p[valid], g[valid]


def compute_metrics(pred, gt, sel: EvalSelection | None = None) -> DepthMetrics:
    sel = sel or EvalSelection()
    p, g = _selected(pred, gt, sel)
    diff = p - g
    ratio = np.maximum(p / g, g / p)
    log_diff = np.log(p) - np.log(g)
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff ** 2 / g)),
        rmse=float(np.sqrt(np.mean(diff ** 2))),
        rmse_log=float(np.sqrt(np.mean(log_diff ** 2))),
        delta1=float(np.mean(ratio < 1.25)),
        delta2=float(np.mean(ratio < 1.25 ** 2)),
        delta3=float(np.mean(ratio < 1.25 ** 3)),
        n_valid=int(p.size),
    )


def median(values: np.ndarray) -> float:
    """Median with even counts resolved as the mean of the two central values."""
    return float(np.median(values))


def median_scale_factor(pred, ref, sel: EvalSelection | None = None) -> float:
    """``median(ref) / median(pred)`` over pixels valid for both.

    ``ref`` is ground truth or an overhead-derived cutout; its sentinels and
    out-of-cap pixels drop out through the validity rule.
    """
    sel = sel or EvalSelection()
    p, r = _selected(pred, ref, sel)
    mp = median(p)
    if not mp > 0:
        raise CalibrationError(f"median prediction must be positive, got {mp}")
    return median(r) / mp


def apply_scale(pred, s: float) -> np.ndarray:
    """Multiply positive depths by ``s``; sentinels and non-positive pixels are left alone."""
    if not (math.isfinite(s) and s > 0):
        raise ContractError(f"scale factor must be positive, got {s}")
    p = np.asarray(getattr(pred, "values", pred))
    out = p.astype(np.float64, copy=True)
    finite = out > 0
    out[finite] *= s
    return out


def error_vs_distance(pred, gt, sel: EvalSelection | None = None,
                      bin_width: float = DEFAULT_BIN_WIDTH,
                      max_dist: float = DEFAULT_MAX_DIST) -> list[CurvePoint]:
    """Mean absolute error binned by ground-truth depth, bins ``[b*w, (b+1)*w)``."""
    if not bin_width > 0:
        raise ContractError("bin_width must be positive")
    sel = sel or EvalSelection(depth_cap=max_dist)
    p, g = _as_pair(pred, gt)
    valid = valid_pixels(p, g, sel)
    n_bins = int(math.ceil(max_dist / bin_width - 1e-12))
    idx = np.floor(g / bin_width).astype(np.int64)
    valid &= idx < n_bins
    err = np.abs(p - g)[valid]
    idx = idx[valid]
    counts = np.bincount(idx, minlength=n_bins)
    points = []
    for b in range(n_bins):
        n = int(counts[b])
        y = float(np.mean(err[idx == b])) if n else None
        points.append(CurvePoint((b + 0.5) * bin_width, y, n))
    return points


def rmse_vs_depthcap(pred, gt, sel_base: EvalSelection | None, caps) -> list[CurvePoint]:
    caps = [float(c) for c in caps]
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise ContractError("caps must be strictly increasing")
    sel_base = sel_base or EvalSelection()
    points = []
    for cap in caps:
        try:
            m = compute_metrics(pred, gt, sel_base.with_cap(cap))
        except EmptySelectionError:
            points.append(CurvePoint(cap, None, 0))
            continue
        points.append(CurvePoint(cap, m.rmse, m.n_valid))
    return points


def scale_scatter(pred, gt, sel: EvalSelection | None = None) -> tuple[float, float]:
    """(median ground truth, median prediction) for one image."""
    p, g = _selected(pred, gt, sel or EvalSelection())
    return median(g), median(p)


def heading_offsets(theta_max: float, seed: int, n: int) -> np.ndarray:
    """``n`` draws from Uniform[-theta_max, theta_max] using PCG64 seeded with ``seed``."""
    if not theta_max >= 0:
        raise ContractError("theta_max must be non-negative")
    if theta_max == 0:
        return np.zeros(n)
    return np.random.default_rng(seed).uniform(-theta_max, theta_max, size=n)


def inject_heading_noise(calib: Geocalibration, theta_max: float, seed: int) -> Geocalibration:
    u = float(heading_offsets(theta_max, seed, 1)[0])
    return calib.with_yaw(calib.yaw + u)

