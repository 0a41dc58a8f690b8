"""
Camera pose and ray-direction conventions.

World frame: x = north, y = east, z = up. Azimuth is measured in degrees
clockwise from north, elevation in degrees above the horizon. Every
direction vector in this package is stored in (north, east, up) order.

Camera pose is applied to a camera-frame ray (forward, right, up) as
roll about forward, then pitch about right, then yaw about the world
vertical, so ``yaw`` is always the heading of the principal axis.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class Geocalibration:
    yaw: float = 0.0  # degrees clockwise from north, stored in [0, 360)
    pitch: float = 0.0  # degrees, positive up
    roll: float = 0.0  # degrees, positive tilts the camera's right axis upward
    fov: float = 90.0  # horizontal field of view, degrees
    eye_height: float = 2.5

    def __post_init__(self):
        for name in ("yaw", "pitch", "roll", "fov", "eye_height"):
            if not math.isfinite(getattr(self, name)):
                raise ContractError(f"{name} must be finite")
        yaw = float(self.yaw) % 360.0
        object.__setattr__(self, "yaw", 0.0 if yaw == 360.0 else yaw)
        if not -90.0 <= self.pitch <= 90.0:
            raise ContractError(f"pitch {self.pitch} outside [-90, 90]")
        if not -180.0 <= self.roll < 180.0:
            raise ContractError(f"roll {self.roll} outside [-180, 180)")
        if not 0.0 < self.fov < 180.0:
            raise ContractError(f"fov {self.fov} outside (0, 180)")
        if self.eye_height <= 0:
            raise ContractError("eye_height must be positive")

    def with_yaw(self, yaw: float) -> "Geocalibration":
        return Geocalibration(yaw, self.pitch, self.roll, self.fov, self.eye_height)

    def with_pitch(self, pitch: float) -> "Geocalibration":
        return Geocalibration(self.yaw, pitch, self.roll, self.fov, self.eye_height)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Geocalibration":
        return cls(**d)


def ray_direction(azimuth_deg, elevation_deg) -> np.ndarray:
    """Unit (north, east, up) vectors for arrays of azimuth/elevation in degrees."""
    az = np.deg2rad(np.asarray(azimuth_deg, dtype=np.float64))
    el = np.deg2rad(np.asarray(elevation_deg, dtype=np.float64))
    cos_el = np.cos(el)
    return np.stack([cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)], axis=-1)


def direction_angles(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`ray_direction`: azimuth in [0, 360), elevation in [-90, 90]."""
    d = np.asarray(d, dtype=np.float64)
    north, east, up = d[..., 0], d[..., 1], d[..., 2]
    az = np.degrees(np.arctan2(east, north)) % 360.0
    # atan2 on the horizontal norm stays accurate near the poles, unlike asin
    el = np.degrees(np.arctan2(up, np.hypot(north, east)))
    return az, el


def _camera_rays(fov: float, out_w: int, out_h: int, u, v) -> np.ndarray:
    """Camera-frame (forward, right, up) rays through pixel centers, not normalized."""
    focal = (out_w / 2.0) / math.tan(math.radians(fov) / 2.0)
    right = np.asarray(u, dtype=np.float64) + 0.5 - out_w / 2.0
    down = np.asarray(v, dtype=np.float64) + 0.5 - out_h / 2.0
    return np.stack([np.full_like(right, focal), right, -down], axis=-1)


def _apply_roll_pitch(rays: np.ndarray, pitch: float, roll: float) -> np.ndarray:
    """Rotate camera-frame rays by roll then pitch; result is in a yaw-zero world frame."""
    fwd, right, up = rays[..., 0], rays[..., 1], rays[..., 2]
    rho = math.radians(roll)
    cr, sr = math.cos(rho), math.sin(rho)
    right, up = right * cr - up * sr, right * sr + up * cr
    phi = math.radians(pitch)
    cp, sp = math.cos(phi), math.sin(phi)
    fwd, up = fwd * cp - up * sp, fwd * sp + up * cp
    # yaw zero: forward is north, right is east
    return np.stack([fwd, right, up], axis=-1)


def _apply_yaw(d: np.ndarray, yaw: float) -> np.ndarray:
    psi = math.radians(yaw)
    cy, sy = math.cos(psi), math.sin(psi)
    north, east = d[..., 0], d[..., 1]
    return np.stack([north * cy - east * sy, north * sy + east * cy, d[..., 2]], axis=-1)


def _normalize(d: np.ndarray) -> np.ndarray:
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def pixel_directions(calib: Geocalibration, out_w: int, out_h: int) -> np.ndarray:
    """World unit rays for every pixel center of an ``out_h x out_w`` cutout."""
    u, v = np.meshgrid(np.arange(out_w), np.arange(out_h))
    rays = _apply_roll_pitch(_camera_rays(calib.fov, out_w, out_h, u, v), calib.pitch, calib.roll)
    return _normalize(_apply_yaw(rays, calib.yaw))


def pixel_to_direction(calib: Geocalibration, u: int, v: int, out_w: int, out_h: int) -> np.ndarray:
    """World unit ray through the center of pixel ``(u, v)`` (column, row)."""
    if not (0 <= u < out_w and 0 <= v < out_h):
        raise ContractError(f"pixel ({u}, {v}) outside {out_w}x{out_h} image")
    rays = _apply_roll_pitch(_camera_rays(calib.fov, out_w, out_h, u, v), calib.pitch, calib.roll)
    return _normalize(_apply_yaw(rays, calib.yaw))
