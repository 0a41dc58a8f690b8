import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geodepth.camera import Geocalibration, direction_angles, pixel_directions, pixel_to_direction
from geodepth.errors import ContractError
from geodepth.projection import (
    direction_to_pano_coords,
    extract_cutout,
    pano_coords_to_direction,
    relative_sample_coords,
    rotate_columns,
    yaw_shift,
)
from geodepth.raster import DepthPanorama
from geodepth.testkit import SceneSpec, generate_scene, oracle_perspective, smooth_region_mask
from geodepth.voxel import RayCastConfig, panorama_ray_directions, render_panorama, voxelize


def test_identity_center_ray_is_north():
    d = pixel_to_direction(Geocalibration(), 2, 2, 5, 5)
    np.testing.assert_allclose(d, [1.0, 0.0, 0.0], atol=1e-15)


def test_yaw_90_center_ray_is_east():
    d = pixel_to_direction(Geocalibration(yaw=90), 2, 2, 5, 5)
    np.testing.assert_allclose(d, [0.0, 1.0, 0.0], atol=1e-15)


def test_pitch_and_roll_conventions():
    up = pixel_to_direction(Geocalibration(pitch=30), 2, 2, 5, 5)
    _, el = direction_angles(up)
    assert el == pytest.approx(30.0)
    # roll turns the image-right pixel upward for positive roll
    right_px = pixel_to_direction(Geocalibration(roll=90), 4, 2, 5, 5)
    assert right_px[2] > 0 and abs(right_px[1]) < 1e-12


def test_left_edge_is_minus_45():
    d = pixel_to_direction(Geocalibration(fov=90), 0, 256, 512, 512)
    az, el = direction_angles(d)
    rel = (az + 180) % 360 - 180
    half_px = math.degrees(math.atan(1 / 256)) / 2
    assert rel == pytest.approx(-45.0, abs=half_px + 1e-9)
    # closed form of the pixel-center ray: right = -255.5, focal = 256
    assert rel == pytest.approx(-math.degrees(math.atan2(255.5, 256.0)), abs=1e-9)


def test_unit_norm():
    d = pixel_directions(Geocalibration(yaw=13, pitch=-20, roll=7, fov=75), 31, 17)
    np.testing.assert_allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-12)


def test_pixel_out_of_range():
    with pytest.raises(ContractError):
        pixel_to_direction(Geocalibration(), 5, 0, 5, 5)


def test_calibration_ranges():
    assert Geocalibration(yaw=360).yaw == 0.0
    assert Geocalibration(yaw=-90).yaw == 270.0
    for bad in (dict(pitch=91), dict(roll=180), dict(fov=0), dict(fov=180), dict(yaw=float("nan"))):
        with pytest.raises(ContractError):
            Geocalibration(**bad)


def test_pano_coords_anchors():
    assert direction_to_pano_coords(np.array([1.0, 0, 0]), 360, 180) == (0.0, 90.0)
    col, row = direction_to_pano_coords(np.array([0, 0, 1.0]), 360, 180)
    assert (col, row) == (0.0, 0.0)
    col, row = direction_to_pano_coords(np.array([0, 0, -1.0]), 360, 180)
    assert (col, row) == (0.0, 180.0)
    col, _ = direction_to_pano_coords(np.array([0, 1.0, 0]), 360, 180)
    assert col == pytest.approx(90.0)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-1, 1) for _ in range(3)]).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_coords_round_trip(v):
    d = np.array(v) / np.linalg.norm(v)
    col, row = direction_to_pano_coords(d, 1024, 512)
    np.testing.assert_allclose(pano_coords_to_direction(col, row, 1024, 512), d, atol=1e-9)


def test_constant_panorama_is_exact():
    pano = DepthPanorama(np.full((64, 128), 30.0, np.float32))
    for calib in (Geocalibration(), Geocalibration(yaw=123.4, pitch=-31, roll=12, fov=100)):
        cut = extract_cutout(pano, calib, 40, 30)
        assert np.all(cut.values == np.float32(30.0))
        assert cut.calib == calib


def test_all_sentinel_panorama():
    pano = DepthPanorama(np.full((32, 64), -1.0, np.float32))
    assert np.all(extract_cutout(pano, Geocalibration(yaw=200), 16, 16).values == -1.0)


def _reference_sample(pano, x, y):
    """Direct transcription of the sentinel-aware bilinear rule."""
    h, w = pano.shape
    x0, y0 = math.floor(x), math.floor(y)
    fx, fy = x - x0, y - y0
    cells = []
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            r = min(max(y0 + dy, 0), h - 1)
            c = (x0 + dx) % w
            dist = (dx - fx) ** 2 + (dy - fy) ** 2
            cells.append((float(pano[r, c]), wx * wy, dist))
    finite = [c for c in cells if c[0] > 0]
    if len(finite) == 4:
        return sum(v * wt for v, wt, _ in cells)
    if not finite:
        return -1.0
    return min(finite, key=lambda c: c[2])[0]


def test_sampler_matches_reference_rule(rng):
    vals = rng.uniform(5, 50, size=(48, 96)).astype(np.float32)
    vals[rng.random(vals.shape) < 0.3] = -1.0
    pano = DepthPanorama(vals)
    calib = Geocalibration(yaw=77.7, pitch=12, roll=-5, fov=80)
    cut = extract_cutout(pano, calib, 24, 20)
    cols, rows = relative_sample_coords(calib, 24, 20, 96, 48)
    n, frac = yaw_shift(calib.yaw, 96)
    for idx, (x, y) in enumerate(zip(cols + frac + n, rows)):
        expect = _reference_sample(vals, x, y)
        got = float(cut.values.reshape(-1)[idx])
        assert got == pytest.approx(expect, rel=1e-6, abs=1e-5)


def test_no_sentinel_bleeding_and_range(rng):
    vals = rng.uniform(2, 9, size=(32, 64)).astype(np.float32)
    vals[:, 20:30] = -1.0
    pano = DepthPanorama(vals)
    finite = vals[vals > 0]
    table = set(np.unique(finite).tolist())
    for yaw in (0, 45, 90, 300):
        cut = extract_cutout(pano, Geocalibration(yaw=yaw), 32, 32).values
        ok = cut > 0
        assert np.all(cut[~ok] == -1.0)
        assert cut[ok].min() >= finite.min() and cut[ok].max() <= finite.max()
    # looking into the sentinel band: a blend with -1 would land below the finite minimum
    cut = extract_cutout(pano, Geocalibration(yaw=25 * 360 / 64), 16, 16).values
    assert np.all((cut == -1.0) | (cut >= finite.min()))
    edge = cut[(cut > 0)]
    assert edge.size and np.isin(edge, list(table)).any()


@pytest.mark.parametrize("k", [1, 5, 17, 64, 100])
def test_yaw_equivariance_exact(box_scene, k):
    _, cfg, pano = box_scene
    theta = k * 360.0 / pano.width
    calib = Geocalibration(yaw=theta, pitch=-7, fov=70)
    a = extract_cutout(pano, calib, 48, 40).values
    b = extract_cutout(rotate_columns(pano, theta), calib.with_yaw(0.0), 48, 40).values
    assert a.tobytes() == b.tobytes()


def test_yaw_360_is_yaw_0(box_scene):
    _, _, pano = box_scene
    a = extract_cutout(pano, Geocalibration(yaw=360.0), 20, 20).values
    b = extract_cutout(pano, Geocalibration(yaw=0.0), 20, 20).values
    assert a.tobytes() == b.tobytes()


def test_seam_wrap():
    vals = np.full((16, 32), 10.0, np.float32)
    vals[:, -1] = 20.0
    pano = DepthPanorama(vals)
    # looking due north samples halfway between the last and first columns
    cut = extract_cutout(pano, Geocalibration(), 1, 1).values
    assert cut[0, 0] == pytest.approx(15.0)


def test_wall_cutout_center_and_oracle():
    d = 20.0
    h = generate_scene(SceneSpec("wall", 96, 96, 1.0, params={"distance": d, "wall_height": 12, "side": "east"}))
    cfg = RayCastConfig.for_heightmap(h, pano_height=512)
    pano = render_panorama(voxelize(h), cfg)
    calib = Geocalibration(yaw=90, fov=90)
    cut = extract_cutout(pano, calib, 65, 65)
    center = float(cut.values[32, 32])
    assert d - cfg.step <= center <= d + cfg.step
    direct = oracle_perspective(h, calib, cfg, 65, 65)
    assert direct.values[32, 32] == pytest.approx(center, abs=cfg.step)
    smooth = smooth_region_mask(direct.values, cfg.step) & (cut.values > 0)
    diff = np.abs(cut.values[smooth] - direct.values[smooth])
    assert np.all(diff <= 2 * cfg.step)
