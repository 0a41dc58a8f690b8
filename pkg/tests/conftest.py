import numpy as np
import pytest

from geodepth.raster import HeightMap
from geodepth.testkit import SceneSpec, generate_scene
from geodepth.voxel import RayCastConfig, render_panorama, voxelize


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def box_scene():
    h = generate_scene(SceneSpec("box-field", 64, 64, 1.0, seed=7))
    cfg = RayCastConfig.for_heightmap(h, pano_height=128)
    return h, cfg, render_panorama(voxelize(h), cfg)


def random_heightmap(rng, shape=(16, 16), scale=10.0, gsd=1.0):
    vals = rng.uniform(0, scale, size=shape)
    vals -= vals.min()
    return HeightMap(vals, gsd)
