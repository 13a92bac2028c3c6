import numpy as np
import pytest

from sceneforge.geometry import CameraIntrinsics, CameraPose
from sceneforge.plugins.base import PluginManifest
from sceneforge.plugins.synthetic import SyntheticWorld, make_synthetic_plugins


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_intr():
    return CameraIntrinsics(fx=20.0, fy=22.0, cx=8.0, cy=6.0, width=16, height=12)


@pytest.fixture
def world_intr():
    return CameraIntrinsics(fx=48.0, fy=48.0, cx=23.5, cy=23.5, width=48, height=48)


@pytest.fixture
def world():
    return SyntheticWorld()


@pytest.fixture
def manifest():
    return PluginManifest(capability="denoiser", latent_height=48, latent_width=48,
                          frames=9, schedule_steps=25)


@pytest.fixture
def plugins(world, manifest):
    return make_synthetic_plugins(world, manifest=manifest)


@pytest.fixture
def identity_pose():
    return CameraPose()
