"""Canonical Gaussian splats, spatiotemporal deformation, rendering, training."""

from sceneforge.splats.model import SplatModel, init_from_cloud
from sceneforge.splats.scene import Scene4D

__all__ = ["SplatModel", "Scene4D", "init_from_cloud"]
