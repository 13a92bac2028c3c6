"""Generative-model plugin contracts, synthetic implementations, wire protocol."""

from sceneforge.plugins.base import (
    ConditioningPayload,
    Denoiser,
    DepthEstimator,
    FrameInterpolator,
    Inpainter,
    InpaintRequest,
    LatentCodec,
    LatentVideo,
    PluginManifest,
    PluginSet,
    ViewContext,
)
from sceneforge.plugins.synthetic import SyntheticWorld, make_synthetic_plugins

__all__ = [
    "ConditioningPayload",
    "Denoiser",
    "DepthEstimator",
    "FrameInterpolator",
    "Inpainter",
    "InpaintRequest",
    "LatentCodec",
    "LatentVideo",
    "PluginManifest",
    "PluginSet",
    "SyntheticWorld",
    "ViewContext",
    "make_synthetic_plugins",
]
