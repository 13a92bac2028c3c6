"""sceneforge: single image -> explorable 4D scene.

Three stages: iterative point-cloud expansion, camera-controlled
multi-video animation scheduling, and 4D Gaussian splat fitting with
per-video motion embeddings and visibility masks. Generative models
(inpainting, depth, video denoising, codec, frame interpolation) are
plugins; deterministic synthetic implementations back all desk-scale
verification.
"""

__version__ = "0.1.0"

from sceneforge.geometry import (
    CameraIntrinsics,
    CameraPose,
    DepthMap,
    ImagePlane,
    PointCloud,
    RegionMask,
)

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "DepthMap",
    "ImagePlane",
    "PointCloud",
    "RegionMask",
    "__version__",
]
