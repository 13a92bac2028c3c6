"""Contracts for the four external generative capabilities.

Plugins may live in-process (the synthetic ones) or behind the socket
protocol in sceneforge.plugins.wire; the engine only sees these interfaces.
All plugins must be deterministic functions of (inputs, seed).
"""

from dataclasses import dataclass, field

import numpy as np

from sceneforge.errors import ContractViolation, ScheduleError
from sceneforge.geometry import CameraIntrinsics, CameraPose, DepthMap, ImagePlane, RegionMask


@dataclass(frozen=True)
class ViewContext:
    """Camera context the engine supplies alongside image-space requests.

    Real models ignore it; the synthetic stand-ins need it because their
    ground truth is view-dependent.
    """

    intr: CameraIntrinsics
    pose: CameraPose


@dataclass
class InpaintRequest:
    image: ImagePlane
    inpaint_mask: RegionMask  # 1 = fill
    prompt: str = ""

    def __post_init__(self):
        if self.image.shape != self.inpaint_mask.weights.shape:
            raise ContractViolation("inpaint mask resolution differs from image")


@dataclass
class LatentVideo:
    """T x C x h x w latent moved through the denoising schedule."""

    frames: np.ndarray
    schedule_step: int = 0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 4:
            raise ContractViolation("latent video must be TxCxhxw")
        if not np.all(np.isfinite(self.frames)):
            raise ContractViolation("latent video must be finite")

    @property
    def num_frames(self):
        return self.frames.shape[0]


@dataclass
class ConditioningPayload:
    """Opaque per-plugin conditioning blob (start-view encoding, motion scalars)."""

    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PluginManifest:
    capability: str
    latent_channels: int = 3
    latent_height: int = 64
    latent_width: int = 64
    frames: int = 25
    schedule_steps: int = 25       # T_diff
    noise_sigma_max: float = 0.8   # injected-noise std at step T_diff
    single_flight: bool = False

    def noise_sigma(self, step: int) -> float:
        """Declared noise std at a schedule step (linear ramp)."""
        return self.noise_sigma_max * step / self.schedule_steps

    def signal_scale(self, step: int) -> float:
        s = self.noise_sigma(step)
        return float(np.sqrt(max(1.0 - s * s, 0.0)))

    def check_step(self, step: int):
        if not (0 < step <= self.schedule_steps):
            raise ScheduleError(
                f"denoise step {step} outside (0, {self.schedule_steps}]"
            )


class Inpainter:
    def fill(self, request: InpaintRequest, seed: int, view: ViewContext = None) -> ImagePlane:
        raise NotImplementedError


class DepthEstimator:
    def estimate(self, image: ImagePlane, view: ViewContext = None) -> DepthMap:
        raise NotImplementedError


class Denoiser:
    manifest: PluginManifest

    def make_condition(self, image: ImagePlane, extras: dict) -> ConditioningPayload:
        raise NotImplementedError

    def step(self, z: LatentVideo, step: int, condition: ConditioningPayload) -> LatentVideo:
        raise NotImplementedError


class LatentCodec:
    def encode(self, video) -> LatentVideo:
        raise NotImplementedError

    def decode(self, z: LatentVideo):
        raise NotImplementedError


class FrameInterpolator:
    def interpolate(self, a: ImagePlane, b: ImagePlane, count: int):
        raise NotImplementedError


@dataclass
class PluginSet:
    inpainter: Inpainter
    depth: DepthEstimator
    denoiser: Denoiser
    codec: LatentCodec
    interpolator: FrameInterpolator
