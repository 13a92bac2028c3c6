"""Deterministic synthetic stand-ins backed by one analytic world.

The world is a textured plane at constant z with a separable ambient motion
field: texture coordinates are displaced by
    amp_scale * amplitude * sin(2*pi*t) * sin(k.x + phase) * direction,
so every stand-in (inpainting, depth, video animation) answers from the
same ground truth and cross-stage composition can be checked exactly.
Per-video amp_scale factors model the cross-video motion inconsistency the
4D training stage has to absorb.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from sceneforge.errors import PluginFailure
from sceneforge.geometry import (
    CameraIntrinsics,
    CameraPose,
    DepthMap,
    ImagePlane,
)
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


@dataclass
class SyntheticWorld:
    plane_z: float = 3.0
    # texture: base + amp * sin(kx*x + ky*y + phase) per channel
    tex_base: tuple = (0.45, 0.50, 0.55)
    tex_amp: tuple = (0.25, 0.25, 0.22)
    tex_kx: tuple = (2.1, -1.3, 0.7)
    tex_ky: tuple = (1.2, 2.4, -1.8)
    tex_phase: tuple = (0.3, 1.9, 4.0)
    # ambient motion (world units)
    motion_amplitude: float = 0.06
    motion_kx: float = 1.1
    motion_ky: float = 0.8
    motion_phase: float = 0.7
    motion_dir: tuple = (0.8, 0.6)
    far_depth: float = 100.0

    def texture(self, x, y):
        """Static texture; channels stay strictly inside [0,1]."""
        out = np.empty(np.shape(x) + (3,))
        for c in range(3):
            out[..., c] = self.tex_base[c] + self.tex_amp[c] * np.sin(
                self.tex_kx[c] * x + self.tex_ky[c] * y + self.tex_phase[c]
            )
        return out

    def displacement(self, x, y, t, amp_scale=1.0):
        """Texture-coordinate displacement; zero at t = 0."""
        wave = np.sin(self.motion_kx * x + self.motion_ky * y + self.motion_phase)
        mag = amp_scale * self.motion_amplitude * np.sin(2.0 * np.pi * t) * wave
        return mag * self.motion_dir[0], mag * self.motion_dir[1]

    def color_at(self, x, y, t=0.0, amp_scale=1.0):
        dx, dy = self.displacement(x, y, t, amp_scale)
        return self.texture(x - dx, y - dy)

    def intersect(self, intr: CameraIntrinsics, pose: CameraPose):
        """Ray/plane hit per pixel: world xy, camera-z depth, hit mask."""
        h, w = intr.height, intr.width
        uu, vv = np.meshgrid(np.arange(w), np.arange(h))
        dirs_cam = np.stack(
            [(uu - intr.cx) / intr.fx, (vv - intr.cy) / intr.fy, np.ones((h, w))],
            axis=-1,
        )
        rot = pose.matrix
        dirs_world = dirs_cam @ rot  # R^T applied rowwise
        origin = pose.world_center()
        dz = dirs_world[..., 2]
        hit = dz > 1e-9
        s = np.where(hit, (self.plane_z - origin[2]) / np.where(hit, dz, 1.0), self.far_depth)
        hit &= s > 0
        x = origin[0] + s * dirs_world[..., 0]
        y = origin[1] + s * dirs_world[..., 1]
        return x, y, s, hit

    def render(self, intr: CameraIntrinsics, pose: CameraPose, t=0.0, amp_scale=1.0):
        """Analytic (ImagePlane, DepthMap) of the world at time t."""
        x, y, s, hit = self.intersect(intr, pose)
        rgb = np.where(hit[..., None], np.clip(self.color_at(x, y, t, amp_scale), 0, 1), 0.0)
        depth = np.where(hit, s, self.far_depth)
        return ImagePlane(rgb), DepthMap(depth, np.ones_like(hit))

    def render_video(self, intr, pose_list, times, amp_scale=1.0):
        return [self.render(intr, p, t, amp_scale)[0] for p, t in zip(pose_list, times)]


class SyntheticInpainter(Inpainter):
    """Fills masked pixels with ground-truth texture at the unprojected
    world coordinates. A nonzero color_shift drifts the whole returned
    image (the decode-side color drift that seam blending removes)."""

    def __init__(self, world: SyntheticWorld, color_shift: float = 0.0):
        self.world = world
        self.color_shift = color_shift

    def fill(self, request: InpaintRequest, seed: int, view: ViewContext = None) -> ImagePlane:
        fill = request.inpaint_mask.weights > 0.5
        if not fill.any():
            return ImagePlane(request.image.rgb.copy())
        if view is None:
            raise PluginFailure("inpaint", "synthetic inpainter needs a ViewContext")
        x, y, _, hit = self.world.intersect(view.intr, view.pose)
        truth = np.where(hit[..., None], self.world.texture(x, y), 0.0)
        out = request.image.rgb.copy()
        out[fill] = truth[fill]
        if self.color_shift:
            out = out + self.color_shift
        return ImagePlane(np.clip(out, 0.0, 1.0))


class SyntheticDepthEstimator(DepthEstimator):
    """Analytic plane depth corrupted by a monotone disparity warp
    d -> warp_a * d + warp_b (d is inverse depth)."""

    def __init__(self, world: SyntheticWorld, warp_a: float = 1.0, warp_b: float = 0.0):
        self.world = world
        self.warp_a = warp_a
        self.warp_b = warp_b

    def estimate(self, image: ImagePlane, view: ViewContext = None) -> DepthMap:
        if view is None:
            raise PluginFailure("depth", "synthetic depth estimator needs a ViewContext")
        _, _, s, hit = self.world.intersect(view.intr, view.pose)
        depth = np.where(hit, s, self.world.far_depth)
        disparity = self.warp_a / depth + self.warp_b
        if disparity.min() <= 0:
            raise PluginFailure("depth", "disparity warp produced non-positive values")
        return DepthMap(1.0 / disparity, np.ones(depth.shape, dtype=bool))


def video_to_latent(frames):
    """T frames (H,W,3) -> (T,3,H,W); the synthetic latent is the video."""
    return np.stack([f.rgb.transpose(2, 0, 1) for f in frames])


def latent_to_video(latent):
    return [ImagePlane(np.clip(f.transpose(1, 2, 0), 0.0, 1.0)) for f in latent]


class SyntheticDenoiser(Denoiser):
    """Linear contraction toward a condition-determined target latent.

    Step t maps z to target + (t-1)/t * (z - target), so denoising from any
    entry step lands exactly on the target at step 0. The target video is
    the analytic world rendered along the conditioning trajectory with the
    conditioning image as frame 0 (mirroring the start-frame property of
    image-to-video generators)."""

    def __init__(self, world: SyntheticWorld, manifest: PluginManifest = None):
        self.world = world
        self.manifest = manifest or PluginManifest(capability="denoiser")

    def make_condition(self, image: ImagePlane, extras: dict) -> ConditioningPayload:
        data = {"image": image.rgb.copy()}
        data.update(extras)
        return ConditioningPayload(data)

    def _target_latent(self, condition: ConditioningPayload):
        cached = condition.data.get("_target")
        if cached is not None:
            return cached
        d = condition.data
        traj = d["trajectory"]  # (T,7) rows: qw qx qy qz tx ty tz
        times = np.asarray(d["times"], dtype=np.float64)
        intr = CameraIntrinsics(*[d["intrinsics"][k] for k in
                                  ("fx", "fy", "cx", "cy", "width", "height")])
        amp = float(d.get("amp_scale", 1.0))
        frames = [ImagePlane(np.asarray(d["image"], dtype=np.float64))]
        for row, t in zip(traj[1:], times[1:]):
            q = np.asarray(row[:4], dtype=np.float64)
            q = q / np.linalg.norm(q)  # trajectories may arrive as f32
            pose = CameraPose(tuple(q), tuple(row[4:]))
            frames.append(self.world.render(intr, pose, float(t), amp)[0])
        target = video_to_latent(frames)
        condition.data["_target"] = target
        return target

    def step(self, z: LatentVideo, step: int, condition: ConditioningPayload) -> LatentVideo:
        self.manifest.check_step(step)
        target = self._target_latent(condition)
        if target.shape != z.frames.shape:
            raise PluginFailure("denoise", f"latent shape {z.frames.shape} vs "
                                           f"condition target {target.shape}")
        factor = (step - 1.0) / step
        return LatentVideo(target + factor * (z.frames - target), schedule_step=step - 1)


class SyntheticCodec(LatentCodec):
    """Lossless by reshape; a positive blur sigma makes decoding lossy."""

    def __init__(self, blur_sigma: float = 0.0):
        self.blur_sigma = blur_sigma

    def encode(self, video) -> LatentVideo:
        return LatentVideo(video_to_latent(video), schedule_step=0)

    def decode(self, z: LatentVideo):
        frames = z.frames
        if self.blur_sigma > 0:
            frames = np.stack(
                [gaussian_filter(f, sigma=(0, self.blur_sigma, self.blur_sigma)) for f in frames]
            )
        return latent_to_video(frames)


class SyntheticInterpolator(FrameInterpolator):
    """Per-pixel linear blends at uniform weights j/(count+1)."""

    def interpolate(self, a: ImagePlane, b: ImagePlane, count: int):
        out = []
        for j in range(1, count + 1):
            w = j / (count + 1.0)
            out.append(ImagePlane((1.0 - w) * a.rgb + w * b.rgb))
        return out


def make_synthetic_plugins(world: SyntheticWorld = None, depth_warp=(1.0, 0.0),
                           color_shift=0.0, codec_blur=0.0,
                           manifest: PluginManifest = None) -> PluginSet:
    world = world or SyntheticWorld()
    manifest = manifest or PluginManifest(capability="denoiser")
    return PluginSet(
        inpainter=SyntheticInpainter(world, color_shift),
        depth=SyntheticDepthEstimator(world, *depth_warp),
        denoiser=SyntheticDenoiser(world, manifest),
        codec=SyntheticCodec(codec_blur),
        interpolator=SyntheticInterpolator(),
    )
