"""Stage 2: animate static-scene renderings under fixed camera trajectories.

Per video: encode the static render, re-noise to tau_tr, run the
bidirectional fusion schedule (forward denoise with the start-view
condition, temporally reversed denoise with the end-view condition, convex
combination per step), then a plain forward refinement pass from
tau_refine, and finally replace the last frames with interpolation toward
the end view so the final frame matches it exactly.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from sceneforge.errors import ConfigError, PluginFailure, ScheduleError
from sceneforge.geometry import CameraIntrinsics, ImagePlane, render_pointcloud
from sceneforge.plugins.base import LatentVideo, PluginManifest, PluginSet


@dataclass
class SamplerConfig:
    tau_tr: int = 16
    tau_refine: int = 9
    fuse_weight: float = 0.5
    fuse_weight_schedule: dict = field(default_factory=dict)  # step -> w override
    end_transition_n: int = 5
    motion_spread: float = 0.5  # per-video motion-scalar spread around 1
    seed: int = 0

    def validate(self, manifest: PluginManifest, num_frames: int):
        if not (0 < self.tau_refine <= self.tau_tr <= manifest.schedule_steps):
            raise ConfigError(
                f"need 0 < tau_refine <= tau_tr <= {manifest.schedule_steps}, "
                f"got {self.tau_refine}, {self.tau_tr}"
            )
        if not (0 <= self.end_transition_n < num_frames):
            raise ConfigError("end_transition_n must be in [0, T)")

    def weight_for(self, step: int) -> float:
        w = float(self.fuse_weight_schedule.get(step, self.fuse_weight))
        if not (0.0 <= w <= 1.0):
            raise ConfigError(f"fuse weight {w} outside [0,1]")
        return w


def reverse(z: LatentVideo) -> LatentVideo:
    """Temporal reversal; an involution."""
    return LatentVideo(z.frames[::-1].copy(), z.schedule_step)


def time_reversal_step(z: LatentVideo, step: int, start_cond, end_cond, w: float,
                       denoiser) -> LatentVideo:
    """One fused denoising step: w * forward + (1-w) * re-reversed backward."""
    if not (0.0 <= w <= 1.0):
        raise ConfigError(f"fusion weight {w} outside [0,1]")
    if w == 1.0:
        return denoiser.step(z, step, start_cond)
    if w == 0.0:
        return reverse(denoiser.step(reverse(z), step, end_cond))
    fwd = denoiser.step(z, step, start_cond)
    bwd = reverse(denoiser.step(reverse(z), step, end_cond))
    return LatentVideo(w * fwd.frames + (1.0 - w) * bwd.frames, step - 1)


def sdedit_perturb(z0: LatentVideo, tau: int, seed, manifest: PluginManifest) -> LatentVideo:
    """Re-noise a clean latent to schedule step tau (scaled signal plus the
    schedule's noise level); tau = 0 is the identity."""
    if not (0 <= tau <= manifest.schedule_steps):
        raise ScheduleError(f"tau {tau} outside [0, {manifest.schedule_steps}]")
    if tau == 0:
        return LatentVideo(z0.frames.copy(), 0)
    rng = np.random.default_rng(_seed_key(seed, tau))
    noise = rng.standard_normal(z0.frames.shape)
    scaled = manifest.signal_scale(tau) * z0.frames + manifest.noise_sigma(tau) * noise
    return LatentVideo(scaled, tau)


def _seed_key(seed, *extra):
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed) + tuple(int(e) for e in extra)
    return (int(seed),) + tuple(int(e) for e in extra)


def motion_scale(video_index: int, video_count: int, spread: float) -> float:
    """Per-video motion conditioning scalar with zero-mean spread around 1."""
    if video_count <= 1:
        return 1.0
    centered = 2.0 * video_index / (video_count - 1) - 1.0
    return 1.0 + spread * centered


def _condition_extras(traj, intr: CameraIntrinsics, amp: float, reverse_order: bool):
    arr = traj.to_array()
    times = np.arange(len(traj)) / (len(traj) - 1)
    if reverse_order:
        arr = arr[::-1].copy()
        times = times[::-1].copy()
    return {
        "trajectory": arr,
        "times": times,
        "intrinsics": {"fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
                       "width": intr.width, "height": intr.height},
        "amp_scale": amp,
    }


def animate_video(static_video, traj, cfg: SamplerConfig, plugins: PluginSet,
                  intr: CameraIntrinsics, video_index: int = 0, video_count: int = 1):
    """Animate one static rendering along its trajectory. Returns T frames;
    the last frame equals the end view exactly."""
    manifest = plugins.denoiser.manifest
    num_frames = len(static_video)
    if num_frames != len(traj):
        raise ConfigError("static video length must match the trajectory")
    cfg.validate(manifest, num_frames)
    i_start, i_end = static_video[0], static_video[-1]
    amp = motion_scale(video_index, video_count, cfg.motion_spread)

    def run(stage, fn, *args):
        try:
            return fn(*args)
        except PluginFailure:
            raise
        except Exception as exc:
            raise PluginFailure(stage, str(exc)) from exc

    start_cond = run("condition", plugins.denoiser.make_condition,
                     i_start, _condition_extras(traj, intr, amp, False))
    end_cond = run("condition", plugins.denoiser.make_condition,
                   i_end, _condition_extras(traj, intr, amp, True))

    z = run("encode", plugins.codec.encode, static_video)
    z = sdedit_perturb(z, cfg.tau_tr, _seed_key(cfg.seed, video_index, 0), manifest)
    for step in range(cfg.tau_tr, 0, -1):
        z = run("denoise", time_reversal_step, z, step, start_cond, end_cond,
                cfg.weight_for(step), plugins.denoiser)

    mid = run("decode", plugins.codec.decode, z)
    z2 = run("encode", plugins.codec.encode, mid)
    z2 = sdedit_perturb(z2, cfg.tau_refine, _seed_key(cfg.seed, video_index, 1), manifest)
    for step in range(cfg.tau_refine, 0, -1):
        z2 = run("refine", plugins.denoiser.step, z2, step, start_cond)
    frames = run("decode", plugins.codec.decode, z2)

    n = cfg.end_transition_n
    if n >= 2:
        mids = run("interpolate", plugins.interpolator.interpolate,
                   frames[num_frames - n - 1], i_end, n - 1)
        frames[num_frames - n:num_frames - 1] = mids
    frames[num_frames - 1] = ImagePlane(i_end.rgb.copy())
    return frames


def render_static_video(cloud, traj, intr: CameraIntrinsics, splat_radius_px=1.0):
    """Point-cloud renders along a trajectory (the video-generator condition)."""
    return [render_pointcloud(cloud, intr, pose, splat_radius_px)[0] for pose in traj.poses]


def animate_all(trajs, cloud, cfg: SamplerConfig, plugins: PluginSet,
                intr: CameraIntrinsics, splat_radius_px=1.0, max_workers=1):
    """Render + animate every trajectory; videos are independent given
    distinct per-video seed streams, so they may run concurrently."""
    count = len(trajs)

    def one(k):
        static = render_static_video(cloud, trajs[k], intr, splat_radius_px)
        return animate_video(static, trajs[k], cfg, plugins, intr,
                             video_index=k, video_count=count)

    if max_workers <= 1 or count == 1:
        return [one(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, range(count)))
