"""Desk-scale end-to-end run on the analytic synthetic world.

Builds the full pipeline (expand -> animate -> visibility -> two-phase
training) at a reduced operating point (K=3 videos, 64x64, 200 splats,
500/2000 iterations), renders held-out probe views against the analytic
ground truth, and repeats 4D training without motion embeddings to measure
the embedding ablation.
"""

import copy

import numpy as np

from sceneforge.animate import SamplerConfig, animate_all
from sceneforge.expansion import expand_scene, orbit_plan
from sceneforge.geometry import CameraIntrinsics, CameraPose, render_pointcloud, unproject
from sceneforge.plugins.base import PluginManifest, ViewContext
from sceneforge.plugins.synthetic import SyntheticWorld, make_synthetic_plugins
from sceneforge.splats.hexplane import HexPlaneConfig
from sceneforge.splats.model import init_from_cloud
from sceneforge.splats.scene import Scene4D
from sceneforge.splats.train import (
    TrainConfig,
    canonical_batches,
    train_4d,
    train_canonical,
    video_batches,
)
from sceneforge.trajectory import plan_videos
from sceneforge.visibility import assign_owners, build_masks, trajectory_depths, view_stats

NUM_VIDEOS = 3
NUM_FRAMES = 25
TARGET_SPLATS = 200
ITERS_CANONICAL = 500
ITERS_4D = 2000
PROBE_TIMES = (0.25, 0.4, 0.75)
MOTION_AMPLITUDE = 0.3
MOTION_SPREAD = 0.6


def psnr(a, b):
    mse = float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))
    return float("inf") if mse == 0 else -10.0 * np.log10(mse)


def run_end_to_end(seed=0, verbose=False):
    rng = np.random.default_rng(seed)
    world = SyntheticWorld(motion_amplitude=MOTION_AMPLITUDE)
    intr = CameraIntrinsics(fx=64, fy=64, cx=31.5, cy=31.5, width=64, height=64)
    manifest = PluginManifest(capability="denoiser", latent_height=64, latent_width=64,
                              frames=NUM_FRAMES, schedule_steps=25)
    plugins = make_synthetic_plugins(world, depth_warp=(1.1, 0.02), manifest=manifest)

    def log(msg):
        if verbose:
            print(f"[e2e] {msg}")

    # stage 0: unproject the input view with its (true) depth
    input_pose = CameraPose()
    image, _ = world.render(intr, input_pose, t=0.0)
    x, y, s, hit = world.intersect(intr, input_pose)
    from sceneforge.geometry import DepthMap

    cloud = unproject(image, DepthMap(s, hit), intr, input_pose, provenance_id=0)

    # stage 1: expansion over a small orbit
    plan = orbit_plan(NUM_VIDEOS, angle_step_deg=7.0, center_z=world.plane_z)
    cloud, steps = expand_scene(cloud, plan, plugins, intr, seed=seed)
    log(f"expanded cloud: {len(cloud)} points over {len(steps)} steps")

    # stage 2: animate one video per extrapolation path
    trajs = plan_videos(steps, NUM_VIDEOS, NUM_FRAMES)
    sampler = SamplerConfig(tau_tr=16, tau_refine=9, end_transition_n=5,
                            motion_spread=MOTION_SPREAD, seed=seed)
    videos = animate_all(trajs, cloud, sampler, plugins, intr)
    log(f"animated {len(videos)} videos")

    # visibility ownership and masks
    depths = [trajectory_depths(cloud, tr, intr) for tr in trajs]
    stats = [view_stats(cloud, tr, intr, d) for tr, d in zip(trajs, depths)]
    assign = assign_owners(stats, beta=1.0)
    masks = build_masks(assign, trajs, intr, cloud, soft_width_px=8.0)
    log("built visibility masks")

    # canonical splats from a 200-point subsample
    model = init_from_cloud(cloud, target_count=TARGET_SPLATS, rng=rng)
    hex_config = HexPlaneConfig(spatial_resolutions=(16, 32), time_resolutions=(9, 17),
                                n_features=8)
    scene = Scene4D.create(model, num_videos=NUM_VIDEOS, embed_dim=16,
                           hex_config=hex_config, rng=rng)
    tcfg = TrainConfig(iters_canonical=ITERS_CANONICAL, iters_4d=ITERS_4D, seed=seed)

    renders = []
    for traj, dlist in zip(trajs, depths):
        for pose, depth in zip(traj.poses[::3], dlist[::3]):
            img, dmap, _ = render_pointcloud(cloud, intr, pose)
            renders.append((pose, img, dmap))
    train_canonical(scene, canonical_batches(renders, intr), tcfg)
    log(f"canonical phase done ({len(scene.model)} splats after pruning)")

    # snapshot before 4D fitting for the ablation run
    ablated = copy.deepcopy(scene)

    batches = video_batches(videos, masks, trajs, intr, depths)
    train_4d(scene, batches, tcfg)
    log("4D phase done")

    # ablation: identical training without per-video embeddings
    abl_cfg = copy.deepcopy(tcfg)
    abl_cfg.lrs["embeddings"] = 0.0
    train_4d(ablated, batches, abl_cfg)
    log("ablation 4D phase done")

    # held-out probe pose between the first two extrapolation paths
    probe_pose = orbit_plan(1, angle_step_deg=3.5, center_z=world.plane_z)[0]
    psnr_with, psnr_without, psnr_static = [], [], []
    emb = scene.global_embedding()
    emb_abl = ablated.global_embedding()
    for t in PROBE_TIMES:
        truth, _ = world.render(intr, probe_pose, t=t, amp_scale=1.0)
        got, _, _ = scene.render(intr, probe_pose, t=t, embedding=emb)
        psnr_with.append(psnr(np.clip(got, 0, 1), truth.rgb))
        got_abl, _, _ = ablated.render(intr, probe_pose, t=t, embedding=emb_abl)
        psnr_without.append(psnr(np.clip(got_abl, 0, 1), truth.rgb))
        got_static, _, _ = scene.render(intr, probe_pose)
        psnr_static.append(psnr(np.clip(got_static, 0, 1), truth.rgb))
    log(f"PSNR with embeddings: {psnr_with}")
    log(f"PSNR without embeddings: {psnr_without}")
    log(f"PSNR canonical (no motion): {psnr_static}")
    return {
        "psnr_with": psnr_with,
        "psnr_without": psnr_without,
        "psnr_canonical": psnr_static,
        "mean_psnr_with": float(np.mean(psnr_with)),
        "mean_psnr_without": float(np.mean(psnr_without)),
        "embedding_norms": np.abs(scene.embeddings).sum(axis=1).tolist(),
        "splats": len(scene.model),
        "points": len(cloud),
    }
