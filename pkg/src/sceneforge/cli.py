"""forge: pipeline orchestration CLI.

Subcommands: expand, animate, train, export, render-path, verify.
Exit codes: 0 ok, 2 config error, 3 plugin failure, 4 verification failure.
A lock file serializes pipelines per bundle directory; completed stages are
skipped when re-run with an unchanged config.
"""

import argparse
import contextlib
import os
import sys
from pathlib import Path

import numpy as np

from sceneforge import bundle as bundle_io
from sceneforge import expansion, trajectory, visibility
from sceneforge.animate import SamplerConfig, animate_all, render_static_video
from sceneforge.config import ForgeConfig
from sceneforge.errors import BundleError, ConfigError, ForgeError, PluginFailure
from sceneforge.formats import read_png, write_png
from sceneforge.geometry import CameraIntrinsics, CameraPose, ImagePlane, unproject
from sceneforge.plugins.base import PluginManifest, ViewContext
from sceneforge.plugins.synthetic import SyntheticWorld, make_synthetic_plugins
from sceneforge.splats.hexplane import HexPlaneConfig
from sceneforge.splats.model import init_from_cloud
from sceneforge.splats.scene import Scene4D
from sceneforge.splats.train import TrainConfig, train_4d, train_canonical, video_batches, canonical_batches

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PLUGIN = 3
EXIT_VERIFY = 4


@contextlib.contextmanager
def bundle_lock(directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"bundle {directory} is locked by another pipeline run")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def load_config(args) -> ForgeConfig:
    cfg = ForgeConfig.load(args.config) if args.config else ForgeConfig()
    cfg.apply_overrides(getattr(args, "set", None))
    return cfg


def make_plugins(cfg: ForgeConfig):
    socket_addr = os.environ.get("FORGE_PLUGIN_SOCKET", cfg.plugins.socket)
    if socket_addr:
        from sceneforge.plugins.client import connect

        return connect(socket_addr)
    w = cfg.world
    world = SyntheticWorld(plane_z=w.plane_z, motion_amplitude=w.motion_amplitude)
    manifest = PluginManifest(
        capability="denoiser",
        latent_height=cfg.camera.height, latent_width=cfg.camera.width,
        frames=cfg.animate.frames, schedule_steps=w.schedule_steps,
        noise_sigma_max=w.noise_sigma_max,
    )
    return make_synthetic_plugins(
        world, depth_warp=(w.depth_warp_a, w.depth_warp_b),
        color_shift=w.color_shift, codec_blur=w.codec_blur,
        manifest=manifest,
    )


def camera_from(cfg: ForgeConfig) -> CameraIntrinsics:
    c = cfg.camera
    return CameraIntrinsics(fx=c.fx, fy=c.fy, cx=c.cx, cy=c.cy,
                            width=c.width, height=c.height)


def plan_from(cfg: ForgeConfig, plan_path=None):
    if plan_path:
        return expansion.load_pose_plan(plan_path)
    e = cfg.expansion
    if e.plan == "orbit":
        return expansion.orbit_plan(e.iterations, e.orbit_step_deg, e.orbit_center_z)
    if e.plan == "pan":
        return expansion.pan_plan(e.iterations, (e.pan_step_x, e.pan_step_y, e.pan_step_z))
    raise ConfigError(f"unknown expansion plan {cfg.expansion.plan!r}")


def _stage_done(bundle, stage, cfg):
    info = bundle.stage_info(stage)
    return info is not None and info.get("config") == cfg.digest()


# ------------------------------------------------------------------ stages


def cmd_expand(args):
    cfg = load_config(args)
    with bundle_lock(args.out):
        try:
            bundle = bundle_io.SceneBundle.open(args.out)
        except BundleError:
            bundle = bundle_io.SceneBundle(args.out)
        if _stage_done(bundle, "expand", cfg):
            print("expand: already complete, skipping")
            return EXIT_OK
        plugins = make_plugins(cfg)
        intr = camera_from(cfg)
        image = read_png(args.input)
        if image.shape != (intr.height, intr.width):
            raise ConfigError("input image resolution differs from [camera] config")
        depth = plugins.depth.estimate(image, ViewContext(intr, CameraPose()))
        cloud = unproject(image, depth, intr, CameraPose(), provenance_id=0)
        plan = plan_from(cfg, args.plan)
        cloud, steps = expansion.expand_scene(
            cloud, plan, plugins, intr, prompt=args.prompt,
            seed=cfg.expansion.seed, splat_radius_px=cfg.expansion.splat_radius_px,
        )
        bundle.write_cloud(cloud)
        bundle.write_intrinsics(intr)
        step_entries = []
        for s in steps:
            bundle.write_video("steps", s.index, [s.blended_image])
            step_entries.append({
                "index": s.index,
                "pose": list(s.pose.rotation) + list(s.pose.translation),
                "new_points": list(s.new_points),
            })
        bundle.manifest["expansion_steps"] = step_entries
        bundle.manifest["config_ini"] = cfg.to_ini()
        bundle.mark_stage("expand", {"config": cfg.digest(), "points": len(cloud)})
        bundle.save_manifest()
        print(f"expand: {len(steps)} iterations, cloud has {len(cloud)} points")
    return EXIT_OK


def _steps_from_manifest(bundle):
    steps = []
    for e in bundle.manifest.get("expansion_steps", []):
        pose = CameraPose(tuple(e["pose"][:4]), tuple(e["pose"][4:7]))
        steps.append(expansion.ExpansionStep(
            index=e["index"], pose=pose, known_mask=None, blended_image=None,
            aligned_depth=None, new_points=tuple(e["new_points"]),
        ))
    return steps


def cmd_animate(args):
    cfg = load_config(args)
    with bundle_lock(args.bundle):
        bundle = bundle_io.SceneBundle.open(args.bundle)
        if _stage_done(bundle, "animate", cfg):
            print("animate: already complete, skipping")
            return EXIT_OK
        plugins = make_plugins(cfg)
        intr = bundle.read_intrinsics()
        cloud = bundle.read_cloud()
        steps = _steps_from_manifest(bundle)
        trajs = trajectory.plan_videos(
            steps, cfg.animate.videos, cfg.animate.frames,
            cloud=cloud, intr=intr,
        )
        sampler = SamplerConfig(
            tau_tr=cfg.animate.tau_tr, tau_refine=cfg.animate.tau_refine,
            fuse_weight=cfg.animate.fuse_weight,
            end_transition_n=cfg.animate.end_transition_n,
            motion_spread=cfg.animate.motion_spread, seed=cfg.animate.seed,
        )
        videos = animate_all(trajs, cloud, sampler, plugins, intr,
                             splat_radius_px=cfg.expansion.splat_radius_px,
                             max_workers=cfg.animate.workers)
        bundle.write_trajectories(trajs)
        for k, frames in enumerate(videos):
            bundle.write_video("videos", k, frames)
        bundle.mark_stage("animate", {"config": cfg.digest(), "videos": len(videos)})
        bundle.save_manifest()
        print(f"animate: {len(videos)} videos of {cfg.animate.frames} frames")
    return EXIT_OK


def cmd_train(args):
    cfg = load_config(args)
    if args.iters_canonical is not None:
        cfg.train.iters_canonical = args.iters_canonical
    if args.iters_4d is not None:
        cfg.train.iters_4d = args.iters_4d
    with bundle_lock(args.bundle):
        bundle = bundle_io.SceneBundle.open(args.bundle)
        if _stage_done(bundle, "train", cfg):
            print("train: already complete, skipping")
            return EXIT_OK
        intr = bundle.read_intrinsics()
        cloud = bundle.read_cloud()
        trajs = bundle.read_trajectories()
        videos = [bundle.read_video("videos", k) for k in range(len(trajs))]
        rng = np.random.default_rng(cfg.train.seed)

        stats = []
        depths = []
        for traj in trajs:
            d = visibility.trajectory_depths(cloud, traj, intr, cfg.expansion.splat_radius_px)
            depths.append(d)
            stats.append(visibility.view_stats(cloud, traj, intr, d))
        assign = visibility.assign_owners(stats, beta=cfg.train.beta)
        masks = visibility.build_masks(assign, trajs, intr, cloud,
                                       soft_width_px=cfg.train.soft_width_px,
                                       splat_radius_px=cfg.expansion.splat_radius_px)
        for k, m in enumerate(masks):
            bundle.write_masks(k, m)

        target = cfg.train.target_splats or None
        model = init_from_cloud(cloud, target_count=target, rng=rng)
        spatial, times = cfg.hexplane.resolutions()
        scene = Scene4D.create(
            model, num_videos=len(trajs), embed_dim=cfg.train.embed_dim,
            hex_config=HexPlaneConfig(spatial, times, cfg.hexplane.n_features),
            rng=rng,
        )
        scene.lambda_depth = cfg.train.lambda_depth
        scene.lambda_rigidity = cfg.train.lambda_rigidity

        tcfg = TrainConfig(
            iters_canonical=cfg.train.iters_canonical, iters_4d=cfg.train.iters_4d,
            lrs=cfg.train_lrs(), prune_interval=cfg.train.prune_interval,
            prune_opacity=cfg.train.prune_opacity,
            embed_l1_bound=cfg.train.embed_l1_bound, seed=cfg.train.seed,
            checkpoint_every=cfg.train.checkpoint_every,
        )
        renders = []
        for traj, dlist in zip(trajs, depths):
            for pose, depth in zip(traj.poses, dlist):
                image, dmap, _ = expansion.render_pointcloud(
                    cloud, intr, pose, cfg.expansion.splat_radius_px)
                renders.append((pose, image, dmap))
        canon = canonical_batches(renders, intr)

        def checkpoint(phase):
            def cb(it):
                if tcfg.checkpoint_every and it % tcfg.checkpoint_every == 0:
                    ck = bundle_io.SceneBundle(Path(args.bundle) / "checkpoints" / f"{phase}_{it:06d}")
                    ck.write_scene(scene)
                    ck.save_manifest()
            return cb

        train_canonical(scene, canon, tcfg, on_iteration=checkpoint("canonical"))
        batches = video_batches(videos, masks, trajs, intr, depths)
        train_4d(scene, batches, tcfg, on_iteration=checkpoint("4d"))

        bundle.write_scene(scene)
        bundle.mark_stage("train", {"config": cfg.digest(), "splats": len(scene.model)})
        bundle.save_manifest()
        print(f"train: {len(scene.model)} splats trained "
              f"({cfg.train.iters_canonical}+{cfg.train.iters_4d} iters)")
    return EXIT_OK


def cmd_export(args):
    with bundle_lock(args.bundle):
        bundle = bundle_io.SceneBundle.open(args.bundle)
        scene = bundle.read_scene()
        times = [float(t) for t in args.times.split(",")] if args.times else []
        path = bundle_io.export_viewer_pack(scene, times, args.out, mode=args.mode)
        print(f"export: wrote {path}")
    return EXIT_OK


def cmd_render_path(args):
    bundle = bundle_io.SceneBundle.open(args.bundle)
    scene = bundle.read_scene()
    intr = bundle.read_intrinsics()
    poses = expansion.load_pose_plan(args.poses)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emb = scene.global_embedding()
    for j, pose in enumerate(poses):
        if args.sweep and len(poses) > 1:
            t = j / (len(poses) - 1)
        else:
            t = args.time
        rgb, _, _ = scene.render(intr, pose, t=t, embedding=emb)
        write_png(ImagePlane(np.clip(rgb, 0.0, 1.0)), out / f"frame_{j:03d}.png")
    print(f"render-path: {len(poses)} frames -> {out}")
    return EXIT_OK


def cmd_verify(args):
    from sceneforge import verify

    results = verify.run_all(include_end_to_end=args.full)
    failed = verify.report(results)
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="forge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file (key=value sections)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value")

    p = sub.add_parser("expand", help="stage 1: expand the input into a point cloud")
    p.add_argument("--input", required=True, help="seed image (PNG)")
    p.add_argument("--prompt", default="", help="scene text prompt")
    p.add_argument("--plan", help="pose plan JSON (defaults to the config preset)")
    p.add_argument("--out", required=True, help="bundle directory")
    common(p)
    p.set_defaults(fn=cmd_expand)

    p = sub.add_parser("animate", help="stage 2: animate per-trajectory videos")
    p.add_argument("--bundle", required=True)
    common(p)
    p.set_defaults(fn=cmd_animate)

    p = sub.add_parser("train", help="stage 3: fit the 4D splat scene")
    p.add_argument("--bundle", required=True)
    p.add_argument("--iters-canonical", type=int, default=None)
    p.add_argument("--iters-4d", type=int, default=None)
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("export", help="write a viewer pack")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--times", default="0.0,0.25,0.5,0.75,1.0")
    p.add_argument("--mode", choices=("baked", "live"), default="baked")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("render-path", help="offline flythrough from a pose file")
    p.add_argument("--bundle", required=True)
    p.add_argument("--poses", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--sweep", action="store_true", help="sweep time over the path")
    p.set_defaults(fn=cmd_render_path)

    p = sub.add_parser("verify", help="run the oracle verification suites")
    p.add_argument("--full", action="store_true",
                   help="include the end-to-end synthetic-world run")
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PluginFailure as exc:
        print(f"plugin failure: {exc}", file=sys.stderr)
        return EXIT_PLUGIN
    except ForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY if isinstance(exc, BundleError) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
