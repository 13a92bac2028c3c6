"""CLI pipeline: tiny synthetic run through every stage, resumability, exit codes."""

import json

import numpy as np
import pytest

from sceneforge.cli import main
from sceneforge.config import ForgeConfig
from sceneforge.formats import read_png, write_png
from sceneforge.geometry import CameraPose
from sceneforge.plugins.synthetic import SyntheticWorld


TINY = """
[camera]
fx = 32.0
fy = 32.0
cx = 15.5
cy = 15.5
width = 32
height = 32

[expansion]
iterations = 2
plan = orbit
orbit_step_deg = 6.0

[animate]
videos = 2
frames = 5
tau_tr = 6
tau_refine = 3
end_transition_n = 2

[world]
schedule_steps = 10

[train]
iters_canonical = 40
iters_4d = 60
target_splats = 60
checkpoint_every = 0
soft_width_px = 3.0

[hexplane]
spatial_resolutions = 6,8
time_resolutions = 3,5
n_features = 4
"""


@pytest.fixture
def workdir(tmp_path):
    cfg_path = tmp_path / "forge.ini"
    cfg_path.write_text(TINY)
    cfg = ForgeConfig.load(cfg_path)
    world = SyntheticWorld()
    from sceneforge.geometry import CameraIntrinsics

    intr = CameraIntrinsics(fx=32, fy=32, cx=15.5, cy=15.5, width=32, height=32)
    image, _ = world.render(intr, CameraPose())
    write_png(image, tmp_path / "input.png")
    return tmp_path, cfg_path


def run(args):
    return main([str(a) for a in args])


def test_full_pipeline(workdir):
    tmp, cfg = workdir
    bundle = tmp / "bundle"
    assert run(["expand", "--input", tmp / "input.png", "--out", bundle,
                "--config", cfg]) == 0
    manifest = json.loads((bundle / "manifest.json").read_text())
    assert manifest["stages"]["expand"]["points"] > 900
    assert run(["animate", "--bundle", bundle, "--config", cfg]) == 0
    assert run(["train", "--bundle", bundle, "--config", cfg]) == 0
    assert run(["export", "--bundle", bundle, "--out", tmp / "pack",
                "--times", "0.0,0.5", "--mode", "baked"]) == 0
    assert (tmp / "pack" / "pack.json").exists()

    poses = [{"rotation": [1, 0, 0, 0], "translation": [0, 0, 0]},
             {"rotation": [1, 0, 0, 0], "translation": [0.05, 0, 0]}]
    (tmp / "path.json").write_text(json.dumps(poses))
    assert run(["render-path", "--bundle", bundle, "--poses", tmp / "path.json",
                "--out", tmp / "fly", "--time", "0.0"]) == 0
    frame = read_png(tmp / "fly" / "frame_000.png")
    assert frame.rgb.shape == (32, 32, 3)
    assert frame.rgb.max() > 0.1


def test_rerun_skips_completed_stage(workdir, capsys):
    tmp, cfg = workdir
    bundle = tmp / "bundle"
    run(["expand", "--input", tmp / "input.png", "--out", bundle, "--config", cfg])
    before = (bundle / "manifest.json").read_bytes()
    assert run(["expand", "--input", tmp / "input.png", "--out", bundle,
                "--config", cfg]) == 0
    assert "skipping" in capsys.readouterr().out
    assert (bundle / "manifest.json").read_bytes() == before


def test_changed_config_reruns_stage(workdir):
    tmp, cfg = workdir
    bundle = tmp / "bundle"
    run(["expand", "--input", tmp / "input.png", "--out", bundle, "--config", cfg])
    assert run(["expand", "--input", tmp / "input.png", "--out", bundle,
                "--config", cfg, "--set", "expansion.iterations=3"]) == 0
    manifest = json.loads((bundle / "manifest.json").read_text())
    assert len(manifest["expansion_steps"]) == 3


def test_lock_file_blocks_concurrent_runs(workdir):
    tmp, cfg = workdir
    bundle = tmp / "bundle"
    bundle.mkdir()
    (bundle / ".lock").write_text("123")
    assert run(["expand", "--input", tmp / "input.png", "--out", bundle,
                "--config", cfg]) == 2


def test_bad_config_exits_2(workdir):
    tmp, cfg = workdir
    assert run(["expand", "--input", tmp / "input.png", "--out", tmp / "b",
                "--config", cfg, "--set", "animate.nonsense=1"]) == 2


def test_resolution_mismatch_exits_2(workdir, rng):
    tmp, cfg = workdir
    from sceneforge.geometry import ImagePlane

    write_png(ImagePlane(rng.random((8, 8, 3))), tmp / "small.png")
    assert run(["expand", "--input", tmp / "small.png", "--out", tmp / "b",
                "--config", cfg]) == 2


def test_remote_plugins_via_env(workdir, monkeypatch):
    from sceneforge.plugins.server import PluginServer
    from sceneforge.plugins.synthetic import make_synthetic_plugins
    from sceneforge.plugins.base import PluginManifest

    tmp, cfg = workdir
    world = SyntheticWorld()
    manifest = PluginManifest(capability="denoiser", latent_height=32, latent_width=32,
                              frames=5, schedule_steps=10)
    server = PluginServer(make_synthetic_plugins(world, manifest=manifest)).start()
    host, port = server.address
    monkeypatch.setenv("FORGE_PLUGIN_SOCKET", f"{host}:{port}")
    try:
        assert run(["expand", "--input", tmp / "input.png", "--out", tmp / "remote_bundle",
                    "--config", cfg]) == 0
        manifest_json = json.loads((tmp / "remote_bundle" / "manifest.json").read_text())
        assert manifest_json["stages"]["expand"]["points"] > 900
    finally:
        server.stop()


def test_verify_failure_exits_4(monkeypatch):
    from sceneforge import verify

    def fake_run_all(include_end_to_end=False):
        return [verify.CheckResult("stub", False, "forced failure")]

    monkeypatch.setattr(verify, "run_all", fake_run_all)
    assert run(["verify"]) == 4


def test_verify_success_exits_0(monkeypatch):
    from sceneforge import verify

    def fake_run_all(include_end_to_end=False):
        return [verify.CheckResult("stub", True, "ok")]

    monkeypatch.setattr(verify, "run_all", fake_run_all)
    assert run(["verify"]) == 0
