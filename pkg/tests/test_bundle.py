import json
from pathlib import Path

import numpy as np
import pytest

from sceneforge.bundle import (
    SceneBundle,
    export_viewer_pack,
    records_to_splats,
    splats_to_records,
)
from sceneforge.errors import BundleError
from sceneforge.formats import unpack_tensor
from sceneforge.geometry import CameraIntrinsics, CameraPose, PointCloud
from sceneforge.splats import quat
from sceneforge.splats.hexplane import HexPlaneConfig
from sceneforge.splats.model import SplatModel, init_from_cloud
from sceneforge.splats.render import render_splats
from sceneforge.splats.scene import Scene4D
from sceneforge.trajectory import interpolate_poses


@pytest.fixture
def scene(rng):
    cloud = PointCloud(
        np.column_stack([rng.uniform(-1, 1, 40), rng.uniform(-1, 1, 40),
                         rng.uniform(1.5, 3, 40)]),
        rng.random((40, 3)),
    )
    model = init_from_cloud(cloud, rng=rng)
    cfg = HexPlaneConfig(spatial_resolutions=(4, 6), time_resolutions=(3, 4), n_features=4)
    scene = Scene4D.create(model, num_videos=3, embed_dim=8, hex_config=cfg, rng=rng)
    scene.embeddings[:] = 0.1 * rng.standard_normal(scene.embeddings.shape)
    scene.decoder.randomize_heads(rng, scale=0.02)
    return scene


def write_bundle(tmp_path, scene):
    bundle = SceneBundle(tmp_path / "bundle")
    bundle.write_scene(scene)
    bundle.write_intrinsics(CameraIntrinsics(fx=10, fy=10, cx=8, cy=6, width=16, height=12))
    bundle.write_trajectories([interpolate_poses(CameraPose(), CameraPose((1, 0, 0, 0), (1, 0, 0)), 4)])
    bundle.save_manifest()
    return bundle


class TestRoundTrip:
    def test_save_load_save_is_byte_identical(self, tmp_path, scene):
        bundle = write_bundle(tmp_path, scene)
        loaded = SceneBundle.open(bundle.dir).read_scene()
        second = SceneBundle(tmp_path / "bundle2")
        second.write_scene(loaded)
        second.save_manifest()
        for rel in bundle.manifest["checksums"]:
            if rel.endswith(".bin"):
                a = (bundle.dir / rel).read_bytes()
                b = (second.dir / rel).read_bytes()
                assert a == b, rel

    def test_load_matches_f32_precision(self, tmp_path, scene):
        bundle = write_bundle(tmp_path, scene)
        loaded = SceneBundle.open(bundle.dir).read_scene()
        np.testing.assert_allclose(loaded.model.positions, scene.model.positions,
                                   atol=1e-6)
        np.testing.assert_allclose(loaded.embeddings, scene.embeddings, atol=1e-7)
        unit_a, _ = quat.normalize(loaded.model.rotations)
        unit_b, _ = quat.normalize(scene.model.rotations)
        np.testing.assert_allclose(unit_a, unit_b, atol=1e-6)

    def test_trajectories_and_camera_round_trip(self, tmp_path, scene):
        bundle = write_bundle(tmp_path, scene)
        loaded = SceneBundle.open(bundle.dir)
        trajs = loaded.read_trajectories()
        assert len(trajs) == 1 and len(trajs[0]) == 4
        intr = loaded.read_intrinsics()
        assert intr.width == 16 and intr.fx == 10

    def test_corrupted_checksum_rejected(self, tmp_path, scene):
        bundle = write_bundle(tmp_path, scene)
        target = bundle.dir / "embeddings.bin"
        blob = bytearray(target.read_bytes())
        blob[-1] ^= 0xFF
        target.write_bytes(bytes(blob))
        with pytest.raises(BundleError):
            SceneBundle.open(bundle.dir)

    def test_unknown_manifest_keys_ignored(self, tmp_path, scene):
        bundle = write_bundle(tmp_path, scene)
        manifest = json.loads((bundle.dir / "manifest.json").read_text())
        manifest["future_extension"] = {"anything": [1, 2, 3]}
        (bundle.dir / "manifest.json").write_text(json.dumps(manifest))
        loaded = SceneBundle.open(bundle.dir)
        assert loaded.read_scene() is not None

    def test_missing_version_rejected(self, tmp_path, scene):
        bundle = write_bundle(tmp_path, scene)
        manifest = json.loads((bundle.dir / "manifest.json").read_text())
        del manifest["version"]
        (bundle.dir / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(BundleError):
            SceneBundle.open(bundle.dir)


class TestSplatRecords:
    def test_record_width(self, scene):
        rec = splats_to_records(scene.model)
        assert rec.shape == (len(scene.model), 59)

    def test_record_round_trip(self, scene):
        rec = splats_to_records(scene.model).astype(np.float32).astype(np.float64)
        back = records_to_splats(rec)
        rec2 = splats_to_records(back)
        np.testing.assert_array_equal(rec.astype(np.float32), rec2.astype(np.float32))


class TestViewerPack:
    def test_baked_t0_equals_canonical_when_zero_deformed(self, tmp_path, rng, scene):
        # fresh zero-init decoder: deformation identically zero
        cloud = PointCloud(np.column_stack([rng.uniform(-1, 1, 20)] * 3) + [0, 0, 2],
                           rng.random((20, 3)))
        model = init_from_cloud(cloud, rng=rng)
        z_scene = Scene4D.create(model, num_videos=1, embed_dim=4, rng=rng,
                                 hex_config=HexPlaneConfig((4,), (3,), 2))
        export_viewer_pack(z_scene, [0.0], tmp_path / "pack", mode="baked")
        blob = (tmp_path / "pack" / "baked_000.bin").read_bytes()
        baked, _ = unpack_tensor(blob)
        np.testing.assert_array_equal(
            baked.astype(np.float32),
            splats_to_records(z_scene.model).astype(np.float32))

    def test_baked_matches_engine_deform(self, tmp_path, scene):
        t = 0.4
        export_viewer_pack(scene, [t], tmp_path / "pack", mode="baked")
        baked, _ = unpack_tensor((tmp_path / "pack" / "baked_000.bin").read_bytes())
        model = records_to_splats(baked)
        intr = CameraIntrinsics(fx=10, fy=10, cx=8, cy=6, width=16, height=12)
        unit, _ = quat.normalize(model.rotations)
        rgb_pack, _, _ = render_splats(model.positions, unit, model.log_scales,
                                       model.opacity_logits, model.sh, intr, CameraPose())
        pos, unit2, logs = scene.deformed_state(t, scene.global_embedding())
        rgb_live, _, _ = render_splats(pos, unit2, logs, scene.model.opacity_logits,
                                       scene.model.sh, intr, CameraPose())
        np.testing.assert_allclose(rgb_pack, rgb_live, atol=1e-5)

    def test_live_mode_with_empty_times(self, tmp_path, scene):
        path = export_viewer_pack(scene, [], tmp_path / "pack", mode="live")
        meta = json.loads(path.read_text())
        assert meta["mode"] == "live" and meta["times"] == []
        assert (tmp_path / "pack" / "canonical.bin").exists()
        assert (tmp_path / "pack" / "embedding.bin").exists()


class TestGoldenFixture:
    """Byte-level format stability: the committed golden bundle decodes
    identically across releases."""

    GOLDEN = Path(__file__).parent / "golden"

    def test_golden_bundle_decodes_to_frozen_values(self):
        with open(self.GOLDEN / "expected_v1.json") as fh:
            expected = json.load(fh)
        bundle = SceneBundle.open(self.GOLDEN / "bundle_v1")
        assert bundle.manifest["checksums"] == expected["checksums"]
        splat0 = np.asarray(bundle.read_array("splats"))[0][:11]
        np.testing.assert_allclose(splat0, expected["splat0"], rtol=0, atol=0)
        emb0 = np.asarray(bundle.read_array("embeddings"))[0]
        np.testing.assert_allclose(emb0, expected["embedding0"], rtol=0, atol=0)
        scene = bundle.read_scene()
        assert len(scene.model) == 12 and scene.embeddings.shape == (2, 4)
