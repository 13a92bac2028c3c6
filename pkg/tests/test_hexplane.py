import numpy as np

from sceneforge.geometry import CameraIntrinsics, CameraPose
from sceneforge.splats.hexplane import HexPlaneConfig, HexPlaneField
from sceneforge.splats.model import SplatModel
from sceneforge.splats.scene import Scene4D


def small_field(rng):
    cfg = HexPlaneConfig(spatial_resolutions=(4,), time_resolutions=(3,),
                         n_features=2, init_scale=0.2)
    return HexPlaneField.create(cfg, rng)


def test_sample_at_grid_nodes_is_product_of_node_values(rng):
    field = small_field(rng)
    # query exactly at grid node (0.0 ... corners)
    coords = np.array([[0.0, 0.0, 0.0, 0.0]])
    feats, _ = field.sample(coords)
    expected = np.ones(2)
    for grid in field.grids[0]:
        expected = expected * grid[0, 0]
    np.testing.assert_allclose(feats[0], expected, atol=1e-12)


def test_feature_dim_is_levels_times_features(rng):
    cfg = HexPlaneConfig(spatial_resolutions=(4, 8), time_resolutions=(3, 5),
                         n_features=3)
    field = HexPlaneField.create(cfg, rng)
    feats, _ = field.sample(rng.random((7, 4)))
    assert feats.shape == (7, 6)


def test_sample_deterministic(rng):
    field = small_field(rng)
    coords = rng.random((5, 4))
    a, _ = field.sample(coords)
    b, _ = field.sample(coords)
    assert np.array_equal(a, b)


def make_scene(rng, n=8):
    model = SplatModel(
        positions=np.column_stack([rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, n),
                                   rng.uniform(1.5, 2.5, n)]),
        rotations=rng.standard_normal((n, 4)) + np.array([2.0, 0, 0, 0]),
        log_scales=np.full((n, 3), np.log(0.2)),
        opacity_logits=np.full(n, 1.0),
        sh=0.2 * rng.standard_normal((n, 16, 3)),
    )
    cfg = HexPlaneConfig(spatial_resolutions=(4, 6), time_resolutions=(3, 4), n_features=4)
    return Scene4D.create(model, num_videos=2, embed_dim=6, hex_config=cfg, rng=rng)


def test_zero_initialized_decoder_gives_bitexact_canonical_render(rng):
    scene = make_scene(rng)
    intr = CameraIntrinsics(fx=20, fy=20, cx=8, cy=6, width=16, height=12)
    pose = CameraPose()
    canon_rgb, canon_depth, canon_acc = scene.render(intr, pose)
    for t in (0.0, 0.3, 1.0):
        rgb, depth, acc = scene.render(intr, pose, t=t, embedding=scene.embeddings[0])
        assert np.array_equal(rgb, canon_rgb)
        assert np.array_equal(depth, canon_depth)
        assert np.array_equal(acc, canon_acc)


def test_distinct_embeddings_deform_differently(rng):
    scene = make_scene(rng)
    scene.decoder.randomize_heads(rng, scale=0.05)
    scene.embeddings[0] = rng.standard_normal(6)
    scene.embeddings[1] = rng.standard_normal(6)
    a = scene.deformed_state(0.5, scene.embeddings[0])[0]
    b = scene.deformed_state(0.5, scene.embeddings[1])[0]
    assert not np.allclose(a, b)


def test_deform_deterministic(rng):
    scene = make_scene(rng)
    scene.decoder.randomize_heads(rng, scale=0.05)
    a = scene.deformed_state(0.25, scene.embeddings[0])
    b = scene.deformed_state(0.25, scene.embeddings[0])
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_global_embedding_is_mean(rng):
    scene = make_scene(rng)
    scene.embeddings[0] = np.array([1.0, 0, 0, 0, 0, 0])
    scene.embeddings[1] = np.array([0.0, 1, 0, 0, 0, 0])
    np.testing.assert_allclose(scene.global_embedding(), [0.5, 0.5, 0, 0, 0, 0])
