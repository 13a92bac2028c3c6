import numpy as np
import pytest

from sceneforge.errors import AlignmentUnderdetermined, ContractViolation
from sceneforge.expansion import (
    align_depth,
    apply_disparity_correction,
    disparity_objective,
    expand_scene,
    fit_disparity_correction,
    merge,
    orbit_plan,
    poisson_blend,
)
from sceneforge.geometry import (
    CameraPose,
    DepthMap,
    ImagePlane,
    PointCloud,
    RegionMask,
    render_pointcloud,
    unproject,
)
from sceneforge.plugins.synthetic import make_synthetic_plugins


class TestPoisson:
    def test_empty_fill_returns_known(self, rng):
        known = ImagePlane(rng.random((8, 8, 3)))
        out = poisson_blend(ImagePlane(rng.random((8, 8, 3))), known,
                            RegionMask(np.ones((8, 8))))
        np.testing.assert_array_equal(out.rgb, known.rgb)

    def test_constant_offset_removed(self, world):
        h, w = 24, 28
        xs, ys = np.meshgrid(np.linspace(-1, 1, w), np.linspace(-1, 1, h))
        truth = np.clip(world.texture(xs, ys), 0, 1)
        mask = np.ones((h, w))
        mask[8:18, 9:21] = 0.0
        known = truth.copy()
        known[mask == 0] = 0.0
        drifted = np.clip(truth + 0.06, 0, 1)
        out = poisson_blend(ImagePlane(drifted), ImagePlane(known), RegionMask(mask))
        assert np.abs(out.rgb - truth).max() < 1e-4

    def test_seam_jump_reduced(self, world):
        h, w = 24, 28
        xs, ys = np.meshgrid(np.linspace(-1, 1, w), np.linspace(-1, 1, h))
        truth = np.clip(world.texture(xs, ys), 0, 1)
        mask = np.ones((h, w))
        mask[:, 14:] = 0.0
        known = truth * (mask[..., None] == 1)
        drifted = np.clip(truth + 0.1, 0, 1)
        out = poisson_blend(ImagePlane(drifted), ImagePlane(known), RegionMask(mask))
        jump_before = np.abs(drifted[:, 14] - truth[:, 13]).max()
        jump_after = np.abs(out.rgb[:, 14] - out.rgb[:, 13]).max()
        assert jump_after < jump_before

    def test_non_binary_mask_rejected(self):
        with pytest.raises(ContractViolation):
            poisson_blend(ImagePlane(np.zeros((4, 4, 3))), ImagePlane(np.zeros((4, 4, 3))),
                          RegionMask(np.full((4, 4), 0.5)))


class TestAlignment:
    def test_identity_when_equal(self, rng):
        depth = DepthMap(rng.uniform(1, 3, (10, 12)))
        mask = RegionMask(np.ones((10, 12)))
        a, b, obj = fit_disparity_correction(depth, depth, mask)
        assert abs(a - 1) < 1e-9 and abs(b) < 1e-9 and obj < 1e-18

    def test_single_pixel_objective_value(self):
        # disparities 3 vs 1: ((3-1)/(3+1))^2 = 0.25
        new = DepthMap(np.full((4, 4), 1.0 / 3.0))
        known = DepthMap(np.full((4, 4), 1.0))
        mask = np.zeros((4, 4))
        mask[1, 2] = 1.0
        assert disparity_objective(new, known, RegionMask(mask)) == pytest.approx(0.25)

    def test_warp_recovery(self, rng):
        true = DepthMap(rng.uniform(0.8, 2.5, (20, 24)))
        wa, wb = 2.0, 0.1
        warped = DepthMap(1.0 / (wa / true.values + wb))
        mask = RegionMask(np.ones((20, 24)))
        a, b, _ = fit_disparity_correction(warped, true, mask)
        assert abs(a * wa - 1.0) < 1e-3 and abs(a * wb + b) < 1e-3
        aligned = apply_disparity_correction(warped, a, b)
        assert disparity_objective(aligned, true, mask) < 1e-6

    def test_small_support_error(self, rng):
        depth = DepthMap(rng.uniform(1, 2, (8, 8)))
        mask = np.zeros((8, 8))
        mask[0, :8] = 1.0  # 8 < 16 pixels
        with pytest.raises(AlignmentUnderdetermined):
            fit_disparity_correction(depth, depth, RegionMask(mask))

    def test_alignment_idempotent(self, rng):
        true = DepthMap(rng.uniform(0.8, 2.5, (16, 16)))
        warped = DepthMap(1.0 / (1.4 / true.values - 0.05))
        mask = RegionMask(np.ones((16, 16)))
        once = align_depth(warped, true, mask)
        twice = align_depth(once, true, mask)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-6)


class TestMerge:
    def test_empty_fill_is_noop(self, small_intr, rng):
        cloud = PointCloud(rng.standard_normal((5, 3)), rng.random((5, 3)))
        img = ImagePlane(rng.random((12, 16, 3)))
        depth = DepthMap(rng.uniform(1, 2, (12, 16)))
        out = merge(cloud, img, depth, RegionMask(np.zeros((12, 16))), small_intr, CameraPose())
        assert len(out) == len(cloud)

    def test_full_fill_adds_every_pixel(self, small_intr, rng):
        cloud = PointCloud.empty()
        img = ImagePlane(rng.random((12, 16, 3)))
        depth = DepthMap(rng.uniform(1, 2, (12, 16)))
        out = merge(cloud, img, depth, RegionMask(np.ones((12, 16))), small_intr,
                    CameraPose(), provenance_id=0)
        assert len(out) == 12 * 16

    def test_merged_render_reproduces_fill(self, small_intr, rng):
        img = ImagePlane(rng.random((12, 16, 3)))
        depth = DepthMap(rng.uniform(1.0, 1.5, (12, 16)))
        fill = np.zeros((12, 16))
        fill[4:8, 5:11] = 1.0
        cloud = merge(PointCloud.empty(), img, depth, RegionMask(fill), small_intr,
                      CameraPose(), provenance_id=0)
        re_img, _, re_mask = render_pointcloud(cloud, small_intr, CameraPose(), 0.0)
        assert np.array_equal(re_mask.weights, fill)
        np.testing.assert_array_equal(re_img.rgb[fill == 1], img.rgb[fill == 1])


class TestExpandScene:
    def _init_cloud(self, world, intr):
        image, _ = world.render(intr, CameraPose())
        x, y, s, hit = world.intersect(intr, CameraPose())
        return unproject(image, DepthMap(s, hit), intr, CameraPose(), 0)

    def test_zero_iterations(self, world, world_intr, plugins):
        cloud = self._init_cloud(world, world_intr)
        out, steps = expand_scene(cloud, [], plugins, world_intr)
        assert out is cloud and steps == []

    def test_three_orbit_iterations(self, world, world_intr, manifest):
        plugins = make_synthetic_plugins(world, depth_warp=(1.2, 0.05), manifest=manifest)
        cloud = self._init_cloud(world, world_intr)
        plan = orbit_plan(3, angle_step_deg=7.0, center_z=world.plane_z)
        out, steps = expand_scene(cloud, plan, plugins, world_intr, seed=5)
        assert len(steps) == 3
        # provenance strictly increases per iteration
        assert np.array_equal(np.unique(out.provenance), np.arange(4))
        for s, nxt in zip(steps[:-1], steps[1:]):
            assert s.new_points[1] == nxt.new_points[0]
        # coverage at a fixed probe pose is non-decreasing vs the initial cloud
        probe = plan[1]
        _, _, before = render_pointcloud(cloud, world_intr, probe)
        _, _, after = render_pointcloud(out, world_intr, probe)
        assert np.all(after.support >= before.support)
        # renders of the final cloud match the analytic world on known pixels
        worst = np.inf
        for pose in plan:
            img, _, mask = render_pointcloud(out, world_intr, pose)
            truth, _ = world.render(world_intr, pose)
            sup = mask.support
            mse = float(np.mean((img.rgb[sup] - truth.rgb[sup]) ** 2))
            worst = min(worst, -10 * np.log10(mse))
        assert worst > 35.0

    def test_disconnected_view_raises(self, world, world_intr, plugins):
        cloud = self._init_cloud(world, world_intr)
        behind = CameraPose(tuple(np.array([0.0, 1.0, 0.0, 0.0])), (0, 0, 0))  # 180 deg
        with pytest.raises(ContractViolation):
            expand_scene(cloud, [behind], plugins, world_intr)
