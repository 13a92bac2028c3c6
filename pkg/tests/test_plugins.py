import numpy as np
import pytest

from sceneforge.animate import _condition_extras
from sceneforge.errors import ScheduleError
from sceneforge.geometry import CameraPose, ImagePlane, RegionMask
from sceneforge.plugins.base import InpaintRequest, LatentVideo, ViewContext
from sceneforge.plugins.synthetic import (
    SyntheticCodec,
    SyntheticInpainter,
    SyntheticInterpolator,
    make_synthetic_plugins,
    video_to_latent,
)
from sceneforge.trajectory import interpolate_poses


class TestInpainter:
    def test_zero_mask_returns_input_exactly(self, world, world_intr, rng):
        inp = SyntheticInpainter(world)
        img = ImagePlane(rng.random((48, 48, 3)))
        req = InpaintRequest(img, RegionMask(np.zeros((48, 48))))
        out = inp.fill(req, seed=3, view=ViewContext(world_intr, CameraPose()))
        assert np.array_equal(out.rgb, img.rgb)

    def test_fill_matches_world_texture(self, world, world_intr):
        inp = SyntheticInpainter(world)
        truth, _ = world.render(world_intr, CameraPose())
        holes = np.zeros((48, 48))
        holes[10:30, 5:40] = 1.0
        img = ImagePlane(np.where(holes[..., None] == 1, 0.0, truth.rgb))
        out = inp.fill(InpaintRequest(img, RegionMask(holes)), 0,
                       ViewContext(world_intr, CameraPose()))
        np.testing.assert_allclose(out.rgb, truth.rgb, atol=1e-12)

    def test_determinism(self, world, world_intr, rng):
        inp = SyntheticInpainter(world, color_shift=0.02)
        img = ImagePlane(rng.random((48, 48, 3)))
        req = InpaintRequest(img, RegionMask(np.ones((48, 48))))
        view = ViewContext(world_intr, CameraPose())
        a = inp.fill(req, 7, view)
        b = inp.fill(req, 7, view)
        assert np.array_equal(a.rgb, b.rgb)


class TestDepthEstimator:
    def test_identity_warp_is_ground_truth(self, world, world_intr, plugins):
        truth = world.intersect(world_intr, CameraPose())[2]
        est = plugins.depth.estimate(ImagePlane(np.zeros((48, 48, 3))),
                                     ViewContext(world_intr, CameraPose()))
        np.testing.assert_allclose(est.values, truth, atol=1e-12)
        assert est.validity.all()

    def test_warped_constant_plane_disparity(self, world, world_intr, manifest):
        plugins = make_synthetic_plugins(world, depth_warp=(2.0, 0.1), manifest=manifest)
        est = plugins.depth.estimate(ImagePlane(np.zeros((48, 48, 3))),
                                     ViewContext(world_intr, CameraPose()))
        truth = world.intersect(world_intr, CameraPose())[2]
        np.testing.assert_allclose(1.0 / est.values, 2.0 / truth + 0.1, atol=1e-12)


class TestDenoiser:
    def _condition(self, plugins, world, world_intr, amp=1.0):
        traj = interpolate_poses(CameraPose(), CameraPose((1, 0, 0, 0), (0.15, 0, 0)), 9)
        start, _ = world.render(world_intr, traj.start, 0.0)
        return plugins.denoiser.make_condition(
            start, _condition_extras(traj, world_intr, amp, False)), traj

    def test_full_denoise_reaches_target_exactly(self, plugins, world, world_intr, rng):
        cond, traj = self._condition(plugins, world, world_intr)
        z = LatentVideo(rng.standard_normal((9, 3, 48, 48)), 25)
        for step in range(25, 0, -1):
            z = plugins.denoiser.step(z, step, cond)
        assert z.schedule_step == 0
        times = np.arange(9) / 8.0
        start, _ = world.render(world_intr, traj.start, 0.0)
        expected = [start] + [world.render(world_intr, p, t)[0]
                              for p, t in zip(traj.poses[1:], times[1:])]
        np.testing.assert_allclose(z.frames, video_to_latent(expected), atol=1e-9)

    def test_two_conditions_differ(self, plugins, world, world_intr, rng):
        cond_a, _ = self._condition(plugins, world, world_intr, amp=1.0)
        cond_b, _ = self._condition(plugins, world, world_intr, amp=1.7)
        z = LatentVideo(rng.standard_normal((9, 3, 48, 48)), 25)
        za = plugins.denoiser.step(z, 10, cond_a)
        zb = plugins.denoiser.step(z, 10, cond_b)
        assert not np.allclose(za.frames, zb.frames)

    def test_step_range_enforced(self, plugins, world, world_intr, rng):
        cond, _ = self._condition(plugins, world, world_intr)
        z = LatentVideo(rng.standard_normal((9, 3, 48, 48)), 25)
        with pytest.raises(ScheduleError):
            plugins.denoiser.step(z, 0, cond)
        with pytest.raises(ScheduleError):
            plugins.denoiser.step(z, 26, cond)

    def test_entry_at_terminal_step_valid(self, plugins, world, world_intr, rng):
        cond, _ = self._condition(plugins, world, world_intr)
        z = LatentVideo(rng.standard_normal((9, 3, 48, 48)), 25)
        out = plugins.denoiser.step(z, 25, cond)
        assert out.schedule_step == 24


class TestCodec:
    def test_lossless_round_trip(self, rng):
        codec = SyntheticCodec()
        frames = [ImagePlane(rng.random((24, 20, 3))) for _ in range(5)]
        z = codec.encode(frames)
        assert z.frames.shape == (5, 3, 24, 20)
        back = codec.decode(z)
        for f, g in zip(frames, back):
            assert np.array_equal(f.rgb, g.rgb)

    def test_lossy_variant_reduces_psnr(self, rng):
        sharp = np.zeros((32, 32, 3))
        sharp[::2] = 1.0  # stripes blur badly
        frames = [ImagePlane(sharp)]
        lossy = SyntheticCodec(blur_sigma=1.5)
        back = lossy.decode(lossy.encode(frames))[0]
        mse = np.mean((back.rgb - sharp) ** 2)
        psnr = -10 * np.log10(mse)
        assert psnr < 20.0


class TestInterpolator:
    def test_identical_endpoints(self, rng):
        interp = SyntheticInterpolator()
        a = ImagePlane(rng.random((8, 8, 3)))
        out = interp.interpolate(a, ImagePlane(a.rgb.copy()), 1)
        assert len(out) == 1
        np.testing.assert_allclose(out[0].rgb, a.rgb, atol=1e-15)

    def test_three_frame_weights(self, rng):
        interp = SyntheticInterpolator()
        a = ImagePlane(np.zeros((4, 4, 3)))
        b = ImagePlane(np.ones((4, 4, 3)))
        out = interp.interpolate(a, b, 3)
        for frame, w in zip(out, (0.25, 0.5, 0.75)):
            np.testing.assert_allclose(frame.rgb, w, atol=1e-15)

    def test_endpoints_never_returned(self, rng):
        interp = SyntheticInterpolator()
        a = ImagePlane(np.zeros((4, 4, 3)))
        b = ImagePlane(np.ones((4, 4, 3)))
        out = interp.interpolate(a, b, 4)
        assert len(out) == 4
        for frame in out:
            assert not np.array_equal(frame.rgb, a.rgb)
            assert not np.array_equal(frame.rgb, b.rgb)
