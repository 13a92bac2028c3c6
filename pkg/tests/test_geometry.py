import numpy as np
import pytest

from sceneforge.errors import ContractViolation
from sceneforge.geometry import (
    CameraIntrinsics,
    CameraPose,
    DepthMap,
    ImagePlane,
    PointCloud,
    RegionMask,
    project_points,
    quat_from_axis_angle,
    render_pointcloud,
    unproject,
)


def make_image(h, w, rng):
    return ImagePlane(rng.random((h, w, 3)))


class TestTypes:
    def test_intrinsics_validation(self):
        with pytest.raises(ContractViolation):
            CameraIntrinsics(fx=-1, fy=1, cx=0, cy=0, width=4, height=4)
        with pytest.raises(ContractViolation):
            CameraIntrinsics(fx=1, fy=1, cx=9, cy=0, width=4, height=4)

    def test_pose_quaternion_norm(self):
        with pytest.raises(ContractViolation):
            CameraPose((1.0, 1.0, 0.0, 0.0), (0, 0, 0))

    def test_depth_positive(self):
        with pytest.raises(ContractViolation):
            DepthMap(np.array([[1.0, -2.0]]))
        # invalid entries may hold anything
        DepthMap(np.array([[1.0, -2.0]]), np.array([[True, False]]))

    def test_image_range(self):
        with pytest.raises(ContractViolation):
            ImagePlane(np.full((2, 2, 3), 1.5))

    def test_mask_range(self):
        with pytest.raises(ContractViolation):
            RegionMask(np.array([[2.0]]))

    def test_provenance_monotone(self):
        with pytest.raises(ContractViolation):
            PointCloud(np.zeros((2, 3)), np.zeros((2, 3)), np.array([3, 1]))


class TestUnproject:
    def test_identity_camera_pixel00(self):
        intr = CameraIntrinsics(fx=1, fy=1, cx=0, cy=0, width=2, height=2)
        img = ImagePlane(np.zeros((2, 2, 3)))
        depth = DepthMap(np.ones((2, 2)), np.eye(2, dtype=bool)[::-1] * 0 + np.array([[True, False], [False, False]]))
        cloud = unproject(img, depth, intr)
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.positions[0], [0.0, 0.0, 1.0])

    def test_hand_computed_pinhole(self):
        # pixel (u=2, v=1), depth 2, fx=fy=2, cx=cy=1 -> ((2-1)/2*2, (1-1)/2*2, 2)
        intr = CameraIntrinsics(fx=2, fy=2, cx=1, cy=1, width=4, height=3)
        img = ImagePlane(np.zeros((3, 4, 3)))
        validity = np.zeros((3, 4), dtype=bool)
        validity[1, 2] = True
        depth = DepthMap(np.full((3, 4), 2.0), validity)
        cloud = unproject(img, depth, intr)
        np.testing.assert_allclose(cloud.positions[0], [1.0, 0.0, 2.0])

    def test_all_invalid_gives_empty_cloud(self, small_intr, rng):
        img = make_image(12, 16, rng)
        depth = DepthMap(np.ones((12, 16)), np.zeros((12, 16), dtype=bool))
        assert len(unproject(img, depth, small_intr)) == 0

    def test_resolution_mismatch(self, small_intr, rng):
        img = make_image(12, 16, rng)
        with pytest.raises(ContractViolation):
            unproject(img, DepthMap(np.ones((4, 4))), small_intr)


class TestRender:
    def test_single_point_disc(self):
        intr = CameraIntrinsics(fx=10, fy=10, cx=8, cy=6, width=16, height=12)
        cloud = PointCloud(np.array([[0.0, 0.0, 1.0]]), np.array([[1.0, 0.0, 0.0]]))
        radius = 2.5
        _, depth, mask = render_pointcloud(cloud, intr, CameraPose(), radius)
        uu, vv = np.meshgrid(np.arange(16), np.arange(12))
        expected = (uu - 8.0) ** 2 + (vv - 6.0) ** 2 <= radius**2
        np.testing.assert_array_equal(mask.support, expected)
        assert np.all(depth.values[expected] == 1.0)
        np.testing.assert_array_equal(depth.validity, mask.support)

    def test_round_trip_exact(self, small_intr, rng):
        img = make_image(12, 16, rng)
        depth = DepthMap(rng.uniform(0.5, 4.0, (12, 16)))
        cloud = unproject(img, depth, small_intr)
        img2, depth2, mask2 = render_pointcloud(cloud, small_intr, CameraPose(), 0.0)
        assert np.array_equal(img2.rgb, img.rgb)
        assert np.array_equal(depth2.values, depth.values)
        assert mask2.support.all()

    def test_point_behind_camera_culled(self, small_intr):
        cloud = PointCloud(np.array([[0.0, 0.0, -1.0]]), np.array([[1.0, 1.0, 1.0]]))
        _, _, mask = render_pointcloud(cloud, small_intr, CameraPose(), 1.0)
        assert not mask.support.any()

    def test_empty_cloud(self, small_intr):
        _, _, mask = render_pointcloud(PointCloud.empty(), small_intr, CameraPose())
        assert not mask.support.any()

    def test_depth_tie_lower_index_wins(self):
        intr = CameraIntrinsics(fx=10, fy=10, cx=2, cy=2, width=5, height=5)
        pts = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 2.0]])
        colors = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        img, _, _ = render_pointcloud(PointCloud(pts, colors), intr, CameraPose(), 0.0)
        np.testing.assert_array_equal(img.rgb[2, 2], [1.0, 0.0, 0.0])

    def test_projection_scale_invariance(self, small_intr, rng):
        pts = np.column_stack([rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50),
                               rng.uniform(1, 5, 50)])
        pose = CameraPose(tuple(quat_from_axis_angle((0, 1, 0), 0.3)), (0.2, -0.1, 0.4))
        u1, v1, _ = project_points(pts, small_intr, pose)
        s = 3.7
        scaled = CameraPose(pose.rotation, tuple(s * pose.tvec))
        u2, v2, _ = project_points(s * pts, small_intr, scaled)
        np.testing.assert_allclose(u1, u2, atol=1e-9)
        np.testing.assert_allclose(v1, v2, atol=1e-9)

    def test_known_mask_monotone_in_points(self, small_intr, rng):
        pts = np.column_stack([rng.uniform(-0.5, 0.5, 30), rng.uniform(-0.5, 0.5, 30),
                               rng.uniform(1, 3, 30)])
        colors = rng.random((30, 3))
        small = PointCloud(pts[:10], colors[:10])
        big = PointCloud(pts, colors)
        _, _, m_small = render_pointcloud(small, small_intr, CameraPose())
        _, _, m_big = render_pointcloud(big, small_intr, CameraPose())
        assert np.all(m_big.support >= m_small.support)
