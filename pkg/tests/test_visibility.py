import numpy as np
import pytest

from sceneforge.geometry import CameraIntrinsics, CameraPose, DepthMap, PointCloud
from sceneforge.trajectory import Trajectory, interpolate_poses
from sceneforge.visibility import (
    ScenePartAssignment,
    ViewStats,
    assign_owners,
    build_masks,
    owner_id_map,
    soft_masks_for_frame,
    trajectory_depths,
    view_stats,
)


def two_pose_traj(dx=0.0):
    return interpolate_poses(CameraPose((1, 0, 0, 0), (dx, 0, 0)),
                             CameraPose((1, 0, 0, 0), (dx, 0, 0)), 2)


class TestViewStats:
    def test_on_axis_point(self, small_intr):
        cloud = PointCloud(np.array([[0.0, 0.0, 2.0]]), np.ones((1, 3)) * 0.5)
        traj = two_pose_traj()
        depths = trajectory_depths(cloud, traj, small_intr)
        stats = view_stats(cloud, traj, small_intr, depths)
        assert stats.seen[0]
        assert stats.mean_ray_length[0] == pytest.approx(2.0)
        assert stats.mean_angle_score[0] == pytest.approx(1.0)

    def test_off_axis_angle_score(self):
        intr = CameraIntrinsics(fx=8, fy=8, cx=16, cy=8, width=32, height=16)
        # point at 45 degrees off the optical axis
        cloud = PointCloud(np.array([[2.0, 0.0, 2.0]]), np.ones((1, 3)) * 0.5)
        traj = two_pose_traj()
        depths = trajectory_depths(cloud, traj, intr)
        stats = view_stats(cloud, traj, intr, depths)
        assert stats.mean_angle_score[0] == pytest.approx(np.sqrt(2) / 2)

    def test_occluded_point_unseen(self, small_intr):
        # the second point hides exactly behind the first
        cloud = PointCloud(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 3.0]]),
                           np.ones((2, 3)) * 0.5)
        traj = two_pose_traj()
        depths = trajectory_depths(cloud, traj, small_intr)
        stats = view_stats(cloud, traj, small_intr, depths)
        assert stats.seen[0] and not stats.seen[1]
        assert np.isnan(stats.mean_ray_length[1])


class TestAssignOwners:
    def _stats(self, lengths, angles, seen=None):
        lengths = np.asarray(lengths, dtype=float)
        angles = np.asarray(angles, dtype=float)
        seen = np.ones(len(lengths), dtype=bool) if seen is None else np.asarray(seen)
        return ViewStats(np.where(seen, lengths, np.nan),
                         np.where(seen, angles, np.nan), seen)

    def test_reference_arithmetic(self):
        # video1: len 1, angle 1 -> 2.0; video2: len 2, angle 1 -> 1.5
        assign = assign_owners([self._stats([1.0], [1.0]), self._stats([2.0], [1.0])],
                               beta=1.0)
        assert assign.owner[0] == 0
        np.testing.assert_allclose(assign.scores[0], [2.0, 1.5])

    def test_single_video_owns_all_it_sees(self):
        assign = assign_owners([self._stats([1, 2, 3], [0.5, 0.1, 0.9],
                                            [True, False, True])])
        assert list(assign.owner) == [0, -1, 0]

    def test_tie_breaks_to_lower_index(self):
        s = self._stats([1.0], [0.3])
        assign = assign_owners([s, s, s])
        assert assign.owner[0] == 0

    def test_weights_one_hot(self):
        assign = assign_owners([self._stats([1.0, 9.0], [1.0, 0.0]),
                                self._stats([2.0, 1.0], [1.0, 1.0])])
        np.testing.assert_array_equal(assign.weights.sum(axis=1), [1.0, 1.0])
        assert assign.weights[0, 0] == 1.0 and assign.weights[1, 1] == 1.0


class TestMasks:
    def test_hard_partition(self):
        idmap = -np.ones((10, 12), dtype=np.int64)
        idmap[:, 1:6] = 0
        idmap[:, 6:10] = 1
        weights = soft_masks_for_frame(idmap, 2, 0.0)
        total = weights.sum(axis=0)
        assert np.all(total[idmap >= 0] == 1.0)
        assert np.all(total[idmap < 0] == 0.0)
        assert np.array_equal(weights[0] > 0, idmap == 0)

    def test_band_weights_sum_to_one(self):
        idmap = np.zeros((8, 20), dtype=np.int64)
        idmap[:, 10:] = 1
        weights = soft_masks_for_frame(idmap, 2, 4.0)
        total = weights.sum(axis=0)
        band = np.abs(np.arange(20)[None, :].repeat(8, 0) - 9.5) < 4
        np.testing.assert_allclose(total[band], 1.0)
        # raw fade is linear: one pixel into region 1, the region-0 weight
        # before normalization is 1 - 1/width
        assert weights[0][4, 10] > 0

    def test_uncovered_pixels_zero_everywhere(self):
        idmap = -np.ones((6, 6), dtype=np.int64)
        idmap[2:4, 2:4] = 0
        weights = soft_masks_for_frame(idmap, 1, 3.0)
        assert np.all(weights[0][idmap < 0] == 0.0)

    def test_build_masks_shapes(self, small_intr, rng):
        pts = np.column_stack([rng.uniform(-1, 1, 50), rng.uniform(-0.7, 0.7, 50),
                               rng.uniform(1.5, 2.5, 50)])
        cloud = PointCloud(pts, rng.random((50, 3)))
        trajs = [
            interpolate_poses(CameraPose(), CameraPose((1, 0, 0, 0), (0.2, 0, 0)), 3),
            interpolate_poses(CameraPose((1, 0, 0, 0), (0.2, 0, 0)),
                              CameraPose((1, 0, 0, 0), (-0.2, 0, 0)), 3),
        ]
        stats = [view_stats(cloud, tr, small_intr, trajectory_depths(cloud, tr, small_intr))
                 for tr in trajs]
        assign = assign_owners(stats)
        masks = build_masks(assign, trajs, small_intr, cloud, soft_width_px=2.0)
        assert len(masks) == 2 and len(masks[0]) == 3
        for per_video in masks:
            for m in per_video:
                assert m.weights.shape == (12, 16)

    def test_bruteforce_equivalence_small_instances(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 11))
            k = int(rng.integers(1, 5))
            stats = []
            for _ in range(k):
                seen = rng.random(n) > 0.4
                stats.append(ViewStats(
                    np.where(seen, rng.uniform(0.3, 5.0, n), np.nan),
                    np.where(seen, rng.uniform(-1, 1, n), np.nan), seen))
            beta = float(rng.uniform(0.0, 2.0))
            assign = assign_owners(stats, beta=beta)
            for p in range(n):
                best, score = -1, -np.inf
                for v in range(k):
                    if not stats[v].seen[p]:
                        continue
                    s = 1.0 / stats[v].mean_ray_length[p] + beta * stats[v].mean_angle_score[p]
                    if s > score:
                        best, score = v, s
                assert best == assign.owner[p]


class TestBoundaryDiagnostic:
    def test_identical_motion_has_zero_jump(self, rng):
        from sceneforge.visibility import boundary_motion_discontinuity

        positions = rng.standard_normal((20, 3))
        owner = np.zeros(20, dtype=np.int64)
        owner[10:] = 1
        assign = ScenePartAssignment(owner=owner, scores=np.zeros((20, 2)),
                                     weights=np.zeros((20, 2)))
        shared = rng.standard_normal((20, 3)) * 0.1
        value = boundary_motion_discontinuity(assign, positions,
                                              lambda t, k: shared, 0.5)
        assert value == 0.0

    def test_differing_motion_is_surfaced(self, rng):
        from sceneforge.visibility import boundary_motion_discontinuity

        positions = rng.standard_normal((20, 3))
        owner = np.zeros(20, dtype=np.int64)
        owner[10:] = 1
        assign = ScenePartAssignment(owner=owner, scores=np.zeros((20, 2)),
                                     weights=np.zeros((20, 2)))

        def deform(t, k):
            return np.full((20, 3), float(k))

        value = boundary_motion_discontinuity(assign, positions, deform, 0.5)
        assert value == pytest.approx(np.sqrt(3.0))
