import numpy as np
import pytest

from sceneforge.errors import ContractViolation
from sceneforge.geometry import CameraIntrinsics, CameraPose, PointCloud, quat_from_axis_angle
from sceneforge.trajectory import (
    Trajectory,
    greedy_cover,
    interpolate_poses,
    plan_videos,
    slerp,
    visible_point_set,
)


def test_equal_endpoints_give_constant_trajectory():
    pose = CameraPose(tuple(quat_from_axis_angle((0, 0, 1), 0.4)), (1, 2, 3))
    traj = interpolate_poses(pose, pose, 25)
    assert len(traj) == 25
    for p in traj.poses:
        np.testing.assert_allclose(p.rotation, pose.rotation, atol=1e-12)
        np.testing.assert_allclose(p.translation, pose.translation, atol=1e-12)


def test_pure_translation_lerp():
    a = CameraPose((1, 0, 0, 0), (0, 0, 0))
    b = CameraPose((1, 0, 0, 0), (0, 0, 1))
    traj = interpolate_poses(a, b, 25)
    np.testing.assert_allclose(traj.poses[12].translation, (0, 0, 12 / 24))


def test_slerp_halfway_of_90_degrees():
    a = CameraPose()
    b = CameraPose(tuple(quat_from_axis_angle((0, 1, 0), np.pi / 2)), (0, 0, 0))
    traj = interpolate_poses(a, b, 3)
    expected = quat_from_axis_angle((0, 1, 0), np.pi / 4)
    np.testing.assert_allclose(traj.poses[1].rotation, expected, atol=1e-12)


def test_endpoint_fidelity_exact():
    a = CameraPose(tuple(quat_from_axis_angle((1, 1, 0), 0.3)), (0.1, 0.2, 0.3))
    b = CameraPose(tuple(quat_from_axis_angle((0, 1, 1), -0.7)), (-1, 0, 2))
    traj = interpolate_poses(a, b, 7)
    assert traj.start == a and traj.end == b


def test_constant_angular_velocity():
    a = CameraPose()
    b = CameraPose(tuple(quat_from_axis_angle((0.3, 1, 0.2), 1.1)), (0, 0, 0))
    traj = interpolate_poses(a, b, 25)
    deltas = []
    for p, q in zip(traj.poses[:-1], traj.poses[1:]):
        dot = abs(np.dot(p.rotation, q.rotation))
        deltas.append(2 * np.arccos(np.clip(dot, -1, 1)))
    assert np.ptp(deltas) < 1e-9


def test_shortest_arc():
    q0 = np.array([1.0, 0, 0, 0])
    q1 = -quat_from_axis_angle((0, 1, 0), 0.2)  # antipodal representation
    mid = slerp(q0, q1, 0.5)
    angle = 2 * np.arccos(np.clip(abs(mid @ quat_from_axis_angle((0, 1, 0), 0.1)), -1, 1))
    assert angle < 1e-9


def test_too_short_trajectory_rejected():
    with pytest.raises(ContractViolation):
        interpolate_poses(CameraPose(), CameraPose(), 1)
    with pytest.raises(ContractViolation):
        Trajectory([CameraPose()])


class FakeStep:
    def __init__(self, pose):
        self.pose = pose


def _steps(n):
    return [FakeStep(CameraPose((1, 0, 0, 0), (0.1 * (i + 1), 0, 0))) for i in range(n)]


def test_plan_videos_uses_all_steps():
    steps = _steps(4)
    trajs = plan_videos(steps, 4, frames=5)
    assert len(trajs) == 4
    # first trajectory starts at the initial (identity) pose
    np.testing.assert_allclose(trajs[0].start.translation, (0, 0, 0))
    np.testing.assert_allclose(trajs[0].end.translation, steps[0].pose.translation)
    # later trajectories chain from the previous step pose
    np.testing.assert_allclose(trajs[2].start.translation, steps[1].pose.translation)


def test_plan_videos_zero_is_error():
    with pytest.raises(ContractViolation):
        plan_videos(_steps(3), 0)


def test_greedy_cover_matches_bruteforce():
    sets = [frozenset({1, 2, 3}), frozenset({3, 4}), frozenset({5}), frozenset({1, 5, 6})]
    # greedy: picks {1,2,3} (gain 3), then {1,5,6} (gain 2), then {3,4} (gain 1)
    assert greedy_cover(sets, 3) == [0, 1, 3]
    assert greedy_cover(sets, 1) == [0]


def test_plan_videos_greedy_selection(rng):
    intr = CameraIntrinsics(fx=10, fy=10, cx=8, cy=6, width=16, height=12)
    pts = np.column_stack([rng.uniform(-3, 3, 40), rng.uniform(-2, 2, 40),
                           rng.uniform(2, 4, 40)])
    cloud = PointCloud(pts, rng.random((40, 3)))
    steps = [FakeStep(CameraPose((1, 0, 0, 0), (dx, 0, 0))) for dx in (-2.0, 0.0, 2.0)]
    trajs = plan_videos(steps, 2, frames=5, cloud=cloud, intr=intr)
    assert len(trajs) == 2
    sets = [visible_point_set(cloud.positions, intr, s.pose) for s in steps]
    expected = greedy_cover(sets, 2)
    assert [t.source_step for t in trajs] == expected
