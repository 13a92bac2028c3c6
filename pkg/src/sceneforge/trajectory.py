"""Camera trajectories: slerp/lerp pose interpolation and per-video planning."""

from dataclasses import dataclass

import numpy as np

from sceneforge.errors import ContractViolation
from sceneforge.geometry import CameraIntrinsics, CameraPose, project_points

DEFAULT_FRAMES = 25  # temporal resolution T of the video generator


@dataclass
class Trajectory:
    poses: list  # T CameraPose entries
    source_step: int = -1

    def __post_init__(self):
        if len(self.poses) < 2:
            raise ContractViolation("a trajectory needs at least 2 poses")

    def __len__(self):
        return len(self.poses)

    @property
    def start(self):
        return self.poses[0]

    @property
    def end(self):
        return self.poses[-1]

    def to_array(self):
        """(T,7) rows of quaternion wxyz + translation xyz."""
        return np.array([p.rotation + p.translation for p in self.poses])

    @staticmethod
    def from_array(arr, source_step=-1):
        poses = [CameraPose(tuple(r[:4]), tuple(r[4:7])) for r in np.asarray(arr)]
        return Trajectory(poses, source_step)


def slerp(q0, q1, s):
    """Shortest-arc spherical interpolation of unit quaternions."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 0.999999999:
        out = (1.0 - s) * q0 + s * q1
        return out / np.linalg.norm(out)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.sin(theta)
    return (np.sin((1.0 - s) * theta) * q0 + np.sin(s * theta) * q1) / sin_theta


def interpolate_poses(a: CameraPose, b: CameraPose, frames: int = DEFAULT_FRAMES,
                      source_step: int = -1) -> Trajectory:
    """Uniform slerp on rotations, lerp on translations, endpoints exact."""
    if frames < 2:
        raise ContractViolation("trajectory length must be >= 2")
    qa = np.asarray(a.rotation)
    qb = np.asarray(b.rotation)
    ta = a.tvec
    tb = b.tvec
    poses = []
    for j in range(frames):
        s = j / (frames - 1)
        if j == 0:
            poses.append(a)
        elif j == frames - 1:
            poses.append(b)
        else:
            q = slerp(qa, qb, s)
            poses.append(CameraPose(tuple(q), tuple((1.0 - s) * ta + s * tb)))
    return Trajectory(poses, source_step)


def visible_point_set(positions, intr: CameraIntrinsics, pose: CameraPose):
    """Indices of points projecting inside the frame in front of the camera."""
    if len(positions) == 0:
        return frozenset()
    u, v, z = project_points(positions, intr, pose)
    ok = (z > 0) & (u >= -0.5) & (u < intr.width - 0.5) & (v >= -0.5) & (v < intr.height - 0.5)
    return frozenset(np.nonzero(ok)[0].tolist())


def greedy_cover(coverage_sets, k):
    """Pick k sets greedily maximizing union coverage; ties to lower index."""
    chosen = []
    covered = set()
    remaining = list(range(len(coverage_sets)))
    for _ in range(min(k, len(coverage_sets))):
        best, best_gain = None, -1
        for idx in remaining:
            gain = len(coverage_sets[idx] - covered)
            if gain > best_gain:
                best, best_gain = idx, gain
        chosen.append(best)
        covered |= coverage_sets[best]
        remaining.remove(best)
    return sorted(chosen)


def plan_videos(steps, num_videos: int, frames: int = DEFAULT_FRAMES,
                initial_pose: CameraPose = None, cloud=None,
                intr: CameraIntrinsics = None):
    """One trajectory per selected expansion step.

    Each step's trajectory interpolates from the previous step's pose (the
    known view) to the step's own novel pose. When num_videos is smaller
    than the number of steps, steps are picked greedily to maximize the
    union of covered cloud points (requires cloud + intr).
    """
    if num_videos <= 0:
        raise ContractViolation("need at least one video")
    if not steps:
        raise ContractViolation("no expansion steps to plan from")
    initial_pose = initial_pose or CameraPose()
    starts = [initial_pose] + [s.pose for s in steps[:-1]]
    if num_videos >= len(steps):
        selected = list(range(len(steps)))
    else:
        if cloud is None or intr is None:
            raise ContractViolation("greedy selection needs the cloud and intrinsics")
        sets = [visible_point_set(cloud.positions, intr, s.pose) for s in steps]
        selected = greedy_cover(sets, num_videos)
    return [
        interpolate_poses(starts[i], steps[i].pose, frames, source_step=i)
        for i in selected
    ]
