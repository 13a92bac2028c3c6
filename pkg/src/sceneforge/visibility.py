"""Per-video visibility: ray statistics, owner assignment, soft mask rasters.

Scene parts are individual canonical points. Each point is scored per video
by mean inverse ray length plus beta times the mean view-angle score over
the frames that actually see it (occlusion-tested against rendered depth);
the best video owns the point. Masks rasterize ownership per frame with a
soft linearly decreasing boundary band, renormalized so per-pixel weights
across videos never exceed 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from sceneforge.errors import ContractViolation
from sceneforge.geometry import (
    CameraIntrinsics,
    PointCloud,
    RegionMask,
    project_points,
    render_pointcloud,
)
from sceneforge.kernels import points_zbuffer

OCCLUSION_TOL = 0.01  # epsilon_z as a fraction of ray length
UNSEEN = np.nan


@dataclass
class ViewStats:
    mean_ray_length: np.ndarray  # (N,) nan where unseen
    mean_angle_score: np.ndarray
    seen: np.ndarray             # (N,) bool


@dataclass
class ScenePartAssignment:
    owner: np.ndarray    # (N,) video id, -1 where unseen by every video
    scores: np.ndarray   # (N,K) -inf where unseen
    weights: np.ndarray  # (N,K) one-hot soft weights (owner gets 1)


def trajectory_depths(cloud: PointCloud, traj, intr: CameraIntrinsics, splat_radius_px=1.0):
    """Rendered depth per trajectory frame, for occlusion tests."""
    return [render_pointcloud(cloud, intr, pose, splat_radius_px)[1] for pose in traj.poses]


def view_stats(cloud: PointCloud, traj, intr: CameraIntrinsics, depth_per_frame) -> ViewStats:
    """Average ray length / view-angle score over the frames seeing each point."""
    n = len(cloud)
    sum_len = np.zeros(n)
    sum_ang = np.zeros(n)
    count = np.zeros(n)
    for pose, depth in zip(traj.poses, depth_per_frame):
        u, v, z = project_points(cloud.positions, intr, pose)
        inside = (z > 0) & (u > -0.5) & (u < intr.width - 0.5) \
            & (v > -0.5) & (v < intr.height - 0.5)
        pu = np.clip(np.floor(u + 0.5).astype(np.int64), 0, intr.width - 1)
        pv = np.clip(np.floor(v + 0.5).astype(np.int64), 0, intr.height - 1)
        center = pose.world_center()
        rays = cloud.positions - center
        lengths = np.linalg.norm(rays, axis=1)
        surf = depth.values[pv, pu]
        surf_ok = depth.validity[pv, pu]
        visible = inside & surf_ok & (z <= surf + OCCLUSION_TOL * lengths)
        look = pose.look_direction()
        angle = (rays @ look) / np.maximum(lengths, 1e-12)
        sum_len += np.where(visible, lengths, 0.0)
        sum_ang += np.where(visible, angle, 0.0)
        count += visible
    seen = count > 0
    safe = np.maximum(count, 1)
    return ViewStats(
        mean_ray_length=np.where(seen, sum_len / safe, UNSEEN),
        mean_angle_score=np.where(seen, sum_ang / safe, UNSEEN),
        seen=seen,
    )


def assign_owners(stats_per_video, beta: float = 1.0) -> ScenePartAssignment:
    """argmax_k 1/len_k + beta*angle_k per point; ties go to the lower k."""
    if not stats_per_video:
        raise ContractViolation("no per-video stats given")
    n = len(stats_per_video[0].seen)
    k = len(stats_per_video)
    scores = np.full((n, k), -np.inf)
    for i, st in enumerate(stats_per_video):
        ok = st.seen
        scores[ok, i] = 1.0 / st.mean_ray_length[ok] + beta * st.mean_angle_score[ok]
    any_seen = np.isfinite(scores).any(axis=1)
    owner = np.where(any_seen, np.argmax(scores, axis=1), -1)
    weights = np.zeros((n, k))
    rows = np.nonzero(any_seen)[0]
    weights[rows, owner[rows]] = 1.0
    return ScenePartAssignment(owner=owner, scores=scores, weights=weights)


def owner_id_map(cloud: PointCloud, owner, intr: CameraIntrinsics, pose,
                 splat_radius_px=1.0):
    """Z-buffer raster of per-point owner ids; -1 on uncovered pixels."""
    u, v, z = project_points(cloud.positions, intr, pose)
    front = z > 0
    ids = np.stack([owner.astype(np.float64)] * 3, axis=1)
    rgb, _, covered = points_zbuffer(
        u[front], v[front], z[front], ids[front],
        intr.height, intr.width, float(splat_radius_px),
    )
    idmap = np.rint(rgb[:, :, 0]).astype(np.int64)
    idmap[~covered] = -1
    return idmap


def soft_masks_for_frame(idmap, num_videos: int, soft_width_px: float):
    """Per-video weights for one frame: binary cores, a linear falloff band
    of soft_width_px, zero weight on uncovered pixels, and per-pixel
    renormalization so weights across videos sum to at most 1."""
    covered = idmap >= 0
    weights = np.zeros((num_videos,) + idmap.shape)
    for k in range(num_videos):
        core = idmap == k
        if not core.any():
            continue
        if soft_width_px > 0:
            dist = distance_transform_edt(~core)
            w = np.clip(1.0 - dist / soft_width_px, 0.0, 1.0)
        else:
            w = core.astype(np.float64)
        weights[k] = np.where(covered, w, 0.0)
    total = weights.sum(axis=0)
    scale = np.where(total > 1.0, total, 1.0)
    return weights / scale


def build_masks(assign: ScenePartAssignment, trajs, intr: CameraIntrinsics,
                cloud: PointCloud, soft_width_px: float = 8.0, splat_radius_px=1.0):
    """Per-video per-frame RegionMask weighting the training losses."""
    num_videos = len(trajs)
    masks = []
    for k, traj in enumerate(trajs):
        per_frame = []
        for pose in traj.poses:
            idmap = owner_id_map(cloud, assign.owner, intr, pose, splat_radius_px)
            weights = soft_masks_for_frame(idmap, num_videos, soft_width_px)
            per_frame.append(RegionMask(weights[k]))
        masks.append(per_frame)
    return masks


def boundary_motion_discontinuity(assign: ScenePartAssignment, positions,
                                  deform_fn, t: float, k_neighbors: int = 6):
    """Diagnostic: mean motion jump across ownership boundaries.

    At canonical points sitting on an ownership boundary (a nearest
    neighbor belongs to another video), compares the position delta the two
    videos induce at that same point and time (deform_fn(t, k) returns
    per-point deltas for video k). No threshold is applied; this only
    surfaces how separate the per-region motions are.
    """
    from scipy.spatial import cKDTree

    n = len(positions)
    if n < 2:
        return 0.0
    kk = min(k_neighbors + 1, n)
    _, idx = cKDTree(positions).query(positions, k=kk)
    deltas = {}
    jumps = []
    for i in range(n):
        a = assign.owner[i]
        if a < 0:
            continue
        for j in idx[i, 1:]:
            b = assign.owner[j]
            if b < 0 or b == a:
                continue
            for video in (a, b):
                if video not in deltas:
                    deltas[video] = deform_fn(t, int(video))
            jumps.append(np.linalg.norm(deltas[a][i] - deltas[b][i]))
    return float(np.mean(jumps)) if jumps else 0.0
