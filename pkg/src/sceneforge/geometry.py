"""Pinhole camera math, depth unprojection, and z-buffered point rendering.

Conventions:
    - Pixel (row v, col u) has its center at continuous coordinates (u, v).
    - Camera looks down +z in its own frame; depth maps store camera-frame z.
    - CameraPose maps world to camera: x_cam = R(q) @ x_world + t.
    - Quaternions are wxyz, unit norm.
    - The world frame is the first camera's frame (the input view is the
      origin of the scene).
"""

from dataclasses import dataclass, field

import numpy as np

from sceneforge import kernels
from sceneforge.errors import ContractViolation

# ---------------------------------------------------------------------------
# quaternion helpers (wxyz)
# ---------------------------------------------------------------------------


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ContractViolation("zero quaternion")
    return q / n


def quat_mul(a, b):
    """Hamilton product a*b, both wxyz."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q):
    """Rotation matrix of a unit quaternion (wxyz)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle
    return np.concatenate([[np.cos(h)], np.sin(h) * axis])


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ContractViolation("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ContractViolation("principal point outside the image")


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rotation (unit quaternion wxyz) and translation."""

    rotation: tuple = (1.0, 0.0, 0.0, 0.0)
    translation: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if q.shape != (4,) or t.shape != (3,):
            raise ContractViolation("pose needs a 4-quaternion and 3-translation")
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ContractViolation("pose quaternion must be unit norm")
        object.__setattr__(self, "rotation", tuple(float(v) for v in q))
        object.__setattr__(self, "translation", tuple(float(v) for v in t))

    @property
    def matrix(self):
        """3x3 world-to-camera rotation matrix."""
        return quat_to_matrix(np.asarray(self.rotation))

    @property
    def tvec(self):
        return np.asarray(self.translation, dtype=np.float64)

    def world_center(self):
        """Camera center in world coordinates, -R^T t."""
        return -self.matrix.T @ self.tvec

    def look_direction(self):
        """Unit optical-axis direction in world coordinates."""
        return self.matrix.T @ np.array([0.0, 0.0, 1.0])

    def to_camera(self, points):
        """Transform (N,3) world points to the camera frame."""
        return points @ self.matrix.T + self.tvec


IDENTITY_POSE = CameraPose()


@dataclass
class ImagePlane:
    """H x W x 3 image with channels in [0, 1]."""

    rgb: np.ndarray

    def __post_init__(self):
        self.rgb = np.asarray(self.rgb, dtype=np.float64)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise ContractViolation("image must be HxWx3")
        if self.rgb.min() < 0.0 or self.rgb.max() > 1.0:
            raise ContractViolation("image channels must lie in [0,1]")

    @property
    def shape(self):
        return self.rgb.shape[:2]


@dataclass
class DepthMap:
    """H x W positive depths plus a validity grid."""

    values: np.ndarray
    validity: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.validity is None:
            self.validity = np.ones(self.values.shape, dtype=bool)
        self.validity = np.asarray(self.validity, dtype=bool)
        if self.values.ndim != 2 or self.validity.shape != self.values.shape:
            raise ContractViolation("depth and validity must share an HxW shape")
        valid = self.values[self.validity]
        if valid.size and (not np.all(np.isfinite(valid)) or valid.min() <= 0):
            raise ContractViolation("valid depths must be positive and finite")

    @property
    def shape(self):
        return self.values.shape


@dataclass
class RegionMask:
    """H x W weights in [0, 1]; 1 marks the known / selected region."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ContractViolation("mask must be HxW")
        if self.weights.min() < 0.0 or self.weights.max() > 1.0:
            raise ContractViolation("mask weights must lie in [0,1]")

    @property
    def support(self):
        return self.weights > 0.0

    def binary(self):
        return np.isin(self.weights, (0.0, 1.0)).all()


@dataclass
class PointCloud:
    """Colored world-frame points with per-point creation provenance."""

    positions: np.ndarray
    colors: np.ndarray
    provenance: np.ndarray = field(default=None)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if self.provenance is None:
            self.provenance = np.zeros(len(self.positions), dtype=np.int64)
        self.provenance = np.asarray(self.provenance, dtype=np.int64).reshape(-1)
        if not (len(self.positions) == len(self.colors) == len(self.provenance)):
            raise ContractViolation("positions/colors/provenance length mismatch")
        if self.positions.size and not np.all(np.isfinite(self.positions)):
            raise ContractViolation("point positions must be finite")
        if self.colors.size and (self.colors.min() < 0 or self.colors.max() > 1):
            raise ContractViolation("point colors must lie in [0,1]")
        if self.provenance.size and np.any(np.diff(self.provenance) < 0):
            raise ContractViolation("provenance ids must be monotone")

    def __len__(self):
        return len(self.positions)

    @staticmethod
    def empty():
        return PointCloud(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0, dtype=np.int64))

    def appended(self, positions, colors, provenance_id):
        """New cloud with extra points tagged provenance_id (monotonicity enforced)."""
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
        if len(self.provenance) and provenance_id < self.provenance[-1]:
            raise ContractViolation("provenance ids must not decrease")
        prov = np.full(len(positions), provenance_id, dtype=np.int64)
        return PointCloud(
            np.vstack([self.positions, positions]),
            np.vstack([self.colors, colors]),
            np.concatenate([self.provenance, prov]),
        )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def unproject(image: ImagePlane, depth: DepthMap, intr: CameraIntrinsics,
              pose: CameraPose = IDENTITY_POSE, provenance_id: int = 0) -> PointCloud:
    """Lift every valid pixel to a world-frame point; colors copied from pixels.

    Ray direction for pixel (u, v) is ((u-cx)/fx, (v-cy)/fy, 1), scaled by the
    depth value, then moved from the camera frame to the world frame.
    """
    if image.shape != depth.shape:
        raise ContractViolation(
            f"image {image.shape} and depth {depth.shape} resolutions differ"
        )
    h, w = depth.shape
    vv, uu = np.nonzero(depth.validity)
    if uu.size == 0:
        return PointCloud.empty()
    z = depth.values[vv, uu]
    x = (uu - intr.cx) / intr.fx * z
    y = (vv - intr.cy) / intr.fy * z
    cam = np.stack([x, y, z], axis=1)
    world = (cam - pose.tvec) @ pose.matrix  # R^T (x - t), R orthonormal
    colors = image.rgb[vv, uu]
    prov = np.full(len(world), provenance_id, dtype=np.int64)
    return PointCloud(world, colors, prov)


def project_points(positions, intr: CameraIntrinsics, pose: CameraPose):
    """Project (N,3) world points; returns (u, v, z_cam) without any culling."""
    cam = pose.to_camera(positions)
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.fx * cam[:, 0] / z + intr.cx
        v = intr.fy * cam[:, 1] / z + intr.cy
    return u, v, z


def render_pointcloud(cloud: PointCloud, intr: CameraIntrinsics, pose: CameraPose,
                      splat_radius_px: float = 1.0):
    """Z-buffer nearest-point render.

    Returns (ImagePlane, DepthMap, RegionMask): pixels covered by any splat
    disc carry the nearest point's color and camera-z; the mask is 1 exactly
    on that support. Depth ties keep the lower point index. Points behind the
    camera are culled.
    """
    if splat_radius_px < 0:
        raise ContractViolation("splat radius must be >= 0")
    h, w = intr.height, intr.width
    if len(cloud) == 0:
        return _empty_render(h, w)
    u, v, z = project_points(cloud.positions, intr, pose)
    front = z > 0
    if not front.any():
        return _empty_render(h, w)
    u, v, z = u[front], v[front], z[front]
    colors = cloud.colors[front]
    rgb, depth, covered = kernels.points_zbuffer(
        u, v, z, colors, h, w, float(splat_radius_px)
    )
    image = ImagePlane(np.clip(rgb, 0.0, 1.0))
    depth_map = DepthMap(np.where(covered, depth, 1.0), covered)
    mask = RegionMask(covered.astype(np.float64))
    return image, depth_map, mask


def _empty_render(h, w):
    return (
        ImagePlane(np.zeros((h, w, 3))),
        DepthMap(np.ones((h, w)), np.zeros((h, w), dtype=bool)),
        RegionMask(np.zeros((h, w))),
    )
