"""Stage 1: iterative view extrapolation.

Per planned pose: render the cloud, inpaint the unseen region, blend the
seam, re-estimate depth, align it to the known geometry in disparity space,
and merge the newly unprojected points.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import cg

from sceneforge.errors import AlignmentUnderdetermined, ContractViolation, PluginFailure
from sceneforge.geometry import (
    CameraIntrinsics,
    CameraPose,
    DepthMap,
    ImagePlane,
    PointCloud,
    RegionMask,
    quat_from_axis_angle,
    quat_to_matrix,
    render_pointcloud,
    unproject,
)
from sceneforge.plugins.base import InpaintRequest, PluginSet, ViewContext

POISSON_TOL = 1e-8
POISSON_MAXITER = 10_000
MIN_ALIGN_SUPPORT = 16


@dataclass
class ExpansionStep:
    """Record of one expansion iteration (reused as a Stage-2 path)."""

    index: int
    pose: CameraPose
    known_mask: RegionMask
    blended_image: ImagePlane
    aligned_depth: DepthMap
    new_points: tuple  # [start, stop) range into the cloud


# ---------------------------------------------------------------- poisson


def poisson_blend(inpainted: ImagePlane, known: ImagePlane, known_mask: RegionMask) -> ImagePlane:
    """Seamless blend: keep `known` where the mask is 1; inside the fill
    region solve the 4-neighbor Poisson equation with the inpainted image's
    gradients as guidance and known pixels as Dirichlet boundary. Fill
    pixels on the image border get Neumann (fewer-neighbor) treatment.
    """
    if inpainted.shape != known.shape or known.shape != known_mask.weights.shape:
        raise ContractViolation("poisson_blend inputs must share a resolution")
    if not known_mask.binary():
        raise ContractViolation("poisson_blend expects a binary known mask")
    h, w = known.shape
    fill = known_mask.weights < 0.5
    if not fill.any():
        return ImagePlane(known.rgb.copy())

    index = -np.ones((h, w), dtype=np.int64)
    fy, fx = np.nonzero(fill)
    n = len(fy)
    index[fy, fx] = np.arange(n)

    rows, cols, vals = [], [], []
    degree = np.zeros(n)
    rhs_known = np.zeros((n, 3))
    guidance = np.zeros((n, 3))
    src = inpainted.rgb
    dst = known.rgb
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ny, nx = fy + dy, fx + dx
        in_img = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        degree += in_img
        yi, xi = ny[in_img], nx[in_img]
        at = np.nonzero(in_img)[0]
        guidance[at] -= src[yi, xi]
        nbr_fill = fill[yi, xi]
        rows.extend(at[nbr_fill])
        cols.extend(index[yi[nbr_fill], xi[nbr_fill]])
        vals.extend([-1.0] * int(nbr_fill.sum()))
        rhs_known[at[~nbr_fill]] += dst[yi[~nbr_fill], xi[~nbr_fill]]
    guidance += degree[:, None] * src[fy, fx]

    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(degree)
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))

    out = known.rgb.copy()
    b = guidance + rhs_known
    x0 = src[fy, fx]
    for ch in range(3):
        sol, info = cg(mat, b[:, ch], x0=x0[:, ch], rtol=POISSON_TOL,
                       maxiter=POISSON_MAXITER)
        if info != 0:
            raise ContractViolation(f"poisson solver did not converge (info={info})")
        out[fy, fx, ch] = sol
    # channels clip to [0,1]; the Poisson property holds wherever the
    # unclipped solution is already in range
    return ImagePlane(np.clip(out, 0.0, 1.0))


# ------------------------------------------------------------- alignment


def disparity_objective(new_depth: DepthMap, known_depth: DepthMap, mask: RegionMask) -> float:
    """Masked sum of squared symmetric disparity residuals."""
    support = mask.support & new_depth.validity & known_depth.validity
    dn = 1.0 / new_depth.values[support]
    dk = 1.0 / known_depth.values[support]
    r = (dn - dk) / (dn + dk)
    return float(np.sum(mask.weights[support] * r * r))


def fit_disparity_correction(new_depth: DepthMap, known_depth: DepthMap,
                             mask: RegionMask, max_iter=100):
    """Global affine disparity correction d -> a*d + b by damped Gauss-Newton.

    Minimizes the masked squared symmetric disparity residual between the
    corrected new depth and the known depth. Returns (a, b, objective).
    """
    support = mask.support & new_depth.validity & known_depth.validity
    if int(support.sum()) < MIN_ALIGN_SUPPORT:
        raise AlignmentUnderdetermined(
            f"only {int(support.sum())} known pixels, need {MIN_ALIGN_SUPPORT}"
        )
    d = 1.0 / new_depth.values[support]
    k = 1.0 / known_depth.values[support]
    wt = mask.weights[support]
    a, b = 1.0, 0.0
    damping = 1e-6

    def residual(a_, b_):
        x = a_ * d + b_
        return (x - k) / (x + k)

    obj = float(np.sum(wt * residual(a, b) ** 2))
    for _ in range(max_iter):
        x = a * d + b
        r = (x - k) / (x + k)
        drdx = 2.0 * k / (x + k) ** 2
        ja = drdx * d
        jb = drdx
        g = np.array([np.sum(wt * ja * r), np.sum(wt * jb * r)])
        hess = np.array([
            [np.sum(wt * ja * ja), np.sum(wt * ja * jb)],
            [np.sum(wt * ja * jb), np.sum(wt * jb * jb)],
        ])
        step = np.linalg.solve(hess + damping * np.eye(2), -g)
        new_a, new_b = a + step[0], b + step[1]
        if np.min(new_a * d + new_b) <= 0:
            damping *= 10.0
            continue
        new_obj = float(np.sum(wt * residual(new_a, new_b) ** 2))
        if new_obj <= obj:
            a, b, obj = new_a, new_b, new_obj
            damping = max(damping * 0.3, 1e-12)
            if np.abs(step).max() < 1e-14:
                break
        else:
            damping *= 10.0
            if damping > 1e8:
                break
    return a, b, obj


def apply_disparity_correction(depth: DepthMap, a: float, b: float) -> DepthMap:
    disparity = a / depth.values + b
    validity = depth.validity & (disparity > 0)
    safe = np.where(validity, disparity, 1.0)
    return DepthMap(np.where(validity, 1.0 / safe, 1.0), validity)


def align_depth(new_depth: DepthMap, known_depth: DepthMap, mask: RegionMask) -> DepthMap:
    """Fit the affine disparity correction on the known region and apply it
    to the whole map."""
    a, b, _ = fit_disparity_correction(new_depth, known_depth, mask)
    return apply_disparity_correction(new_depth, a, b)


# ----------------------------------------------------------------- merge


def merge(cloud: PointCloud, image: ImagePlane, depth: DepthMap, fill_mask: RegionMask,
          intr: CameraIntrinsics, pose: CameraPose, provenance_id: int = None) -> PointCloud:
    """Unproject only fill-region pixels and append; existing points untouched."""
    if provenance_id is None:
        provenance_id = int(cloud.provenance[-1]) + 1 if len(cloud) else 0
    validity = depth.validity & fill_mask.support
    picked = DepthMap(depth.values, validity)
    new_points = unproject(image, picked, intr, pose, provenance_id)
    if len(new_points) == 0:
        return cloud
    return cloud.appended(new_points.positions, new_points.colors, provenance_id)


# ------------------------------------------------------------- expansion


def expand_scene(init: PointCloud, trajectory_plan, plugins: PluginSet,
                 intr: CameraIntrinsics, prompt: str = "", seed: int = 0,
                 splat_radius_px: float = 1.0):
    """Run the render -> inpaint -> blend -> estimate -> align -> merge loop
    over the planned poses. Returns (expanded cloud, expansion steps)."""
    cloud = init
    steps = []
    for i, pose in enumerate(trajectory_plan, start=1):
        image_r, depth_r, mask = render_pointcloud(cloud, intr, pose, splat_radius_px)
        if not mask.support.any():
            raise ContractViolation(
                f"expansion pose {i} sees nothing of the current scene"
            )
        view = ViewContext(intr, pose)
        fill_mask = RegionMask(1.0 - mask.weights)
        try:
            inpainted = plugins.inpainter.fill(
                InpaintRequest(image_r, fill_mask, prompt), seed + i, view
            )
        except PluginFailure:
            raise
        except Exception as exc:
            raise PluginFailure("inpaint", str(exc)) from exc
        blended = poisson_blend(inpainted, image_r, mask)
        try:
            estimated = plugins.depth.estimate(blended, view)
        except PluginFailure:
            raise
        except Exception as exc:
            raise PluginFailure("depth", str(exc)) from exc
        aligned = align_depth(estimated, depth_r, mask)
        start = len(cloud)
        cloud = merge(cloud, blended, aligned, fill_mask, intr, pose, provenance_id=i)
        steps.append(ExpansionStep(
            index=i, pose=pose, known_mask=mask, blended_image=blended,
            aligned_depth=aligned, new_points=(start, len(cloud)),
        ))
    return cloud, steps


# ------------------------------------------------------------ pose plans


def pan_plan(count: int, step=(0.25, 0.0, 0.0)):
    """Identity-rotation camera centers marching along `step` per pose."""
    step = np.asarray(step, dtype=np.float64)
    return [CameraPose((1.0, 0.0, 0.0, 0.0), tuple(-(i * step))) for i in range(1, count + 1)]


def orbit_plan(count: int, angle_step_deg: float = 6.0, center_z: float = 3.0):
    """Cameras orbiting the point (0,0,center_z) about the +y axis, always
    looking at it."""
    poses = []
    for i in range(1, count + 1):
        theta = np.deg2rad(angle_step_deg * i)
        q = quat_from_axis_angle((0.0, 1.0, 0.0), theta)
        center = np.array([center_z * np.sin(theta), 0.0, center_z * (1.0 - np.cos(theta))])
        t = -quat_to_matrix(q) @ center
        poses.append(CameraPose(tuple(q), tuple(t)))
    return poses


def save_pose_plan(poses, path):
    with open(path, "w") as fh:
        json.dump([{"rotation": list(p.rotation), "translation": list(p.translation)}
                   for p in poses], fh, indent=2)


def load_pose_plan(path):
    with open(path) as fh:
        raw = json.load(fh)
    return [CameraPose(tuple(e["rotation"]), tuple(e["translation"])) for e in raw]
