"""Differentiable splat rendering: sorted alpha compositing of projected
anisotropic Gaussians with an analytic backward pass.

The forward projects each splat's covariance through the local affine
(Jacobian) approximation of the perspective map, adds a +0.3 px^2 low-pass
on the diagonal, sorts by camera depth, and composites front to back
(colors and identically weighted expected depth). The backward returns
gradients w.r.t. deformed positions, unit rotations, log scales, opacity
logits, and SH coefficients.
"""

import numpy as np

from sceneforge import kernels
from sceneforge.geometry import CameraIntrinsics, CameraPose
from sceneforge.splats import quat, sh
from sceneforge.splats.model import sigmoid

LOWPASS_PX2 = 0.3
Z_NEAR = 0.01


def render_splats(positions, unit_rotations, log_scales, opacity_logits, sh_coeffs,
                  intr: CameraIntrinsics, pose: CameraPose, want_cache=False):
    """Forward render. Returns (rgb, depth, accum_alpha[, cache]).

    positions/rotations/scales are the *deformed* splat state; rotations
    must already be unit quaternions.
    """
    n = len(positions)
    h, w = intr.height, intr.width
    if n == 0:
        empty = (np.zeros((h, w, 3)), np.zeros((h, w)), np.zeros((h, w)))
        return (*empty, None) if want_cache else empty

    rwc = pose.matrix
    cam_center = pose.world_center()
    xc = positions @ rwc.T + pose.tvec
    z = xc[:, 2]
    valid = z > Z_NEAR

    scales = np.exp(log_scales)
    rot_m = quat.to_matrices(unit_rotations)
    m3 = rot_m * scales[:, None, :]          # R * diag(s)
    sigma3 = m3 @ m3.transpose(0, 2, 1)
    sigma_cam = np.einsum("ij,njk,lk->nil", rwc, sigma3, rwc)

    fx, fy = intr.fx, intr.fy
    zs = np.where(valid, z, 1.0)
    jac = np.zeros((n, 2, 3))
    jac[:, 0, 0] = fx / zs
    jac[:, 0, 2] = -fx * xc[:, 0] / zs**2
    jac[:, 1, 1] = fy / zs
    jac[:, 1, 2] = -fy * xc[:, 1] / zs**2
    sigma2 = np.einsum("nij,njk,nlk->nil", jac, sigma_cam, jac)
    sigma2[:, 0, 0] += LOWPASS_PX2
    sigma2[:, 1, 1] += LOWPASS_PX2

    det = sigma2[:, 0, 0] * sigma2[:, 1, 1] - sigma2[:, 0, 1] ** 2
    inv = np.empty((n, 3))
    inv[:, 0] = sigma2[:, 1, 1] / det
    inv[:, 1] = -sigma2[:, 0, 1] / det
    inv[:, 2] = sigma2[:, 0, 0] / det

    mean2d = np.empty((n, 2))
    mean2d[:, 0] = fx * xc[:, 0] / zs + intr.cx
    mean2d[:, 1] = fy * xc[:, 1] / zs + intr.cy

    # conservative 3-sigma pixel bounds; invalid splats get an empty box
    tr = sigma2[:, 0, 0] + sigma2[:, 1, 1]
    lam_max = 0.5 * (tr + np.sqrt(np.maximum((sigma2[:, 0, 0] - sigma2[:, 1, 1]) ** 2
                                             + 4.0 * sigma2[:, 0, 1] ** 2, 0.0)))
    radius = 3.0 * np.sqrt(np.maximum(lam_max, 0.0)) + 1.0
    bboxes = np.empty((n, 4), dtype=np.int64)
    bboxes[:, 0] = np.clip(np.floor(mean2d[:, 0] - radius), 0, w - 1).astype(np.int64)
    bboxes[:, 1] = np.clip(np.ceil(mean2d[:, 0] + radius), 0, w - 1).astype(np.int64)
    bboxes[:, 2] = np.clip(np.floor(mean2d[:, 1] - radius), 0, h - 1).astype(np.int64)
    bboxes[:, 3] = np.clip(np.ceil(mean2d[:, 1] + radius), 0, h - 1).astype(np.int64)
    bboxes[~valid] = np.array([1, 0, 1, 0])  # empty box culls behind-camera splats

    # zero opacity as the backend-independent cull (the numpy kernel has no
    # bbox test); behind-camera splats then contribute nothing either way
    opac = np.where(valid, sigmoid(opacity_logits), 0.0)

    diff = positions - cam_center
    dist = np.linalg.norm(diff, axis=1, keepdims=True)
    dirs = diff / np.maximum(dist, 1e-12)
    colors = sh.eval_colors(sh_coeffs, dirs)

    order = np.argsort(z, kind="stable")
    rgb, depth, accum = kernels.splat_forward(
        order, mean2d, inv, opac, colors, z, bboxes, h, w
    )
    if not want_cache:
        return rgb, depth, accum
    cache = dict(
        order=order, mean2d=mean2d, inv=inv, opac=opac, colors=colors, z=z,
        bboxes=bboxes, xc=xc, zs=zs, valid=valid, jac=jac, sigma_cam=sigma_cam,
        sigma2=sigma2, m3=m3, rot_m=rot_m, scales=scales, dirs=dirs, dist=dist,
        rwc=rwc, intr=intr, sh_coeffs=sh_coeffs, unit_rotations=unit_rotations,
        opacity_logits=opacity_logits,
    )
    return rgb, depth, accum, cache


def render_backward(cache, d_rgb, d_depth):
    """Backward through render_splats.

    Returns dict with keys positions, unit_rotations, log_scales,
    opacity_logits, sh.
    """
    intr = cache["intr"]
    h, w = intr.height, intr.width
    fx, fy = intr.fx, intr.fy
    g_mean2d, g_inv, g_opac, g_color, g_z = kernels.splat_backward(
        cache["order"], cache["mean2d"], cache["inv"], cache["opac"],
        cache["colors"], cache["z"], cache["bboxes"],
        np.ascontiguousarray(d_rgb, dtype=np.float64),
        np.ascontiguousarray(d_depth, dtype=np.float64),
    )
    n = len(g_opac)
    valid = cache["valid"]

    # opacity logit
    opac = cache["opac"]
    g_logit = g_opac * opac * (1.0 - opac)

    # color -> SH and view direction
    dirs = cache["dirs"]
    basis = sh.sh_basis(dirs)
    g_sh = basis[:, :, None] * g_color[:, None, :]
    dbasis = sh.sh_basis_grad(dirs)
    g_dir = np.einsum("nkc,nkd->nd", cache["sh_coeffs"] * g_color[:, None, :], dbasis)
    dist = cache["dist"]
    dot = np.sum(g_dir * dirs, axis=1, keepdims=True)
    g_pos = (g_dir - dirs * dot) / np.maximum(dist, 1e-12)

    # inverse covariance (packed a,b,c) -> Sigma2D
    a = cache["inv"][:, 0]
    b = cache["inv"][:, 1]
    c = cache["inv"][:, 2]
    g_a_full = np.empty((n, 2, 2))
    g_a_full[:, 0, 0] = g_inv[:, 0]
    g_a_full[:, 0, 1] = g_inv[:, 1] / 2.0
    g_a_full[:, 1, 0] = g_inv[:, 1] / 2.0
    g_a_full[:, 1, 1] = g_inv[:, 2]
    amat = np.empty((n, 2, 2))
    amat[:, 0, 0] = a
    amat[:, 0, 1] = b
    amat[:, 1, 0] = b
    amat[:, 1, 1] = c
    g_sigma2 = -np.einsum("nij,njk,nkl->nil", amat, g_a_full, amat)

    # Sigma2D = J Sigma_cam J^T + lowpass
    jac = cache["jac"]
    sigma_cam = cache["sigma_cam"]
    g_sigma_cam = np.einsum("nji,njk,nkl->nil", jac, g_sigma2, jac)
    g_jac = 2.0 * np.einsum("nij,njk,nkl->nil", g_sigma2, jac, sigma_cam)

    # Sigma_cam = Rwc Sigma3 Rwc^T
    rwc = cache["rwc"]
    g_sigma3 = np.einsum("ji,njk,kl->nil", rwc, g_sigma_cam, rwc)

    # Sigma3 = M M^T with M = R diag(s)
    m3 = cache["m3"]
    g_m3 = 2.0 * np.einsum("nij,njk->nik", g_sigma3, m3)
    rot_m = cache["rot_m"]
    scales = cache["scales"]
    g_rot_m = g_m3 * scales[:, None, :]
    g_scales = np.einsum("nij,nij->nj", rot_m, g_m3)
    g_log_scales = g_scales * scales
    g_unit_rot = quat.to_matrices_backward(g_rot_m, cache["unit_rotations"])

    # projection terms: mean2d, Jacobian entries, and the depth channel
    xc = cache["xc"]
    zs = cache["zs"]
    g_xc = np.zeros((n, 3))
    g_xc[:, 0] += g_mean2d[:, 0] * fx / zs
    g_xc[:, 1] += g_mean2d[:, 1] * fy / zs
    g_xc[:, 2] += -g_mean2d[:, 0] * fx * xc[:, 0] / zs**2
    g_xc[:, 2] += -g_mean2d[:, 1] * fy * xc[:, 1] / zs**2
    g_xc[:, 0] += g_jac[:, 0, 2] * (-fx / zs**2)
    g_xc[:, 1] += g_jac[:, 1, 2] * (-fy / zs**2)
    g_xc[:, 2] += (
        g_jac[:, 0, 0] * (-fx / zs**2)
        + g_jac[:, 1, 1] * (-fy / zs**2)
        + g_jac[:, 0, 2] * (2.0 * fx * xc[:, 0] / zs**3)
        + g_jac[:, 1, 2] * (2.0 * fy * xc[:, 1] / zs**3)
    )
    g_xc[:, 2] += g_z
    g_xc[~valid] = 0.0
    g_pos += g_xc @ rwc

    return dict(
        positions=g_pos,
        unit_rotations=g_unit_rot,
        log_scales=g_log_scales,
        opacity_logits=g_logit,
        sh=g_sh,
    )
