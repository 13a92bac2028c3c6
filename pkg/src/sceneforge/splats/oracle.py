"""Brute-force reference renderer for the compositing contract.

Deliberately naive and structured unlike the engine: per-splat full-image
alpha maps, sequential over-compositing, no bounding boxes, no tiling, no
transmittance early-out. Used to verify the engine renderer on randomized
small scenes.
"""

import math

import numpy as np

from sceneforge.splats.render import LOWPASS_PX2, Z_NEAR

_CUTOFF = 9.0
_CAP = 0.999

_SH0 = 0.28209479177387814
_SH1 = 0.4886025119029199
_SH2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
        -1.0925484305920792, 0.5462742152960396)
_SH3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
        0.3731763325901154, -0.4570457994644658, 1.445305721320277,
        -0.5900435899266435)


def _sh_color(coeffs, d):
    x, y, z = d
    basis = [
        _SH0,
        -_SH1 * y, _SH1 * z, -_SH1 * x,
        _SH2[0] * x * y, _SH2[1] * y * z, _SH2[2] * (2 * z * z - x * x - y * y),
        _SH2[3] * x * z, _SH2[4] * (x * x - y * y),
        _SH3[0] * y * (3 * x * x - y * y), _SH3[1] * x * y * z,
        _SH3[2] * y * (4 * z * z - x * x - y * y),
        _SH3[3] * z * (2 * z * z - 3 * x * x - 3 * y * y),
        _SH3[4] * x * (4 * z * z - x * x - y * y),
        _SH3[5] * z * (x * x - y * y), _SH3[6] * x * (x * x - 3 * y * y),
    ]
    return np.array([sum(b * coeffs[m][ch] for m, b in enumerate(basis)) for ch in range(3)])


def oracle_render(positions, rotations_raw, log_scales, opacity_logits, sh_coeffs,
                  intr, pose):
    """Reference (rgb, depth, accum_alpha) images."""
    h, w = intr.height, intr.width
    rgb = np.zeros((h, w, 3))
    depth = np.zeros((h, w))
    accum = np.zeros((h, w))
    trans = np.ones((h, w))
    rwc = pose.matrix
    tvec = pose.tvec
    cam_center = -rwc.T @ tvec

    entries = []
    for i in range(len(positions)):
        q = np.asarray(rotations_raw[i], dtype=np.float64)
        q = q / np.linalg.norm(q)
        ww, xx, yy, zz = q
        rot = np.array([
            [1 - 2 * (yy * yy + zz * zz), 2 * (xx * yy - ww * zz), 2 * (xx * zz + ww * yy)],
            [2 * (xx * yy + ww * zz), 1 - 2 * (xx * xx + zz * zz), 2 * (yy * zz - ww * xx)],
            [2 * (xx * zz - ww * yy), 2 * (yy * zz + ww * xx), 1 - 2 * (xx * xx + yy * yy)],
        ])
        s = np.exp(np.asarray(log_scales[i], dtype=np.float64))
        sigma3 = rot @ np.diag(s * s) @ rot.T
        pc = rwc @ np.asarray(positions[i], dtype=np.float64) + tvec
        if pc[2] <= Z_NEAR:
            continue
        x, y, z = pc
        jac = np.array([
            [intr.fx / z, 0.0, -intr.fx * x / (z * z)],
            [0.0, intr.fy / z, -intr.fy * y / (z * z)],
        ])
        sigma2 = jac @ (rwc @ sigma3 @ rwc.T) @ jac.T
        sigma2[0, 0] += LOWPASS_PX2
        sigma2[1, 1] += LOWPASS_PX2
        mean = np.array([intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy])
        opac = 1.0 / (1.0 + math.exp(-opacity_logits[i]))
        view = positions[i] - cam_center
        view = view / np.linalg.norm(view)
        color = _sh_color(sh_coeffs[i], view)
        entries.append((z, i, mean, np.linalg.inv(sigma2), opac, color))

    entries.sort(key=lambda e: (e[0], e[1]))
    px = np.arange(w, dtype=np.float64)[None, :]
    py = np.arange(h, dtype=np.float64)[:, None]
    for z, _, mean, inv, opac, color in entries:
        dx = px - mean[0]
        dy = py - mean[1]
        qv = inv[0, 0] * dx * dx + 2.0 * inv[0, 1] * dx * dy + inv[1, 1] * dy * dy
        alpha = np.where(qv <= _CUTOFF, np.minimum(opac * np.exp(-0.5 * qv), _CAP), 0.0)
        weight = alpha * trans
        rgb += weight[:, :, None] * color[None, None, :]
        depth += weight * z
        accum += weight
        trans = trans * (1.0 - alpha)
    return rgb, depth, accum
