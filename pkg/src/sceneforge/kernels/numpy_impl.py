"""Pure-numpy fallback kernels.

Vectorized over (pixels x splats); matches numba_impl to float64 rounding
(summation order differs, so agreement is ~1e-12, not bitwise).
"""

import numpy as np

CUTOFF_Q = 9.0
ALPHA_CAP = 0.999
T_STOP = 1e-12


def points_zbuffer(u, v, z, colors, h, w, radius):
    """Nearest-point splat render; ties keep the lower point index."""
    n = u.shape[0]
    if radius == 0.0:
        pu = np.floor(u + 0.5).astype(np.int64)[:, None]
        pv = np.floor(v + 0.5).astype(np.int64)[:, None]
        pz = np.broadcast_to(z[:, None], pu.shape)
        idx = np.broadcast_to(np.arange(n)[:, None], pu.shape)
    else:
        c = int(np.ceil(radius))
        offs = np.arange(-c, c + 2)
        base_u = np.floor(u).astype(np.int64)
        base_v = np.floor(v).astype(np.int64)
        pu = (base_u[:, None, None] + offs[None, :, None])
        pv = (base_v[:, None, None] + offs[None, None, :])
        pu, pv = np.broadcast_arrays(pu, pv)
        du = pu - u[:, None, None]
        dv = pv - v[:, None, None]
        inside = du * du + dv * dv <= radius * radius
        pz = np.broadcast_to(z[:, None, None], pu.shape)
        idx = np.broadcast_to(np.arange(n)[:, None, None], pu.shape)
        pu, pv, pz, idx = pu[inside], pv[inside], pz[inside], idx[inside]
    pu, pv = np.asarray(pu).ravel(), np.asarray(pv).ravel()
    pz, idx = np.asarray(pz).ravel(), np.asarray(idx).ravel()
    ok = (pu >= 0) & (pu < w) & (pv >= 0) & (pv < h)
    pu, pv, pz, idx = pu[ok], pv[ok], pz[ok], idx[ok]

    rgb = np.zeros((h, w, 3))
    depth = np.zeros((h, w))
    covered = np.zeros((h, w), dtype=bool)
    if pu.size == 0:
        return rgb, depth, covered
    pix = pv * w + pu
    first = np.lexsort((idx, pz, pix))
    pix_s = pix[first]
    keep = first[np.concatenate([[True], pix_s[1:] != pix_s[:-1]])]
    pvk, puk = pv[keep], pu[keep]
    covered[pvk, puk] = True
    depth[pvk, puk] = pz[keep]
    rgb[pvk, puk] = colors[idx[keep]]
    return rgb, depth, covered


def _per_pixel_terms(order, mean2d, invcov, opacity, h, w):
    """(pixels x splats) alpha/transmittance tables in compositing order."""
    px = np.tile(np.arange(w, dtype=np.float64), h)
    py = np.repeat(np.arange(h, dtype=np.float64), w)
    dx = px[:, None] - mean2d[order, 0][None, :]
    dy = py[:, None] - mean2d[order, 1][None, :]
    a = invcov[order, 0][None, :]
    b = invcov[order, 1][None, :]
    c = invcov[order, 2][None, :]
    q = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy
    hit = q <= CUTOFF_Q
    g = np.where(hit, np.exp(-0.5 * np.where(hit, q, 0.0)), 0.0)
    alpha = np.minimum(opacity[order][None, :] * g, ALPHA_CAP)
    alpha = np.where(hit, alpha, 0.0)
    t_after = np.cumprod(1.0 - alpha, axis=1)
    t_before = np.empty_like(t_after)
    t_before[:, 0] = 1.0
    t_before[:, 1:] = t_after[:, :-1]
    live = t_before >= T_STOP
    weight = np.where(live, alpha * t_before, 0.0)
    return dx, dy, q, g, alpha, t_before, live, weight


def splat_forward(order, mean2d, invcov, opacity, color, depthz, bboxes, h, w):
    """Front-to-back alpha compositing of 2D Gaussians (vectorized)."""
    n = order.shape[0]
    if n == 0:
        return np.zeros((h, w, 3)), np.zeros((h, w)), np.zeros((h, w))
    _, _, _, _, _, _, _, weight = _per_pixel_terms(order, mean2d, invcov, opacity, h, w)
    out_rgb = (weight @ color[order]).reshape(h, w, 3)
    out_depth = (weight @ depthz[order]).reshape(h, w)
    out_alpha = weight.sum(axis=1).reshape(h, w)
    return out_rgb, out_depth, out_alpha


def splat_backward(order, mean2d, invcov, opacity, color, depthz, bboxes,
                   d_rgb, d_depth):
    """Vectorized analogue of numba_impl.splat_backward.

    The per-channel occlusion terms collapse to (pixels x splats) scalars:
    sum_c dl_c * S_c uses the projection (dl . color) per splat, so no
    (P, N, 3) temporaries are needed.
    """
    n = order.shape[0]
    g_mean2d = np.zeros((n, 2))
    g_invcov = np.zeros((n, 3))
    g_opacity = np.zeros(n)
    g_color = np.zeros((n, 3))
    g_depthz = np.zeros(n)
    if n == 0:
        return g_mean2d, g_invcov, g_opacity, g_color, g_depthz
    h, w = d_depth.shape
    dx, dy, q, g, alpha, t_before, live, weight = _per_pixel_terms(
        order, mean2d, invcov, opacity, h, w
    )
    dl_rgb = d_rgb.reshape(-1, 3)
    dl_d = d_depth.reshape(-1)

    col = color[order]
    dz = depthz[order]
    g_color[order] += weight.T @ dl_rgb
    g_depthz[order] += weight.T @ dl_d

    # per-(pixel, splat) projected value: sum_c dl_c * (value behind i)
    proj = dl_rgb @ col.T + dl_d[:, None] * dz[None, :]
    contrib = weight * proj
    s_proj = np.flip(np.cumsum(np.flip(contrib, 1), axis=1), 1) - contrib

    one_m = 1.0 - alpha
    d_alpha = proj * t_before - s_proj / one_m
    d_alpha = np.where(live & (alpha > 0.0), d_alpha, 0.0)

    free = alpha < ALPHA_CAP  # cap zeroes the alpha gradient
    d_alpha = np.where(free, d_alpha, 0.0)
    op = opacity[order][None, :]
    g_opacity[order] += np.sum(d_alpha * g, axis=0)
    d_q = d_alpha * op * g * (-0.5)
    g_invcov[order, 0] += np.sum(d_q * dx * dx, axis=0)
    g_invcov[order, 1] += np.sum(d_q * 2.0 * dx * dy, axis=0)
    g_invcov[order, 2] += np.sum(d_q * dy * dy, axis=0)
    a = invcov[order, 0][None, :]
    b = invcov[order, 1][None, :]
    c = invcov[order, 2][None, :]
    g_mean2d[order, 0] += np.sum(d_q * (-2.0 * (a * dx + b * dy)), axis=0)
    g_mean2d[order, 1] += np.sum(d_q * (-2.0 * (b * dx + c * dy)), axis=0)
    return g_mean2d, g_invcov, g_opacity, g_color, g_depthz
