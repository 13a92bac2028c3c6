"""Numba implementations of the hot kernels.

Sequential loops: determinism comes for free and the per-pixel compositing
order is exactly the sorted splat order. Keep these signatures in sync with
numpy_impl; the two must agree to float64 exactness.
"""

import math

import numpy as np
from numba import njit

# q = d^T Sigma2D^{-1} d is truncated at 3 sigma
CUTOFF_Q = 9.0
ALPHA_CAP = 0.999
T_STOP = 1e-12


@njit(cache=True)
def points_zbuffer(u, v, z, colors, h, w, radius):
    """Nearest-point splat render; ties keep the lower point index."""
    rgb = np.zeros((h, w, 3))
    depth = np.zeros((h, w))
    zbuf = np.full((h, w), np.inf)
    covered = np.zeros((h, w), dtype=np.bool_)
    n = u.shape[0]
    for i in range(n):
        ui = u[i]
        vi = v[i]
        zi = z[i]
        if radius == 0.0:
            pu = int(math.floor(ui + 0.5))
            pv = int(math.floor(vi + 0.5))
            if 0 <= pu < w and 0 <= pv < h and zi < zbuf[pv, pu]:
                zbuf[pv, pu] = zi
                depth[pv, pu] = zi
                covered[pv, pu] = True
                for c in range(3):
                    rgb[pv, pu, c] = colors[i, c]
        else:
            u0 = max(0, int(math.ceil(ui - radius)))
            u1 = min(w - 1, int(math.floor(ui + radius)))
            v0 = max(0, int(math.ceil(vi - radius)))
            v1 = min(h - 1, int(math.floor(vi + radius)))
            r2 = radius * radius
            for pv in range(v0, v1 + 1):
                for pu in range(u0, u1 + 1):
                    du = pu - ui
                    dv = pv - vi
                    if du * du + dv * dv <= r2 and zi < zbuf[pv, pu]:
                        zbuf[pv, pu] = zi
                        depth[pv, pu] = zi
                        covered[pv, pu] = True
                        for c in range(3):
                            rgb[pv, pu, c] = colors[i, c]
    return rgb, depth, covered


@njit(cache=True)
def splat_forward(order, mean2d, invcov, opacity, color, depthz, bboxes, h, w):
    """Front-to-back alpha compositing of 2D Gaussians.

    invcov rows pack the symmetric inverse 2D covariance as (a, b, c) for
    [[a, b], [b, c]]. Returns (rgb, expected depth, accumulated weight).
    """
    out_rgb = np.zeros((h, w, 3))
    out_depth = np.zeros((h, w))
    out_alpha = np.zeros((h, w))
    n = order.shape[0]
    for pv in range(h):
        for pu in range(w):
            trans = 1.0
            for k in range(n):
                i = order[k]
                if pu < bboxes[i, 0] or pu > bboxes[i, 1]:
                    continue
                if pv < bboxes[i, 2] or pv > bboxes[i, 3]:
                    continue
                dx = pu - mean2d[i, 0]
                dy = pv - mean2d[i, 1]
                q = invcov[i, 0] * dx * dx + 2.0 * invcov[i, 1] * dx * dy + invcov[i, 2] * dy * dy
                if q > CUTOFF_Q:
                    continue
                alpha = opacity[i] * math.exp(-0.5 * q)
                if alpha > ALPHA_CAP:
                    alpha = ALPHA_CAP
                weight = alpha * trans
                for c in range(3):
                    out_rgb[pv, pu, c] += color[i, c] * weight
                out_depth[pv, pu] += depthz[i] * weight
                out_alpha[pv, pu] += weight
                trans *= 1.0 - alpha
                if trans < T_STOP:
                    break
    return out_rgb, out_depth, out_alpha


@njit(cache=True)
def splat_backward(order, mean2d, invcov, opacity, color, depthz, bboxes,
                   d_rgb, d_depth):
    """Gradients of the composite w.r.t. per-splat quantities.

    Returns (g_mean2d, g_invcov packed (a,b,c), g_opacity, g_color, g_depthz).
    Recomputes the per-pixel contributor list, then walks it back-to-front
    with suffix sums for the d/d_alpha occlusion terms.
    """
    n = order.shape[0]
    h, w = d_depth.shape
    g_mean2d = np.zeros((n, 2))
    g_invcov = np.zeros((n, 3))
    g_opacity = np.zeros(n)
    g_color = np.zeros((n, 3))
    g_depthz = np.zeros(n)

    idx_buf = np.empty(n, dtype=np.int64)
    alpha_buf = np.empty(n)
    g_buf = np.empty(n)
    trans_buf = np.empty(n)
    dx_buf = np.empty(n)
    dy_buf = np.empty(n)

    for pv in range(h):
        for pu in range(w):
            dl_r = d_rgb[pv, pu, 0]
            dl_g = d_rgb[pv, pu, 1]
            dl_b = d_rgb[pv, pu, 2]
            dl_d = d_depth[pv, pu]
            if dl_r == 0.0 and dl_g == 0.0 and dl_b == 0.0 and dl_d == 0.0:
                continue
            # pass 1: collect contributors front to back
            m = 0
            trans = 1.0
            for k in range(n):
                i = order[k]
                if pu < bboxes[i, 0] or pu > bboxes[i, 1]:
                    continue
                if pv < bboxes[i, 2] or pv > bboxes[i, 3]:
                    continue
                dx = pu - mean2d[i, 0]
                dy = pv - mean2d[i, 1]
                q = invcov[i, 0] * dx * dx + 2.0 * invcov[i, 1] * dx * dy + invcov[i, 2] * dy * dy
                if q > CUTOFF_Q:
                    continue
                gval = math.exp(-0.5 * q)
                alpha = opacity[i] * gval
                if alpha > ALPHA_CAP:
                    alpha = ALPHA_CAP
                idx_buf[m] = i
                alpha_buf[m] = alpha
                g_buf[m] = gval
                trans_buf[m] = trans
                dx_buf[m] = dx
                dy_buf[m] = dy
                m += 1
                trans *= 1.0 - alpha
                if trans < T_STOP:
                    break
            # pass 2: back to front with suffix composites
            s_r = 0.0
            s_g = 0.0
            s_b = 0.0
            s_d = 0.0
            for k in range(m - 1, -1, -1):
                i = idx_buf[k]
                alpha = alpha_buf[k]
                ti = trans_buf[k]
                weight = alpha * ti
                g_color[i, 0] += dl_r * weight
                g_color[i, 1] += dl_g * weight
                g_color[i, 2] += dl_b * weight
                g_depthz[i] += dl_d * weight
                one_m = 1.0 - alpha
                d_alpha = (
                    dl_r * (color[i, 0] * ti - s_r / one_m)
                    + dl_g * (color[i, 1] * ti - s_g / one_m)
                    + dl_b * (color[i, 2] * ti - s_b / one_m)
                    + dl_d * (depthz[i] * ti - s_d / one_m)
                )
                if alpha < ALPHA_CAP:
                    gval = g_buf[k]
                    g_opacity[i] += d_alpha * gval
                    d_q = d_alpha * opacity[i] * gval * (-0.5)
                    dx = dx_buf[k]
                    dy = dy_buf[k]
                    g_invcov[i, 0] += d_q * dx * dx
                    g_invcov[i, 1] += d_q * 2.0 * dx * dy
                    g_invcov[i, 2] += d_q * dy * dy
                    a = invcov[i, 0]
                    b = invcov[i, 1]
                    cc = invcov[i, 2]
                    g_mean2d[i, 0] += d_q * (-2.0 * (a * dx + b * dy))
                    g_mean2d[i, 1] += d_q * (-2.0 * (b * dx + cc * dy))
                s_r += color[i, 0] * weight
                s_g += color[i, 1] * weight
                s_b += color[i, 2] * weight
                s_d += depthz[i] * weight
    return g_mean2d, g_invcov, g_opacity, g_color, g_depthz
