"""Masked training losses and their gradients w.r.t. rendered quantities.

All losses are sums (not means), matching the per-pixel example values:
a single masked pixel with inverse-depth error 1 contributes exactly 1.
"""

import numpy as np

DEPTH_VALID_ALPHA = 0.5  # rendered depth counts only where enough opacity accumulated


def loss_rgb(render_rgb, target_rgb, mask_weights):
    """Sum of masked per-pixel L1 color error; also returns d/d_render."""
    diff = render_rgb - target_rgb
    value = float(np.sum(np.abs(diff) * mask_weights[:, :, None]))
    grad = np.sign(diff) * mask_weights[:, :, None]
    return value, grad


def loss_depth(render_depth, render_alpha, target_depth, target_valid, mask_weights):
    """Masked L1 in disparity (inverse depth), heavier on near scene content.

    Pixels only count where the target is valid and the render accumulated
    at least DEPTH_VALID_ALPHA opacity.
    """
    valid = target_valid & (render_alpha > DEPTH_VALID_ALPHA) & (render_depth > 0)
    w = mask_weights * valid
    rd = np.where(valid, render_depth, 1.0)
    td = np.where(valid, target_depth, 1.0)
    diff = 1.0 / rd - 1.0 / td
    value = float(np.sum(np.abs(diff) * w))
    grad = np.sign(diff) * w * (-1.0 / rd**2)
    return value, grad


def loss_rigidity(delta_pos, edges):
    """Squared difference of neighboring position deltas over kNN edges.

    edges: (E,2) int array of splat index pairs (each undirected edge once).
    Returns (value, d/d_delta_pos).
    """
    grad = np.zeros_like(delta_pos)
    if len(edges) == 0:
        return 0.0, grad
    d = delta_pos[edges[:, 0]] - delta_pos[edges[:, 1]]
    value = float(np.sum(d * d))
    np.add.at(grad, edges[:, 0], 2.0 * d)
    np.add.at(grad, edges[:, 1], -2.0 * d)
    return value, grad


def total_loss(rgb_term, depth_term, rigidity_term, lambda_depth=1.0, lambda_rigidity=1.0):
    return rgb_term + lambda_depth * depth_term + lambda_rigidity * rigidity_term


def build_knn_edges(positions, k=6):
    """Undirected kNN edge list on canonical positions."""
    from scipy.spatial import cKDTree

    n = len(positions)
    if n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    kk = min(k + 1, n)
    _, idx = cKDTree(positions).query(positions, k=kk)
    src = np.repeat(np.arange(n), kk - 1)
    dst = idx[:, 1:].reshape(-1)
    pairs = np.stack([np.minimum(src, dst), np.maximum(src, dst)], axis=1)
    return np.unique(pairs, axis=0)
