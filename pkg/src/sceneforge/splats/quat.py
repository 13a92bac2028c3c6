"""Batched quaternion operations and their Jacobians (wxyz)."""

import numpy as np


def normalize(q):
    """Unit quaternions plus the norms needed for the backward pass."""
    norms = np.linalg.norm(q, axis=1, keepdims=True)
    return q / norms, norms


def normalize_backward(upstream, unit, norms):
    """Chain d(normalize)/dq: (I - n n^T)/|q| applied rowwise."""
    dot = np.sum(upstream * unit, axis=1, keepdims=True)
    return (upstream - unit * dot) / norms


def mul(a, b):
    """Hamilton product rowwise; a and b are (N,4)."""
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=1,
    )


def mul_backward(upstream, a, b):
    """Gradients of mul(a, b) w.r.t. both factors."""
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    uw, ux, uy, uz = upstream[:, 0], upstream[:, 1], upstream[:, 2], upstream[:, 3]
    g_a = np.stack(
        [
            uw * bw + ux * bx + uy * by + uz * bz,
            -uw * bx + ux * bw - uy * bz + uz * by,
            -uw * by + ux * bz + uy * bw - uz * bx,
            -uw * bz - ux * by + uy * bx + uz * bw,
        ],
        axis=1,
    )
    g_b = np.stack(
        [
            uw * aw + ux * ax + uy * ay + uz * az,
            -uw * ax + ux * aw + uy * az - uz * ay,
            -uw * ay - ux * az + uy * aw + uz * ax,
            -uw * az + ux * ay - uy * ax + uz * aw,
        ],
        axis=1,
    )
    return g_a, g_b


def to_matrices(q):
    """Rotation matrices (N,3,3) of unit quaternions (N,4)."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    m = np.empty((q.shape[0], 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def to_matrices_backward(upstream, q):
    """Chain dL/dR (N,3,3) back to the quaternion components (N,4)."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    u = upstream
    g = np.empty((q.shape[0], 4))
    g[:, 0] = 2 * (
        -z * u[:, 0, 1] + y * u[:, 0, 2]
        + z * u[:, 1, 0] - x * u[:, 1, 2]
        - y * u[:, 2, 0] + x * u[:, 2, 1]
    )
    g[:, 1] = 2 * (
        y * u[:, 0, 1] + z * u[:, 0, 2]
        + y * u[:, 1, 0] - 2 * x * u[:, 1, 1] - w * u[:, 1, 2]
        + z * u[:, 2, 0] + w * u[:, 2, 1] - 2 * x * u[:, 2, 2]
    )
    g[:, 2] = 2 * (
        -2 * y * u[:, 0, 0] + x * u[:, 0, 1] + w * u[:, 0, 2]
        + x * u[:, 1, 0] + z * u[:, 1, 2]
        - w * u[:, 2, 0] + z * u[:, 2, 1] - 2 * y * u[:, 2, 2]
    )
    g[:, 3] = 2 * (
        -2 * z * u[:, 0, 0] - w * u[:, 0, 1] + x * u[:, 0, 2]
        + w * u[:, 1, 0] - 2 * z * u[:, 1, 1] + y * u[:, 1, 2]
        + x * u[:, 2, 0] + y * u[:, 2, 1]
    )
    return g
