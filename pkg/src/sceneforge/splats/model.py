"""Canonical splat parameter arrays and cloud-based initialization."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from sceneforge.geometry import PointCloud
from sceneforge.splats.sh import C0, NUM_COEFFS


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def logit(p):
    return np.log(p) - np.log1p(-p)


@dataclass
class SplatModel:
    """Struct-of-arrays splat parameters.

    rotations are stored unconstrained and normalized in the forward pass;
    scales are log-parameterized; opacity is a sigmoid logit; colors are
    order-3 spherical harmonics (16 coefficients per channel).
    """

    positions: np.ndarray      # (N,3)
    rotations: np.ndarray      # (N,4) raw wxyz
    log_scales: np.ndarray     # (N,3)
    opacity_logits: np.ndarray  # (N,)
    sh: np.ndarray             # (N,16,3)

    def __len__(self):
        return len(self.positions)

    def copy(self):
        return SplatModel(
            self.positions.copy(), self.rotations.copy(), self.log_scales.copy(),
            self.opacity_logits.copy(), self.sh.copy(),
        )

    def keep(self, mask):
        """Subset of splats (used by opacity pruning)."""
        return SplatModel(
            self.positions[mask], self.rotations[mask], self.log_scales[mask],
            self.opacity_logits[mask], self.sh[mask],
        )

    @property
    def opacities(self):
        return sigmoid(self.opacity_logits)


def init_from_cloud(cloud: PointCloud, target_count=None, opacity=0.9,
                    rng: np.random.Generator = None) -> SplatModel:
    """One splat per (optionally subsampled) point.

    Isotropic scale from the mean distance to the 3 nearest neighbors, DC
    spherical-harmonics term from the point color, identity rotation.
    """
    n = len(cloud)
    if n == 0:
        raise ValueError("cannot initialize splats from an empty cloud")
    positions = cloud.positions
    colors = cloud.colors
    if target_count is not None and target_count < n:
        rng = rng or np.random.default_rng(0)
        pick = np.sort(rng.choice(n, size=target_count, replace=False))
        positions = positions[pick]
        colors = colors[pick]
        n = target_count
    tree = cKDTree(positions)
    k = min(4, n)
    dist, _ = tree.query(positions, k=k)
    if k > 1:
        nn = dist[:, 1:].mean(axis=1)
    else:
        nn = np.full(n, 0.1)
    nn = np.maximum(nn, 1e-6)
    sh = np.zeros((n, NUM_COEFFS, 3))
    sh[:, 0, :] = colors / C0
    return SplatModel(
        positions=positions.copy(),
        rotations=np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n, 1)),
        log_scales=np.log(nn)[:, None].repeat(3, axis=1),
        opacity_logits=np.full(n, logit(opacity)),
        sh=sh,
    )
