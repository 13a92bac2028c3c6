"""Factorized spatiotemporal feature field over six 2D grids.

Coordinates are (x, y, z, t) normalized to [0,1]^4. Each of the six planes
covers one coordinate pair; per level the six bilinear samples are fused by
elementwise product, and levels are concatenated.
"""

from dataclasses import dataclass, field

import numpy as np

# coordinate pairs per plane: (x,y),(x,z),(y,z),(x,t),(y,t),(z,t)
PLANE_AXES = ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3))


@dataclass
class HexPlaneConfig:
    spatial_resolutions: tuple = (32, 64)
    time_resolutions: tuple = (16, 25)
    n_features: int = 16
    init_scale: float = 0.1

    @property
    def levels(self):
        return len(self.spatial_resolutions)

    @property
    def feature_dim(self):
        return self.levels * self.n_features

    def plane_shape(self, level, plane):
        res = []
        for axis in PLANE_AXES[plane]:
            if axis == 3:
                res.append(self.time_resolutions[level])
            else:
                res.append(self.spatial_resolutions[level])
        return (res[0], res[1], self.n_features)


@dataclass
class HexPlaneField:
    config: HexPlaneConfig
    grids: list = field(default=None)  # [level][plane] -> (Ra, Rb, F)

    def __post_init__(self):
        if self.grids is None:
            raise ValueError("use HexPlaneField.create")

    @staticmethod
    def create(config: HexPlaneConfig, rng: np.random.Generator):
        """Grids initialized near 1 so products start O(1)."""
        grids = [
            [
                1.0 + config.init_scale * rng.uniform(-1.0, 1.0, size=config.plane_shape(lv, pl))
                for pl in range(6)
            ]
            for lv in range(config.levels)
        ]
        return HexPlaneField(config, grids)

    def zeros_like_grids(self):
        return [[np.zeros_like(g) for g in level] for level in self.grids]

    def sample(self, coords):
        """Features (N, levels*F) at (N,4) coordinates; returns (features, cache)."""
        coords = np.asarray(coords, dtype=np.float64)
        inside = (coords > 0.0) & (coords < 1.0)  # clip zeroes the coord grad
        q = np.clip(coords, 0.0, 1.0)
        n = q.shape[0]
        feats = np.empty((n, self.config.feature_dim))
        cache = {"inside": inside, "levels": []}
        for lv, level in enumerate(self.grids):
            samples = []
            corners = []
            for pl, grid in enumerate(level):
                a_axis, b_axis = PLANE_AXES[pl]
                ra, rb = grid.shape[0], grid.shape[1]
                ga = q[:, a_axis] * (ra - 1)
                gb = q[:, b_axis] * (rb - 1)
                i0 = np.clip(np.floor(ga).astype(np.int64), 0, ra - 2)
                j0 = np.clip(np.floor(gb).astype(np.int64), 0, rb - 2)
                fa = ga - i0
                fb = gb - j0
                g00 = grid[i0, j0]
                g10 = grid[i0 + 1, j0]
                g01 = grid[i0, j0 + 1]
                g11 = grid[i0 + 1, j0 + 1]
                wa = fa[:, None]
                wb = fb[:, None]
                s = (
                    (1 - wa) * (1 - wb) * g00
                    + wa * (1 - wb) * g10
                    + (1 - wa) * wb * g01
                    + wa * wb * g11
                )
                samples.append(s)
                corners.append((i0, j0, fa, fb, g00, g10, g01, g11))
            prod = samples[0].copy()
            for s in samples[1:]:
                prod *= s
            f0 = lv * self.config.n_features
            feats[:, f0:f0 + self.config.n_features] = prod
            cache["levels"].append((samples, corners))
        return feats, cache

    def backward(self, upstream, cache):
        """Grid gradients plus (N,4) coordinate gradients."""
        n = upstream.shape[0]
        nf = self.config.n_features
        grid_grads = self.zeros_like_grids()
        coord_grad = np.zeros((n, 4))
        inside = cache["inside"]
        for lv, (samples, corners) in enumerate(cache["levels"]):
            u = upstream[:, lv * nf:(lv + 1) * nf]
            # leave-one-out products for the six-way elementwise product
            k = len(samples)
            prefix = [None] * k
            suffix = [None] * k
            acc = np.ones_like(samples[0])
            for p in range(k):
                prefix[p] = acc
                acc = acc * samples[p]
            acc = np.ones_like(samples[0])
            for p in range(k - 1, -1, -1):
                suffix[p] = acc
                acc = acc * samples[p]
            for pl in range(k):
                ds = u * prefix[pl] * suffix[pl]
                i0, j0, fa, fb, g00, g10, g01, g11 = corners[pl]
                a_axis, b_axis = PLANE_AXES[pl]
                grid = self.grids[lv][pl]
                ra, rb = grid.shape[0], grid.shape[1]
                wa = fa[:, None]
                wb = fb[:, None]
                gg = grid_grads[lv][pl].reshape(-1, nf)
                flat = i0 * rb + j0
                np.add.at(gg, flat, ds * (1 - wa) * (1 - wb))
                np.add.at(gg, flat + rb, ds * wa * (1 - wb))
                np.add.at(gg, flat + 1, ds * (1 - wa) * wb)
                np.add.at(gg, flat + rb + 1, ds * wa * wb)
                d_fa = np.sum(ds * ((1 - wb) * (g10 - g00) + wb * (g11 - g01)), axis=1)
                d_fb = np.sum(ds * ((1 - wa) * (g01 - g00) + wa * (g11 - g10)), axis=1)
                coord_grad[:, a_axis] += d_fa * (ra - 1) * inside[:, a_axis]
                coord_grad[:, b_axis] += d_fb * (rb - 1) * inside[:, b_axis]
        return grid_grads, coord_grad
