"""Deformation decoder: feature+embedding -> (dx, dr, ds).

Two tanh hidden layers of width 64 with separate linear heads. Heads are
zero-initialized so a fresh decoder outputs exactly zero deformation.
"""

from dataclasses import dataclass

import numpy as np

HEADS = (("dx", 3), ("dr", 4), ("ds", 3))


@dataclass
class DeformationDecoder:
    params: dict  # name -> array

    @staticmethod
    def create(input_dim, rng: np.random.Generator, hidden=64, embed_dim=0):
        def xavier(fan_in, fan_out):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-bound, bound, size=(fan_out, fan_in))

        params = {
            "w1": xavier(input_dim, hidden),
            "b1": np.zeros(hidden),
            "w2": xavier(hidden, hidden),
            "b2": np.zeros(hidden),
        }
        for name, width in HEADS:
            params[f"w_{name}"] = np.zeros((width, hidden))
            params[f"b_{name}"] = np.zeros(width)
            # per-head motion gain, linear in the embedding (1 + e . g)
            params[f"g_{name}"] = np.zeros(embed_dim)
        return DeformationDecoder(params)

    def randomize_heads(self, rng: np.random.Generator, scale=0.01):
        """Used by gradient tests; training relies on the zero init."""
        for name, width in HEADS:
            self.params[f"w_{name}"] = scale * rng.standard_normal((width, self.params["w1"].shape[0]))
            self.params[f"b_{name}"] = scale * rng.standard_normal(width)
            g = self.params[f"g_{name}"]
            if g.size:
                self.params[f"g_{name}"] = 10.0 * scale * rng.standard_normal(g.shape)

    @property
    def input_dim(self):
        return self.params["w1"].shape[1]

    def forward(self, x):
        """x: (N, input_dim) -> dict of head outputs plus a backward cache."""
        p = self.params
        z1 = x @ p["w1"].T + p["b1"]
        h1 = np.tanh(z1)
        z2 = h1 @ p["w2"].T + p["b2"]
        h2 = np.tanh(z2)
        out = {name: h2 @ p[f"w_{name}"].T + p[f"b_{name}"] for name, _ in HEADS}
        cache = (x, h1, h2)
        return out, cache

    def backward(self, upstream, cache):
        """upstream: dict head -> (N,width). Returns (param_grads, d_input).

        Gain parameters (g_*) are applied outside the network; their
        gradients are handled by the deformation stage."""
        p = self.params
        x, h1, h2 = cache
        grads = {}
        d_h2 = np.zeros_like(h2)
        for name, _ in HEADS:
            u = upstream[name]
            grads[f"w_{name}"] = u.T @ h2
            grads[f"b_{name}"] = u.sum(axis=0)
            d_h2 += u @ p[f"w_{name}"]
        d_z2 = d_h2 * (1.0 - h2 * h2)
        grads["w2"] = d_z2.T @ h1
        grads["b2"] = d_z2.sum(axis=0)
        d_h1 = d_z2 @ p["w2"]
        d_z1 = d_h1 * (1.0 - h1 * h1)
        grads["w1"] = d_z1.T @ x
        grads["b1"] = d_z1.sum(axis=0)
        d_input = d_z1 @ p["w1"]
        return grads, d_input
