"""Scene4D: canonical splats + deformation field + per-video embeddings.

Bundles every trainable parameter class and exposes forward rendering and
one-call loss+gradient evaluation used by both training loops and the
finite-difference gradient suite.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from sceneforge.geometry import CameraIntrinsics, CameraPose
from sceneforge.splats import losses, quat
from sceneforge.splats.decoder import DeformationDecoder
from sceneforge.splats.deform import attach_bbox, deform_backward, deform_forward
from sceneforge.splats.hexplane import HexPlaneConfig, HexPlaneField
from sceneforge.splats.model import SplatModel
from sceneforge.splats.render import render_backward, render_splats


@dataclass
class Scene4D:
    model: SplatModel
    field: HexPlaneField
    decoder: DeformationDecoder
    embeddings: np.ndarray  # (K, W)
    edges: np.ndarray = dc_field(default=None)
    lambda_depth: float = 1.0
    lambda_rigidity: float = 1.0

    @staticmethod
    def create(model: SplatModel, num_videos: int, embed_dim=16,
               hex_config: HexPlaneConfig = None, rng: np.random.Generator = None,
               bbox_pad=0.15):
        rng = rng or np.random.default_rng(0)
        hex_config = hex_config or HexPlaneConfig()
        field = HexPlaneField.create(hex_config, rng)
        lo = model.positions.min(axis=0)
        hi = model.positions.max(axis=0)
        span = np.maximum(hi - lo, 1e-3)
        attach_bbox(field, lo - bbox_pad * span, hi + bbox_pad * span)
        decoder = DeformationDecoder.create(hex_config.feature_dim + embed_dim, rng,
                                            embed_dim=embed_dim)
        embeddings = np.zeros((num_videos, embed_dim))
        edges = losses.build_knn_edges(model.positions)
        return Scene4D(model, field, decoder, embeddings)._with_edges(edges)

    def _with_edges(self, edges):
        self.edges = edges
        return self

    def rebuild_edges(self, k=6):
        self.edges = losses.build_knn_edges(self.model.positions, k=k)

    def global_embedding(self):
        """Average of the per-video embeddings, used for playback."""
        return self.embeddings.mean(axis=0)

    # ----------------------------------------------------------- forward

    def deformed_state(self, t, embedding):
        """Deformed (positions, unit rotations, log scales) at time t."""
        pos_d, quat_d, logs_d, _ = deform_forward(
            self.model.positions, self.model.rotations, self.model.log_scales,
            t, self.field, self.decoder, np.asarray(embedding),
        )
        return pos_d, quat_d, logs_d

    def render(self, intr: CameraIntrinsics, pose: CameraPose, t=None, embedding=None):
        """Render arrays (rgb, depth, accum_alpha); t=None renders the canonical scene."""
        m = self.model
        if t is None:
            unit, _ = quat.normalize(m.rotations)
            state = (m.positions, unit, m.log_scales)
        else:
            if embedding is None:
                embedding = self.global_embedding()
            state = self.deformed_state(t, embedding)
        return render_splats(state[0], state[1], state[2],
                             m.opacity_logits, m.sh, intr, pose)

    # ------------------------------------------------------ loss + grads

    def compute_loss(self, batch, want_grads=False):
        """Total masked loss for one (pose, time, video) sample.

        batch keys: intr, pose, target_rgb (H,W,3), target_depth (H,W),
        target_valid (H,W) bool, mask (H,W) weights; optional t (time) and
        k (video index) switch on deformation + rigidity.
        """
        m = self.model
        t = batch.get("t")
        k = batch.get("k")
        deforming = t is not None
        if deforming:
            embedding = self.embeddings[k] if k is not None else batch["embedding"]
            pos_d, quat_d, logs_d, dcache = deform_forward(
                m.positions, m.rotations, m.log_scales, t,
                self.field, self.decoder, embedding,
            )
        else:
            quat_d, norms = quat.normalize(m.rotations)
            pos_d, logs_d = m.positions, m.log_scales
        rgb, depth, alpha, rcache = render_splats(
            pos_d, quat_d, logs_d, m.opacity_logits, m.sh,
            batch["intr"], batch["pose"], want_cache=True,
        )
        v_rgb, d_rgb = losses.loss_rgb(rgb, batch["target_rgb"], batch["mask"])
        v_dep, d_dep = losses.loss_depth(
            depth, alpha, batch["target_depth"], batch["target_valid"], batch["mask"]
        )
        if deforming:
            v_rig, d_dx = losses.loss_rigidity(dcache["dx"], self.edges)
        else:
            v_rig, d_dx = 0.0, None
        value = losses.total_loss(v_rgb, v_dep, v_rig,
                                  self.lambda_depth, self.lambda_rigidity)
        if not want_grads:
            return value

        rg = render_backward(
            rcache, d_rgb, self.lambda_depth * d_dep
        )
        grads = {
            "opacity_logits": rg["opacity_logits"],
            "sh": rg["sh"],
        }
        if deforming:
            dg = deform_backward(
                dcache, rg["positions"], rg["unit_rotations"], rg["log_scales"],
                g_dx_extra=self.lambda_rigidity * d_dx,
            )
            grads["positions"] = dg["positions"]
            grads["rotations"] = dg["rotations"]
            grads["log_scales"] = dg["log_scales"]
            grads["grids"] = dg["grid_grads"]
            grads["decoder"] = dg["decoder_grads"]
            emb = np.zeros_like(self.embeddings)
            if k is not None:
                emb[k] = dg["embedding"]
            grads["embeddings"] = emb
        else:
            grads["positions"] = rg["positions"]
            grads["rotations"] = quat.normalize_backward(rg["unit_rotations"], quat_d, norms)
            grads["log_scales"] = rg["log_scales"]
        return value, grads

    # -------------------------------------------------- parameter access

    def param_leaves(self, include_canonical=True, include_dynamic=True):
        """Live (name, array) pairs; mutating an array mutates the scene."""
        leaves = []
        if include_canonical:
            m = self.model
            leaves += [
                ("positions", m.positions),
                ("rotations", m.rotations),
                ("log_scales", m.log_scales),
                ("opacity_logits", m.opacity_logits),
                ("sh", m.sh),
            ]
        if include_dynamic:
            for lv, level in enumerate(self.field.grids):
                for pl, grid in enumerate(level):
                    leaves.append((f"grid_{lv}_{pl}", grid))
            for name, arr in self.decoder.params.items():
                leaves.append((f"dec_{name}", arr))
            leaves.append(("embeddings", self.embeddings))
        return leaves

    def grad_leaf(self, grads, name):
        """Gradient array matching a param_leaves entry."""
        if name.startswith("grid_"):
            _, lv, pl = name.split("_")
            return grads["grids"][int(lv)][int(pl)]
        if name.startswith("dec_"):
            return grads["decoder"][name[4:]]
        return grads[name]
