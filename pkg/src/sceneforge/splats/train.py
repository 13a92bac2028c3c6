"""Two-phase splat training.

Phase 1 fits the canonical scene to point-cloud renders (RGB + depth).
Phase 2 fits the deformation field, decoder, and per-video embeddings to
the animated videos under visibility-mask weighting, with the rigidity
regularizer and an L1-ball projection on the embeddings.
"""

from dataclasses import dataclass, field

import numpy as np

from sceneforge.splats.scene import Scene4D

DEFAULT_LRS = {
    "positions": 2e-4,
    "rotations": 1e-3,
    "log_scales": 2e-3,
    "opacity_logits": 2e-2,
    "sh": 2.5e-3,
    "grids": 5e-3,
    "decoder": 2e-6,
    "gains": 3e-4,
    "embeddings": 3e-4,
}

# deformation-path classes take plain gradient steps: adaptive normalization
# would random-walk them at learning-rate scale even when the videos carry
# no motion, breaking the static-scene zero-deformation property
PLAIN_CLASSES = ("grids", "decoder", "gains", "embeddings")


@dataclass
class TrainConfig:
    iters_canonical: int = 3000
    iters_4d: int = 15000
    lrs: dict = field(default_factory=lambda: dict(DEFAULT_LRS))
    prune_interval: int = 500
    prune_opacity: float = 0.005
    embed_l1_bound: float = 1.0
    seed: int = 0
    checkpoint_every: int = 1000


def lr_group(name: str) -> str:
    if name.startswith("grid_"):
        return "grids"
    if name.startswith("dec_g_"):
        return "gains"
    if name.startswith("dec_"):
        return "decoder"
    return name


class AdaptiveStep:
    """Momentum-free per-parameter steps.

    Canonical splat classes divide by the root of an exponentially averaged
    squared gradient; PLAIN_CLASSES take raw gradient steps (see above)."""

    def __init__(self, lrs, beta2=0.99, eps=1e-8):
        self.lrs = lrs
        self.beta2 = beta2
        self.eps = eps
        self.state = {}

    def step(self, leaves, grads_for):
        for name, arr in leaves:
            g = grads_for(name)
            if g is None:
                continue
            group = lr_group(name)
            lr = self.lrs[group]
            if lr == 0.0:
                continue
            if group in PLAIN_CLASSES:
                arr -= lr * g
                continue
            v = self.state.get(name)
            if v is None:
                v = np.zeros_like(arr)
                self.state[name] = v
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            arr -= lr * g / (np.sqrt(v) + self.eps)

    def prune(self, keep, per_splat_names):
        for name in per_splat_names:
            if name in self.state:
                self.state[name] = self.state[name][keep]


PER_SPLAT = ("positions", "rotations", "log_scales", "opacity_logits", "sh")


def project_l1_ball(v, radius):
    """Euclidean projection onto the L1 ball of the given radius."""
    norm = np.abs(v).sum()
    if norm <= radius:
        return v
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(u) + 1) > (css - radius))[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def prune_scene(scene: Scene4D, optimizer: AdaptiveStep, threshold: float):
    keep = scene.model.opacities > threshold
    if keep.all() or keep.sum() == 0:
        return 0
    scene.model = scene.model.keep(keep)
    scene.rebuild_edges()
    optimizer.prune(keep, PER_SPLAT)
    return int((~keep).sum())


def train_canonical(scene: Scene4D, batches, config: TrainConfig, on_iteration=None):
    """Fit canonical splats against point-cloud render targets (t = None)."""
    rng = np.random.default_rng((config.seed, 1))
    opt = AdaptiveStep(config.lrs)
    leaves = lambda: scene.param_leaves(include_dynamic=False)
    for it in range(1, config.iters_canonical + 1):
        batch = batches[rng.integers(len(batches))]
        _, grads = scene.compute_loss(batch, want_grads=True)
        opt.step(leaves(), lambda name: scene.grad_leaf(grads, name))
        if config.prune_interval and it % config.prune_interval == 0:
            prune_scene(scene, opt, config.prune_opacity)
        if on_iteration:
            on_iteration(it)
    return scene


def train_4d(scene: Scene4D, batches, config: TrainConfig, on_iteration=None):
    """Fit the deformation stage; batches carry (k, t) so every sample
    renders through its video's embedding. Embeddings are projected back
    onto the L1 ball after every step."""
    rng = np.random.default_rng((config.seed, 2))
    opt = AdaptiveStep(config.lrs)
    for it in range(1, config.iters_4d + 1):
        batch = batches[rng.integers(len(batches))]
        _, grads = scene.compute_loss(batch, want_grads=True)
        opt.step(scene.param_leaves(), lambda name: scene.grad_leaf(grads, name))
        for k in range(len(scene.embeddings)):
            scene.embeddings[k] = project_l1_ball(scene.embeddings[k], config.embed_l1_bound)
        if on_iteration:
            on_iteration(it)
    return scene


def video_batches(videos, masks, trajs, intr, cloud_depths):
    """One batch per (video, frame): RGB from the animated video, depth from
    the static cloud render, loss weighted by the visibility mask."""
    batches = []
    num_frames = len(trajs[0])
    for k, (video, mask_list, traj) in enumerate(zip(videos, masks, trajs)):
        for j, (frame, mask, pose) in enumerate(zip(video, mask_list, traj.poses)):
            depth = cloud_depths[k][j]
            batches.append(dict(
                intr=intr, pose=pose, t=j / (num_frames - 1), k=k,
                target_rgb=frame.rgb, target_depth=depth.values,
                target_valid=depth.validity, mask=mask.weights,
            ))
    return batches


def canonical_batches(cloud_renders, intr):
    """Batches from point-cloud renders: (image, depth, validity-as-mask)."""
    batches = []
    for pose, image, depth in cloud_renders:
        batches.append(dict(
            intr=intr, pose=pose, target_rgb=image.rgb,
            target_depth=depth.values, target_valid=depth.validity,
            mask=depth.validity.astype(np.float64),
        ))
    return batches
