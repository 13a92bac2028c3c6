"""Pipeline configuration: a sectioned key=value file snapshotted into each bundle.

Defaults carry the reference operating point: 10 expansion iterations,
K=10 videos of T=25 frames, tau_tr=16 / tau_refine=9 sampler entries,
embedding width 16, beta=1, unit loss weights, SH order 3, and
3000/15000 training iterations.
"""

import configparser
import hashlib
import io
from dataclasses import asdict, dataclass, field, fields

from sceneforge.errors import ConfigError


@dataclass
class CameraSection:
    fx: float = 64.0
    fy: float = 64.0
    cx: float = 31.5
    cy: float = 31.5
    width: int = 64
    height: int = 64


@dataclass
class ExpansionSection:
    iterations: int = 10
    seed: int = 0
    splat_radius_px: float = 1.0
    plan: str = "orbit"          # orbit | pan | file
    orbit_step_deg: float = 5.0
    orbit_center_z: float = 3.0
    pan_step_x: float = 0.2
    pan_step_y: float = 0.0
    pan_step_z: float = 0.0


@dataclass
class AnimateSection:
    videos: int = 10             # K
    frames: int = 25             # T
    tau_tr: int = 16
    tau_refine: int = 9
    fuse_weight: float = 0.5
    end_transition_n: int = 5
    motion_spread: float = 0.5
    seed: int = 0
    workers: int = 1


@dataclass
class TrainSection:
    iters_canonical: int = 3000
    iters_4d: int = 15000
    lambda_depth: float = 1.0
    lambda_rigidity: float = 1.0
    beta: float = 1.0            # visibility score balance
    embed_dim: int = 16          # W
    sh_order: int = 3
    embed_l1_bound: float = 1.0
    soft_width_px: float = 8.0
    target_splats: int = 0       # 0 = one splat per cloud point
    prune_interval: int = 500
    prune_opacity: float = 0.005
    checkpoint_every: int = 1000
    seed: int = 0
    lr_positions: float = 2e-4
    lr_rotations: float = 1e-3
    lr_log_scales: float = 2e-3
    lr_opacity_logits: float = 2e-2
    lr_sh: float = 2.5e-3
    lr_grids: float = 5e-3
    lr_decoder: float = 2e-6
    lr_gains: float = 3e-4
    lr_embeddings: float = 3e-4


@dataclass
class HexplaneSection:
    spatial_resolutions: str = "32,64"
    time_resolutions: str = "16,25"
    n_features: int = 16

    def resolutions(self):
        spatial = tuple(int(v) for v in self.spatial_resolutions.split(","))
        time = tuple(int(v) for v in self.time_resolutions.split(","))
        if len(spatial) != len(time):
            raise ConfigError("hexplane spatial/time level counts differ")
        return spatial, time


@dataclass
class WorldSection:
    """Synthetic-world parameters used when plugins run in-process."""

    plane_z: float = 3.0
    motion_amplitude: float = 0.06
    depth_warp_a: float = 1.0
    depth_warp_b: float = 0.0
    color_shift: float = 0.0
    codec_blur: float = 0.0
    schedule_steps: int = 25     # T_diff
    noise_sigma_max: float = 0.8


@dataclass
class PluginsSection:
    socket: str = ""             # empty -> in-process synthetic plugins


SECTIONS = {
    "camera": CameraSection,
    "expansion": ExpansionSection,
    "animate": AnimateSection,
    "train": TrainSection,
    "hexplane": HexplaneSection,
    "world": WorldSection,
    "plugins": PluginsSection,
}


@dataclass
class ForgeConfig:
    camera: CameraSection = field(default_factory=CameraSection)
    expansion: ExpansionSection = field(default_factory=ExpansionSection)
    animate: AnimateSection = field(default_factory=AnimateSection)
    train: TrainSection = field(default_factory=TrainSection)
    hexplane: HexplaneSection = field(default_factory=HexplaneSection)
    world: WorldSection = field(default_factory=WorldSection)
    plugins: PluginsSection = field(default_factory=PluginsSection)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for name in SECTIONS:
            parser[name] = {k: str(v) for k, v in asdict(getattr(self, name)).items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @staticmethod
    def from_ini(text: str) -> "ForgeConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        cfg = ForgeConfig()
        for name, cls in SECTIONS.items():
            if not parser.has_section(name):
                continue
            section = getattr(cfg, name)
            valid = {f.name: f.type for f in fields(cls)}
            for key, raw in parser[name].items():
                if key not in valid:
                    raise ConfigError(f"unknown config key [{name}] {key}")
                setattr(section, key, _coerce(raw, getattr(section, key)))
        return cfg

    @staticmethod
    def load(path) -> "ForgeConfig":
        with open(path) as fh:
            return ForgeConfig.from_ini(fh.read())

    def apply_overrides(self, overrides):
        """overrides: iterable of 'section.key=value' strings (CLI flags)."""
        for item in overrides or ():
            try:
                dotted, value = item.split("=", 1)
                section, key = dotted.split(".", 1)
            except ValueError:
                raise ConfigError(f"override {item!r} is not section.key=value")
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            target = getattr(self, section)
            if not hasattr(target, key):
                raise ConfigError(f"unknown config key [{section}] {key}")
            setattr(target, key, _coerce(value, getattr(target, key)))
        return self

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:16]

    def train_lrs(self):
        t = self.train
        return {
            "positions": t.lr_positions,
            "rotations": t.lr_rotations,
            "log_scales": t.lr_log_scales,
            "opacity_logits": t.lr_opacity_logits,
            "sh": t.lr_sh,
            "grids": t.lr_grids,
            "decoder": t.lr_decoder,
            "gains": t.lr_gains,
            "embeddings": t.lr_embeddings,
        }


def _coerce(raw, current):
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw.strip()
