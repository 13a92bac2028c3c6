"""Scene bundle: the on-disk artifact exchanged between CLI stages and the
viewer.

Layout: manifest.json (metadata, trajectories, config snapshot, sha256
checksums) plus binary arrays. All multi-byte values little-endian; arrays
are float32 on disk (the engine widens to float64 in memory, so
load -> save of an existing bundle is byte-identical).
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from sceneforge.errors import BundleError
from sceneforge.formats import (
    pack_tensor,
    read_mask_png,
    read_ply,
    read_png,
    unpack_tensor,
    write_mask_png,
    write_ply,
    write_png,
)
from sceneforge.geometry import CameraIntrinsics
from sceneforge.splats.deform import attach_bbox
from sceneforge.splats.decoder import DeformationDecoder
from sceneforge.splats.hexplane import HexPlaneConfig, HexPlaneField
from sceneforge.splats.model import SplatModel, logit, sigmoid
from sceneforge.splats.scene import Scene4D
from sceneforge.trajectory import Trajectory

MANIFEST_VERSION = 1
SPLAT_RECORD_FLOATS = 59  # pos 3 + quat 4 + scale 3 + opacity 1 + SH 48

try:
    import zstandard as _zstd
except ImportError:
    _zstd = None


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class SceneBundle:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.manifest = {
            "version": MANIFEST_VERSION,
            "stages": {},
            "checksums": {},
        }

    # ------------------------------------------------------------ manifest

    @staticmethod
    def open(directory, verify_checksums=True):
        bundle = SceneBundle(directory)
        path = bundle.dir / "manifest.json"
        if not path.exists():
            raise BundleError(f"no manifest at {path}")
        with open(path) as fh:
            bundle.manifest = json.load(fh)
        if "version" not in bundle.manifest:
            raise BundleError("manifest missing version field")
        if verify_checksums:
            bundle.verify()
        return bundle

    def save_manifest(self):
        self.dir.mkdir(parents=True, exist_ok=True)
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(self.manifest, fh, indent=1, sort_keys=True)

    def verify(self):
        for rel, digest in self.manifest.get("checksums", {}).items():
            path = self.dir / rel
            if not path.exists():
                raise BundleError(f"bundle array missing: {rel}")
            actual = _sha256(path)
            if actual != digest:
                raise BundleError(f"checksum mismatch for {rel}")

    def _register(self, rel_path):
        self.manifest["checksums"][str(rel_path)] = _sha256(self.dir / rel_path)

    # -------------------------------------------------------------- arrays

    def write_array(self, name, arr, compress=False):
        rel = f"{name}.bin"
        path = self.dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = pack_tensor(arr)
        if compress:
            if _zstd is None:
                raise BundleError("zstd compression requested but zstandard is not installed")
            blob = _zstd.ZstdCompressor().compress(blob)
            rel = f"{name}.bin.zst"
            path = self.dir / rel
        with open(path, "wb") as fh:
            fh.write(blob)
        self._register(rel)
        return rel

    def read_array(self, name):
        path = self.dir / f"{name}.bin"
        if path.exists():
            with open(path, "rb") as fh:
                blob = fh.read()
        else:
            zpath = self.dir / f"{name}.bin.zst"
            if not zpath.exists():
                raise BundleError(f"array {name} not in bundle")
            if _zstd is None:
                raise BundleError(f"{name} is zstd-compressed but zstandard is not installed")
            with open(zpath, "rb") as fh:
                blob = _zstd.ZstdDecompressor().decompress(fh.read())
        arr, _ = unpack_tensor(blob)
        return arr

    # --------------------------------------------------------------- cloud

    def write_cloud(self, cloud):
        write_ply(cloud, self.dir / "cloud.ply")
        self._register("cloud.ply")

    def read_cloud(self):
        return read_ply(self.dir / "cloud.ply")

    # --------------------------------------------------------- trajectories

    def write_trajectories(self, trajs):
        self.manifest["trajectories"] = [
            {"source_step": tr.source_step,
             "poses": [list(p.rotation) + list(p.translation) for p in tr.poses]}
            for tr in trajs
        ]

    def read_trajectories(self):
        out = []
        for entry in self.manifest.get("trajectories", []):
            out.append(Trajectory.from_array(np.asarray(entry["poses"]),
                                             entry.get("source_step", -1)))
        return out

    # -------------------------------------------------------------- camera

    def write_intrinsics(self, intr: CameraIntrinsics):
        self.manifest["camera"] = {
            "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
            "width": intr.width, "height": intr.height,
        }

    def read_intrinsics(self) -> CameraIntrinsics:
        c = self.manifest["camera"]
        return CameraIntrinsics(fx=c["fx"], fy=c["fy"], cx=c["cx"], cy=c["cy"],
                                width=int(c["width"]), height=int(c["height"]))

    # -------------------------------------------------------------- videos

    def write_video(self, kind, index, frames):
        rel_dir = Path(kind) / f"k{index:02d}"
        (self.dir / rel_dir).mkdir(parents=True, exist_ok=True)
        rels = []
        for j, frame in enumerate(frames):
            rel = rel_dir / f"frame_{j:03d}.png"
            write_png(frame, self.dir / rel)
            self._register(rel)
            rels.append(str(rel))
        videos = self.manifest.setdefault(kind, {})
        videos[str(index)] = rels

    def read_video(self, kind, index):
        rels = self.manifest[kind][str(index)]
        return [read_png(self.dir / rel) for rel in rels]

    def write_masks(self, index, masks):
        rel_dir = Path("masks") / f"k{index:02d}"
        (self.dir / rel_dir).mkdir(parents=True, exist_ok=True)
        rels = []
        for j, mask in enumerate(masks):
            rel = rel_dir / f"frame_{j:03d}.png"
            write_mask_png(mask, self.dir / rel)
            self._register(rel)
            rels.append(str(rel))
        self.manifest.setdefault("masks", {})[str(index)] = rels

    def read_masks(self, index):
        return [read_mask_png(self.dir / rel) for rel in self.manifest["masks"][str(index)]]

    # --------------------------------------------------------------- scene

    def write_scene(self, scene: Scene4D, compress=False):
        self.write_array("splats", splats_to_records(scene.model), compress)
        hex_cfg = scene.field.config
        self.manifest["hexplane"] = {
            "spatial_resolutions": list(hex_cfg.spatial_resolutions),
            "time_resolutions": list(hex_cfg.time_resolutions),
            "n_features": hex_cfg.n_features,
        }
        lo, hi = scene.field.bbox
        self.manifest["field_bbox"] = {"lo": lo.tolist(), "hi": hi.tolist()}
        for lv, level in enumerate(scene.field.grids):
            for pl, grid in enumerate(level):
                self.write_array(f"hexplane_{lv}_{pl}", grid, compress)
        for name, arr in scene.decoder.params.items():
            self.write_array(f"decoder_{name}", arr, compress)
        self.write_array("embeddings", scene.embeddings, compress)

    def read_scene(self) -> Scene4D:
        model = records_to_splats(self.read_array("splats"))
        h = self.manifest["hexplane"]
        cfg = HexPlaneConfig(
            spatial_resolutions=tuple(h["spatial_resolutions"]),
            time_resolutions=tuple(h["time_resolutions"]),
            n_features=int(h["n_features"]),
        )
        grids = [
            [self.read_array(f"hexplane_{lv}_{pl}") for pl in range(6)]
            for lv in range(cfg.levels)
        ]
        field = HexPlaneField(cfg, grids)
        bb = self.manifest["field_bbox"]
        attach_bbox(field, np.asarray(bb["lo"]), np.asarray(bb["hi"]))
        params = {}
        for name in ("w1", "b1", "w2", "b2", "w_dx", "b_dx", "w_dr", "b_dr",
                     "w_ds", "b_ds", "g_dx", "g_dr", "g_ds"):
            params[name] = self.read_array(f"decoder_{name}")
        decoder = DeformationDecoder(params)
        embeddings = np.atleast_2d(self.read_array("embeddings"))
        scene = Scene4D(model, field, decoder, embeddings)
        scene.rebuild_edges()
        return scene

    # ---------------------------------------------------------------- misc

    def mark_stage(self, stage, info):
        self.manifest["stages"][stage] = info

    def stage_info(self, stage):
        return self.manifest.get("stages", {}).get(stage)


def splats_to_records(model: SplatModel):
    """(N,59) float rows: pos 3, unit quat 4, linear scale 3, opacity 1, SH 48."""
    from sceneforge.splats import quat as quat_ops

    unit, _ = quat_ops.normalize(model.rotations)
    return np.hstack([
        model.positions,
        unit,
        np.exp(model.log_scales),
        model.opacities[:, None],
        model.sh.reshape(len(model), 48),
    ])


def records_to_splats(records) -> SplatModel:
    records = np.asarray(records, dtype=np.float64)
    if records.ndim != 2 or records.shape[1] != SPLAT_RECORD_FLOATS:
        raise BundleError(f"splat records must be (N,{SPLAT_RECORD_FLOATS})")
    op = np.clip(records[:, 10], 1e-7, 1.0 - 1e-7)
    return SplatModel(
        positions=records[:, 0:3].copy(),
        rotations=records[:, 3:7].copy(),
        log_scales=np.log(np.maximum(records[:, 7:10], 1e-12)),
        opacity_logits=logit(op),
        sh=records[:, 11:].reshape(-1, 16, 3).copy(),
    )


# ------------------------------------------------------------- viewer pack


def export_viewer_pack(scene: Scene4D, frame_times, out_dir, mode="baked"):
    """Viewer pack: either per-time baked splat snapshots or the live
    canonical + field + decoder + global embedding set."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "mode": mode,
        "times": [float(t) for t in frame_times],
        "splat_count": len(scene.model),
        "record_floats": SPLAT_RECORD_FLOATS,
        "files": {},
    }
    if mode == "baked":
        emb = scene.global_embedding()
        for j, t in enumerate(frame_times):
            pos, unit, logs = scene.deformed_state(float(t), emb)
            snap = SplatModel(pos, unit, logs, scene.model.opacity_logits, scene.model.sh)
            rel = f"baked_{j:03d}.bin"
            with open(out / rel, "wb") as fh:
                fh.write(pack_tensor(splats_to_records(snap)))
            meta["files"][f"time_{j}"] = rel
    elif mode == "live":
        with open(out / "canonical.bin", "wb") as fh:
            fh.write(pack_tensor(splats_to_records(scene.model)))
        meta["files"]["canonical"] = "canonical.bin"
        cfg = scene.field.config
        meta["hexplane"] = {
            "spatial_resolutions": list(cfg.spatial_resolutions),
            "time_resolutions": list(cfg.time_resolutions),
            "n_features": cfg.n_features,
        }
        lo, hi = scene.field.bbox
        meta["field_bbox"] = {"lo": lo.tolist(), "hi": hi.tolist()}
        for lv, level in enumerate(scene.field.grids):
            for pl, grid in enumerate(level):
                rel = f"hexplane_{lv}_{pl}.bin"
                with open(out / rel, "wb") as fh:
                    fh.write(pack_tensor(grid))
                meta["files"][f"hexplane_{lv}_{pl}"] = rel
        for name, arr in scene.decoder.params.items():
            rel = f"decoder_{name}.bin"
            with open(out / rel, "wb") as fh:
                fh.write(pack_tensor(arr))
            meta["files"][f"decoder_{name}"] = rel
        with open(out / "embedding.bin", "wb") as fh:
            fh.write(pack_tensor(scene.global_embedding()))
        meta["files"]["embedding"] = "embedding.bin"
    else:
        raise BundleError(f"unknown viewer pack mode {mode!r}")
    with open(out / "pack.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return out / "pack.json"
