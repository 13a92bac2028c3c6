"""Generate viewer test fixtures from the engine.

Writes three packs (baked, live, zero-deformation) plus engine-rendered
reference images and camera metadata under frontend/test/fixtures/.

Run from the repository root:  python frontend/scripts/make_fixtures.py
"""

import json
from pathlib import Path

import numpy as np

from sceneforge.bundle import export_viewer_pack
from sceneforge.formats import pack_tensor
from sceneforge.geometry import CameraIntrinsics, CameraPose, PointCloud, quat_from_axis_angle
from sceneforge.splats.hexplane import HexPlaneConfig
from sceneforge.splats.model import init_from_cloud
from sceneforge.splats.scene import Scene4D

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures"
TIMES = [0.0, 0.4, 0.8]


def make_scene(rng, deformed=True):
    n = 60
    cloud = PointCloud(
        np.column_stack([rng.uniform(-1, 1, n), rng.uniform(-0.8, 0.8, n),
                         rng.uniform(2.0, 3.5, n)]),
        rng.random((n, 3)),
    )
    model = init_from_cloud(cloud, rng=rng)
    cfg = HexPlaneConfig(spatial_resolutions=(5, 7), time_resolutions=(4, 6), n_features=4)
    scene = Scene4D.create(model, num_videos=2, embed_dim=6, hex_config=cfg, rng=rng)
    if deformed:
        scene.decoder.randomize_heads(rng, scale=0.05)
        scene.embeddings[:] = 0.4 * rng.standard_normal(scene.embeddings.shape)
        # visible view-dependent color so SH parity is exercised
        scene.model.sh[:, 1:4, :] = 0.15 * rng.standard_normal((n, 3, 3))
    return scene


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(2024)
    intr = CameraIntrinsics(fx=40.0, fy=42.0, cx=15.5, cy=11.5, width=32, height=24)
    poses = [
        CameraPose(),
        CameraPose(tuple(quat_from_axis_angle((0, 1, 0), 0.15)), (0.1, -0.05, 0.05)),
        CameraPose(tuple(quat_from_axis_angle((1, 0, 0), -0.1)), (-0.08, 0.04, 0.0)),
    ]

    scene = make_scene(rng, deformed=True)
    export_viewer_pack(scene, TIMES, OUT / "pack_baked", mode="baked")
    export_viewer_pack(scene, TIMES, OUT / "pack_live", mode="live")
    zero = make_scene(np.random.default_rng(7), deformed=False)
    export_viewer_pack(zero, [0.0], OUT / "pack_zero", mode="baked")

    cameras = {
        "intrinsics": {"fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
                       "width": intr.width, "height": intr.height},
        "poses": [{"rotation": list(p.rotation), "translation": list(p.translation)}
                  for p in poses],
        "times": TIMES,
    }
    (OUT / "cameras.json").write_text(json.dumps(cameras, indent=1))

    emb = scene.global_embedding()
    refs = {}
    for pi, pose in enumerate(poses):
        for ti, t in enumerate(TIMES):
            rgb, _, _ = scene.render(intr, pose, t=t, embedding=emb)
            name = f"ref_baked_p{pi}_t{ti}.bin"
            (OUT / name).write_bytes(pack_tensor(rgb))
            refs[f"p{pi}_t{ti}"] = name
    rgb, _, _ = zero.render(intr, poses[0])
    (OUT / "ref_zero_canonical.bin").write_bytes(pack_tensor(rgb))
    refs["zero_canonical"] = "ref_zero_canonical.bin"
    (OUT / "references.json").write_text(json.dumps(refs, indent=1))
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
