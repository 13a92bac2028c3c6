import numpy as np

from sceneforge import formats
from sceneforge.geometry import DepthMap, ImagePlane, PointCloud, RegionMask


def test_png_round_trip(tmp_path, rng):
    img = ImagePlane(np.round(rng.random((9, 13, 3)) * 255) / 255.0)
    path = tmp_path / "img.png"
    formats.write_png(img, path)
    back = formats.read_png(path)
    np.testing.assert_allclose(back.rgb, img.rgb, atol=1e-9)


def test_mask_png_round_trip(tmp_path, rng):
    mask = RegionMask((rng.random((7, 5)) > 0.5).astype(float))
    path = tmp_path / "mask.png"
    formats.write_mask_png(mask, path)
    np.testing.assert_array_equal(formats.read_mask_png(path).weights, mask.weights)


def test_pfm_round_trip(tmp_path, rng):
    validity = rng.random((6, 8)) > 0.3
    depth = DepthMap(np.where(validity, rng.uniform(0.1, 9.0, (6, 8)), 1.0), validity)
    path = tmp_path / "depth.pfm"
    formats.write_pfm(depth, path)
    back = formats.read_pfm(path)
    np.testing.assert_array_equal(back.validity, depth.validity)
    np.testing.assert_allclose(back.values[validity],
                               depth.values[validity].astype(np.float32))


def test_ply_round_trip(tmp_path, rng):
    cloud = PointCloud(
        rng.standard_normal((20, 3)),
        np.round(rng.random((20, 3)) * 255) / 255.0,
        np.sort(rng.integers(0, 5, 20)),
    )
    path = tmp_path / "cloud.ply"
    formats.write_ply(cloud, path)
    back = formats.read_ply(path)
    np.testing.assert_allclose(back.positions, cloud.positions.astype(np.float32))
    np.testing.assert_allclose(back.colors, cloud.colors, atol=1e-9)
    np.testing.assert_array_equal(back.provenance, cloud.provenance)


def test_tensor_pack_round_trip(rng):
    arr = rng.standard_normal((3, 4, 5)).astype(np.float32)
    back, offset = formats.unpack_tensor(formats.pack_tensor(arr))
    np.testing.assert_array_equal(back, arr)
    assert offset == 4 + 12 + arr.size * 4
