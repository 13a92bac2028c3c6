"""Image, depth, and point-cloud file formats.

PNG (8-bit via Pillow) for images and masks, PFM (little-endian float32)
for depth maps, binary little-endian PLY for point clouds.
"""

import struct

import numpy as np
from PIL import Image

from sceneforge.errors import ContractViolation
from sceneforge.geometry import DepthMap, ImagePlane, PointCloud, RegionMask


def write_png(image: ImagePlane, path) -> None:
    arr = np.clip(np.rint(image.rgb * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def read_png(path) -> ImagePlane:
    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
    return ImagePlane(arr)


def write_mask_png(mask: RegionMask, path) -> None:
    arr = np.clip(np.rint(mask.weights * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_mask_png(path) -> RegionMask:
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float64) / 255.0
    return RegionMask(arr)


def write_pfm(depth: DepthMap, path) -> None:
    """Grayscale PFM, little-endian float32, invalid pixels stored as 0."""
    values = np.where(depth.validity, depth.values, 0.0).astype("<f4")
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")  # negative scale flags little-endian
        fh.write(np.flipud(values).tobytes())  # PFM rows are bottom-up


def read_pfm(path) -> DepthMap:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"Pf":
            raise ContractViolation(f"{path}: not a grayscale PFM")
        w, h = (int(tok) for tok in fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(w * h * 4), dtype=dtype).reshape(h, w)
    values = np.flipud(data).astype(np.float64)
    validity = values > 0.0
    return DepthMap(np.where(validity, values, 1.0), validity)


_PLY_HEADER = """ply
format binary_little_endian 1.0
element vertex {count}
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
property int provenance
end_header
"""


def write_ply(cloud: PointCloud, path) -> None:
    rec = np.dtype(
        [("xyz", "<f4", 3), ("rgb", "u1", 3), ("prov", "<i4")]
    )
    data = np.empty(len(cloud), dtype=rec)
    data["xyz"] = cloud.positions.astype("<f4")
    data["rgb"] = np.clip(np.rint(cloud.colors * 255.0), 0, 255).astype("u1")
    data["prov"] = cloud.provenance.astype("<i4")
    with open(path, "wb") as fh:
        fh.write(_PLY_HEADER.format(count=len(cloud)).encode("ascii"))
        fh.write(data.tobytes())


def read_ply(path) -> PointCloud:
    with open(path, "rb") as fh:
        header = []
        while True:
            line = fh.readline().decode("ascii").strip()
            header.append(line)
            if line == "end_header":
                break
        if "format binary_little_endian 1.0" not in header:
            raise ContractViolation(f"{path}: expected binary little-endian PLY")
        count = next(
            int(line.split()[-1]) for line in header if line.startswith("element vertex")
        )
        rec = np.dtype([("xyz", "<f4", 3), ("rgb", "u1", 3), ("prov", "<i4")])
        data = np.frombuffer(fh.read(count * rec.itemsize), dtype=rec)
    return PointCloud(
        data["xyz"].astype(np.float64),
        data["rgb"].astype(np.float64) / 255.0,
        data["prov"].astype(np.int64),
    )


def pack_tensor(arr: np.ndarray) -> bytes:
    """Wire/file tensor: u32 rank, u32 dims, little-endian float32 payload."""
    arr = np.ascontiguousarray(arr, dtype="<f4")
    head = struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


def unpack_tensor(buf: bytes, offset: int = 0):
    """Inverse of pack_tensor; returns (array, next_offset)."""
    (rank,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    dims = struct.unpack_from(f"<{rank}I", buf, offset)
    offset += 4 * rank
    count = int(np.prod(dims)) if rank else 1
    arr = np.frombuffer(buf, dtype="<f4", count=count, offset=offset)
    offset += count * 4
    return arr.reshape(dims).astype(np.float64), offset
