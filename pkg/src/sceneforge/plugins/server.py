"""Socket server hosting a PluginSet behind the wire protocol.

One thread per connection; each request is answered synchronously.
Synthetic plugins are pure, so concurrent independent requests are safe.
"""

import dataclasses
import socket
import threading

import numpy as np

from sceneforge.geometry import CameraIntrinsics, CameraPose, DepthMap, ImagePlane, RegionMask
from sceneforge.plugins import wire
from sceneforge.plugins.base import (
    ConditioningPayload,
    InpaintRequest,
    LatentVideo,
    PluginSet,
    ViewContext,
)


def _view_from(obj):
    if "view_intr" not in obj:
        return None
    vi = obj["view_intr"]
    intr = CameraIntrinsics(fx=vi[0], fy=vi[1], cx=vi[2], cy=vi[3],
                            width=int(vi[4]), height=int(vi[5]))
    vp = obj["view_pose"]
    q = np.asarray(vp[:4])
    q = q / np.linalg.norm(q)  # wire tensors are f32; renormalize
    return ViewContext(intr, CameraPose(tuple(q), tuple(vp[4:7])))


def view_fields(view: ViewContext):
    if view is None:
        return {}
    i = view.intr
    return {
        "view_intr": np.array([i.fx, i.fy, i.cx, i.cy, i.width, i.height]),
        "view_pose": np.array(view.pose.rotation + view.pose.translation),
    }


def payload_to_wire(payload: ConditioningPayload) -> dict:
    out = {}
    for key, value in payload.data.items():
        if key.startswith("_"):
            continue  # caches never cross the wire
        if isinstance(value, np.ndarray):
            out[f"t_{key}"] = value
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], float):
            out[f"t_{key}"] = np.asarray(value)
        else:
            out[f"j_{key}"] = value
    return out


def payload_from_wire(obj: dict) -> ConditioningPayload:
    data = {}
    for key, value in obj.items():
        if key.startswith("t_"):
            data[key[2:]] = value
        elif key.startswith("j_"):
            data[key[2:]] = value
    return ConditioningPayload(data)


class PluginServer:
    def __init__(self, plugins: PluginSet, host="127.0.0.1", port=0):
        self.plugins = plugins
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)
        self.address = self._sock.getsockname()
        self._stop = threading.Event()
        self._thread = None

    def start(self):
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._stop.set()
        self._sock.close()

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve, args=(conn,), daemon=True).start()

    def _serve(self, conn):
        with conn:
            while True:
                try:
                    msg_type, obj = wire.recv_message(conn)
                except Exception:
                    return
                try:
                    reply_type, reply = self._dispatch(msg_type, obj)
                except Exception as exc:  # surfaced client side as PluginFailure
                    reply_type = wire.MSG_ERROR
                    reply = {"stage": _stage_name(msg_type), "message": str(exc)}
                try:
                    wire.send_message(conn, reply_type, reply)
                except Exception:
                    return

    def _dispatch(self, msg_type, obj):
        p = self.plugins
        if msg_type == wire.MSG_MANIFEST_REQ:
            return wire.MSG_MANIFEST_RES, dataclasses.asdict(p.denoiser.manifest)
        if msg_type == wire.MSG_INPAINT_REQ:
            req = InpaintRequest(
                ImagePlane(obj["image"]), RegionMask(obj["mask"]), obj.get("prompt", "")
            )
            out = p.inpainter.fill(req, int(obj.get("seed", 0)), _view_from(obj))
            return wire.MSG_INPAINT_RES, {"image": out.rgb}
        if msg_type == wire.MSG_DEPTH_REQ:
            out = p.depth.estimate(ImagePlane(obj["image"]), _view_from(obj))
            return wire.MSG_DEPTH_RES, {
                "values": out.values, "validity": out.validity.astype(np.float64)
            }
        if msg_type == wire.MSG_DENOISE_REQ:
            z = LatentVideo(obj["latent"], int(obj["schedule_step"]))
            condition = payload_from_wire(obj)
            out = p.denoiser.step(z, int(obj["step"]), condition)
            return wire.MSG_DENOISE_RES, {
                "latent": out.frames, "schedule_step": out.schedule_step
            }
        if msg_type == wire.MSG_ENCODE_REQ:
            frames = [ImagePlane(obj[f"frame_{i}"]) for i in range(int(obj["count"]))]
            out = p.codec.encode(frames)
            return wire.MSG_ENCODE_RES, {"latent": out.frames, "schedule_step": out.schedule_step}
        if msg_type == wire.MSG_DECODE_REQ:
            frames = p.codec.decode(LatentVideo(obj["latent"], int(obj["schedule_step"])))
            reply = {"count": len(frames)}
            for i, f in enumerate(frames):
                reply[f"frame_{i}"] = f.rgb
            return wire.MSG_DECODE_RES, reply
        if msg_type == wire.MSG_INTERP_REQ:
            frames = p.interpolator.interpolate(
                ImagePlane(obj["a"]), ImagePlane(obj["b"]), int(obj["count"])
            )
            reply = {"count": len(frames)}
            for i, f in enumerate(frames):
                reply[f"frame_{i}"] = f.rgb
            return wire.MSG_INTERP_RES, reply
        if msg_type == wire.MSG_CONDITION_REQ:
            extras = payload_from_wire(obj).data
            image = ImagePlane(extras.pop("condition_image"))
            payload = p.denoiser.make_condition(image, extras)
            return wire.MSG_CONDITION_RES, payload_to_wire(payload)
        raise ValueError(f"unknown message type {msg_type}")


def _stage_name(msg_type):
    return {
        wire.MSG_INPAINT_REQ: "inpaint",
        wire.MSG_DEPTH_REQ: "depth",
        wire.MSG_DENOISE_REQ: "denoise",
        wire.MSG_ENCODE_REQ: "encode",
        wire.MSG_DECODE_REQ: "decode",
        wire.MSG_INTERP_REQ: "interpolate",
        wire.MSG_CONDITION_REQ: "condition",
    }.get(msg_type, "plugin")
