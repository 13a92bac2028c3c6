"""Socket-backed PluginSet: mirrors the in-process interfaces over the wire."""

import socket
import threading

import numpy as np

from sceneforge.errors import PluginFailure
from sceneforge.geometry import DepthMap, ImagePlane
from sceneforge.plugins import wire
from sceneforge.plugins.base import (
    ConditioningPayload,
    Denoiser,
    DepthEstimator,
    FrameInterpolator,
    Inpainter,
    LatentCodec,
    LatentVideo,
    PluginManifest,
    PluginSet,
)
from sceneforge.plugins.server import payload_from_wire, payload_to_wire, view_fields


class _Connection:
    """Single shared socket; requests are serialized by a lock."""

    def __init__(self, host, port):
        self.sock = socket.create_connection((host, port))
        self.lock = threading.Lock()

    def call(self, msg_type, obj, expect):
        with self.lock:
            wire.send_message(self.sock, msg_type, obj)
            reply_type, reply = wire.recv_message(self.sock)
        if reply_type == wire.MSG_ERROR:
            raise PluginFailure(reply.get("stage", "plugin"), reply.get("message", ""))
        if reply_type != expect:
            raise PluginFailure("wire", f"unexpected reply type {reply_type}")
        return reply


class RemoteInpainter(Inpainter):
    def __init__(self, conn):
        self.conn = conn

    def fill(self, request, seed, view=None):
        obj = {
            "image": request.image.rgb,
            "mask": request.inpaint_mask.weights,
            "prompt": request.prompt,
            "seed": int(seed),
        }
        obj.update(view_fields(view))
        reply = self.conn.call(wire.MSG_INPAINT_REQ, obj, wire.MSG_INPAINT_RES)
        return ImagePlane(reply["image"])


class RemoteDepthEstimator(DepthEstimator):
    def __init__(self, conn):
        self.conn = conn

    def estimate(self, image, view=None):
        obj = {"image": image.rgb}
        obj.update(view_fields(view))
        reply = self.conn.call(wire.MSG_DEPTH_REQ, obj, wire.MSG_DEPTH_RES)
        return DepthMap(reply["values"], reply["validity"] > 0.5)


class RemoteDenoiser(Denoiser):
    def __init__(self, conn, manifest):
        self.conn = conn
        self.manifest = manifest

    def make_condition(self, image, extras):
        payload = payload_to_wire(ConditioningPayload(dict(extras)))
        payload["t_condition_image"] = image.rgb
        reply = self.conn.call(wire.MSG_CONDITION_REQ, payload, wire.MSG_CONDITION_RES)
        return payload_from_wire(reply)

    def step(self, z, step, condition):
        self.manifest.check_step(step)
        obj = payload_to_wire(condition)
        obj["latent"] = z.frames
        obj["schedule_step"] = z.schedule_step
        obj["step"] = int(step)
        reply = self.conn.call(wire.MSG_DENOISE_REQ, obj, wire.MSG_DENOISE_RES)
        return LatentVideo(reply["latent"], int(reply["schedule_step"]))


class RemoteCodec(LatentCodec):
    def __init__(self, conn):
        self.conn = conn

    def encode(self, video):
        obj = {"count": len(video)}
        for i, f in enumerate(video):
            obj[f"frame_{i}"] = f.rgb
        reply = self.conn.call(wire.MSG_ENCODE_REQ, obj, wire.MSG_ENCODE_RES)
        return LatentVideo(reply["latent"], int(reply["schedule_step"]))

    def decode(self, z):
        obj = {"latent": z.frames, "schedule_step": z.schedule_step}
        reply = self.conn.call(wire.MSG_DECODE_REQ, obj, wire.MSG_DECODE_RES)
        return [ImagePlane(reply[f"frame_{i}"]) for i in range(int(reply["count"]))]


class RemoteInterpolator(FrameInterpolator):
    def __init__(self, conn):
        self.conn = conn

    def interpolate(self, a, b, count):
        obj = {"a": a.rgb, "b": b.rgb, "count": int(count)}
        reply = self.conn.call(wire.MSG_INTERP_REQ, obj, wire.MSG_INTERP_RES)
        return [ImagePlane(reply[f"frame_{i}"]) for i in range(int(reply["count"]))]


def connect(address: str) -> PluginSet:
    """address: 'host:port' (FORGE_PLUGIN_SOCKET format)."""
    host, _, port = address.rpartition(":")
    conn = _Connection(host or "127.0.0.1", int(port))
    reply = conn.call(wire.MSG_MANIFEST_REQ, {}, wire.MSG_MANIFEST_RES)
    manifest = PluginManifest(**{
        k: reply[k] for k in (
            "capability", "latent_channels", "latent_height", "latent_width",
            "frames", "schedule_steps", "noise_sigma_max", "single_flight",
        )
    })
    return PluginSet(
        inpainter=RemoteInpainter(conn),
        depth=RemoteDepthEstimator(conn),
        denoiser=RemoteDenoiser(conn, manifest),
        codec=RemoteCodec(conn),
        interpolator=RemoteInterpolator(conn),
    )
