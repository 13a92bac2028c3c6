"""Length-prefixed binary plugin protocol.

Frame: header (u32 message type, u64 payload length) + payload.
Payload: u32 JSON length, UTF-8 JSON object, then the tensors named by the
JSON "__tensors__" list, each packed as u32 rank + u32 dims + little-endian
float32 data. Everything multi-byte is little-endian.
"""

import json
import socket
import struct

import numpy as np

from sceneforge.errors import PluginFailure
from sceneforge.formats import pack_tensor, unpack_tensor

HEADER = struct.Struct("<IQ")

MSG_MANIFEST_REQ = 1
MSG_MANIFEST_RES = 2
MSG_INPAINT_REQ = 3
MSG_INPAINT_RES = 4
MSG_DEPTH_REQ = 5
MSG_DEPTH_RES = 6
MSG_DENOISE_REQ = 7
MSG_DENOISE_RES = 8
MSG_ENCODE_REQ = 9
MSG_ENCODE_RES = 10
MSG_DECODE_REQ = 11
MSG_DECODE_RES = 12
MSG_INTERP_REQ = 13
MSG_INTERP_RES = 14
MSG_CONDITION_REQ = 15
MSG_CONDITION_RES = 16
MSG_ERROR = 17


def encode_payload(obj: dict) -> bytes:
    """Split ndarray values out of a flat dict into the tensor section."""
    plain = {}
    tensors = []
    names = []
    for key, value in obj.items():
        if isinstance(value, np.ndarray):
            names.append(key)
            tensors.append(pack_tensor(value))
        else:
            plain[key] = value
    plain["__tensors__"] = names
    head = json.dumps(plain).encode("utf-8")
    return struct.pack("<I", len(head)) + head + b"".join(tensors)


def decode_payload(buf: bytes) -> dict:
    (jlen,) = struct.unpack_from("<I", buf, 0)
    obj = json.loads(buf[4:4 + jlen].decode("utf-8"))
    names = obj.pop("__tensors__", [])
    offset = 4 + jlen
    for name in names:
        arr, offset = unpack_tensor(buf, offset)
        obj[name] = arr
    return obj


def send_message(sock: socket.socket, msg_type: int, obj: dict) -> None:
    payload = encode_payload(obj)
    sock.sendall(HEADER.pack(msg_type, len(payload)) + payload)


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    while count:
        chunk = sock.recv(min(count, 1 << 20))
        if not chunk:
            raise PluginFailure("wire", "connection closed mid-message")
        chunks.append(chunk)
        count -= len(chunk)
    return b"".join(chunks)


def recv_message(sock: socket.socket):
    head = _recv_exact(sock, HEADER.size)
    msg_type, length = HEADER.unpack(head)
    payload = _recv_exact(sock, length) if length else b""
    return msg_type, decode_payload(payload) if length else {}
