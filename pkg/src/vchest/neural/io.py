"""Binary model files.

Layout (all integers little-endian)::

    magic      4 bytes  b"VCHM"
    version    u16      FORMAT_VERSION
    kind       u8       1 = LSTM, 2 = MLP
    reserved   u8       0
    meta_len   u32      length of the UTF-8 JSON metadata that follows
    meta       bytes    JSON, keys sorted; holds activations and training info
    n_blocks   u32
    per block: ndim u8, then ndim x u32 dims, then float64 '<f8' data, row-major
    crc32      u32      over every preceding byte

LSTM blocks are W (4, P, K_in), U (4, P, P), b (4, P) followed by the head
weights then the head biases.  MLP files hold weights then biases.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from vchest.neural.lstm import LstmParams
from vchest.neural.mlp import MlpParams

MAGIC = b"VCHM"
FORMAT_VERSION = 1
KIND_LSTM = 1
KIND_MLP = 2


class ModelFormatError(ValueError):
    """Raised for corrupt or truncated model files."""


class ModelVersionError(ModelFormatError):
    pass


def _blocks(model):
    if isinstance(model, LstmParams):
        return KIND_LSTM, model.arrays(), list(model.head.activations)
    if isinstance(model, MlpParams):
        return KIND_MLP, model.arrays(), list(model.activations)
    raise TypeError(f"cannot serialise {type(model).__name__}")


def dumps_model(model, meta: dict | None = None) -> bytes:
    kind, arrays, acts = _blocks(model)
    meta = dict(meta or {})
    meta["activations"] = acts
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    parts = [MAGIC, struct.pack("<HBBI", FORMAT_VERSION, kind, 0, len(meta_bytes)), meta_bytes,
             struct.pack("<I", len(arrays))]
    for a in arrays:
        a = np.ascontiguousarray(a, dtype="<f8")
        parts.append(struct.pack("<B", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(a.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_model(path, model, meta: dict | None = None):
    with open(path, "wb") as fh:
        fh.write(dumps_model(model, meta))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise ModelFormatError("model file is truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads_model(buf: bytes):
    """Parse model bytes; returns ``(model, meta)``."""
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    if len(buf) < 20:
        raise ModelFormatError("model file is truncated")
    r = _Reader(buf[:-4])
    r.take(4)
    version, kind, _, meta_len = r.unpack("<HBBI")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"model format version {version}, expected {FORMAT_VERSION}")
    (crc,) = struct.unpack("<I", buf[-4:])
    if zlib.crc32(buf[:-4]) & 0xFFFFFFFF != crc:
        raise ModelFormatError("model file is corrupt or truncated (checksum mismatch)")
    try:
        meta = json.loads(r.take(meta_len).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"bad metadata block: {exc}") from None
    (n_blocks,) = r.unpack("<I")
    arrays = []
    for _ in range(n_blocks):
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").astype(float).reshape(shape)
        arrays.append(data)
    if r.pos != len(r.buf):
        raise ModelFormatError("trailing bytes after the last block")
    acts = meta.get("activations", [])
    try:
        if kind == KIND_LSTM:
            n_head = (len(arrays) - 3) // 2
            head = MlpParams(arrays[3:3 + n_head], arrays[3 + n_head:], acts)
            model = LstmParams(arrays[0], arrays[1], arrays[2], head)
        elif kind == KIND_MLP:
            n = len(arrays) // 2
            model = MlpParams(arrays[:n], arrays[n:], acts)
        else:
            raise ModelFormatError(f"unknown model kind {kind}")
    except ValueError as exc:
        raise ModelFormatError(f"inconsistent model blocks: {exc}") from None
    for a in model.arrays():
        if not np.all(np.isfinite(a)):
            raise ModelFormatError("model holds non-finite weights")
    return model, meta


def load_model(path):
    with open(path, "rb") as fh:
        return loads_model(fh.read())
