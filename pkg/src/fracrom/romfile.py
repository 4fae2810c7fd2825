"""Binary container for :class:`~fracrom.rom.RomArtifact`.

Layout (all integers little-endian)::

    magic      6 bytes   b"FROM1\\0"
    version    u32       1
    payload:
      meta_len u64, meta  UTF-8 JSON (sorted keys, compact)
      arrays in order V, A_hat_1..A_hat_na, M_hat, g_hat_1..g_hat_ng, each as
        nrows u64, ncols u64, nrows*ncols f64 in column-major order
    crc32      u32       zlib.crc32 of the payload

Vectors are stored with ``ncols = 1``.
"""
import json
import struct
import zlib

import numpy as np

from .rom import RomArtifact

__all__ = ["MAGIC", "VERSION", "RomFileError", "dumps", "loads", "write_rom", "read_rom"]

MAGIC = b"FROM1\x00"
VERSION = 1


class RomFileError(ValueError):
    pass


def _pack_array(a):
    a = np.asarray(a, dtype="<f8")
    if a.ndim == 1:
        a = a[:, None]
    head = struct.pack("<QQ", a.shape[0], a.shape[1])
    return head + a.tobytes(order="F")


def dumps(rom):
    meta = dict(rom.meta)
    meta["n_a"] = len(rom.A_hat)
    meta["n_g"] = len(rom.g_hat)
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [struct.pack("<Q", len(meta_bytes)), meta_bytes, _pack_array(rom.V)]
    parts += [_pack_array(A) for A in rom.A_hat]
    parts.append(_pack_array(rom.M_hat))
    parts += [_pack_array(g) for g in rom.g_hat]
    payload = b"".join(parts)
    return MAGIC + struct.pack("<I", VERSION) + payload + struct.pack("<I", zlib.crc32(payload))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise RomFileError("truncated ROM file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def array(self, vector=False):
        nrows, ncols = struct.unpack("<QQ", self.take(16))
        data = np.frombuffer(self.take(8 * nrows * ncols), dtype="<f8")
        a = data.reshape((nrows, ncols), order="F").astype(np.float64)
        if vector:
            if ncols != 1:
                raise RomFileError(f"expected a vector, found {nrows}x{ncols} array")
            return a[:, 0].copy()
        return a


def loads(buf):
    buf = bytes(buf)
    if buf[:6] != MAGIC:
        raise RomFileError("not a ROM file (bad magic)")
    if len(buf) < 14:
        raise RomFileError("truncated ROM file")
    (version,) = struct.unpack("<I", buf[6:10])
    if version != VERSION:
        raise RomFileError(f"unsupported ROM file version {version}")
    payload, (crc,) = buf[10:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(payload) != crc:
        raise RomFileError("checksum mismatch; ROM file is corrupt")
    r = _Reader(payload)
    (meta_len,) = struct.unpack("<Q", r.take(8))
    meta = json.loads(r.take(meta_len).decode("utf-8"))
    V = r.array()
    A_hat = [r.array() for _ in range(meta["n_a"])]
    M_hat = r.array()
    g_hat = [r.array(vector=True) for _ in range(meta["n_g"])]
    if r.pos != len(payload):
        raise RomFileError("trailing bytes after last array")
    return RomArtifact(V, A_hat, M_hat, g_hat, meta)


def write_rom(path, rom):
    with open(path, "wb") as fh:
        fh.write(dumps(rom))


def read_rom(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
