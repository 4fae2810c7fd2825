import struct
import zlib

import numpy as np
import pytest

from fracrom.rom import RomArtifact, TrainingPlan, offline_train
from fracrom.romfile import MAGIC, RomFileError, dumps, loads, read_rom, write_rom


@pytest.fixture(scope="module")
def rom(gp17):
    return offline_train(TrainingPlan("gp", [[20.0], [120.0]], 8), gp17)[0]


def test_roundtrip_bytes(rom, tmp_path):
    path = tmp_path / "a.from"
    write_rom(path, rom)
    back = read_rom(path)
    assert np.array_equal(back.V, rom.V) and np.array_equal(back.M_hat, rom.M_hat)
    assert all(np.array_equal(a, b) for a, b in zip(back.A_hat, rom.A_hat))
    assert all(np.array_equal(a, b) for a, b in zip(back.g_hat, rom.g_hat))
    assert back.meta["problem"] == "gp" and back.orthonormality_error() <= 1e-10
    write_rom(tmp_path / "b.from", back)
    assert (tmp_path / "b.from").read_bytes() == path.read_bytes()


def test_layout(rom):
    buf = dumps(rom)
    assert buf[:6] == MAGIC
    assert struct.unpack("<I", buf[6:10])[0] == 1
    assert struct.unpack("<I", buf[-4:])[0] == zlib.crc32(buf[10:-4])
    (meta_len,) = struct.unpack("<Q", buf[10:18])
    pos = 18 + meta_len
    nrows, ncols = struct.unpack("<QQ", buf[pos:pos + 16])
    assert (nrows, ncols) == rom.V.shape
    first_col = np.frombuffer(buf[pos + 16:pos + 16 + 8 * nrows], dtype="<f8")
    assert np.array_equal(first_col, rom.V[:, 0])  # column-major


def test_rejects_corruption(rom):
    buf = bytearray(dumps(rom))
    with pytest.raises(RomFileError, match="magic"):
        loads(b"XROM1\0" + bytes(buf[6:]))
    bad = bytearray(buf)
    bad[6:10] = struct.pack("<I", 2)
    with pytest.raises(RomFileError, match="version"):
        loads(bad)
    bad = bytearray(buf)
    bad[len(bad) // 2] ^= 0xFF
    with pytest.raises(RomFileError, match="checksum"):
        loads(bad)
    with pytest.raises(RomFileError):
        loads(buf[:8])


def test_vector_shapes_preserved():
    V = np.eye(3)[:, :2]
    r = RomArtifact(V, [np.eye(2)], np.eye(2), [np.array([1.0, 2.0])], {"problem": "gp", "h": 0.5})
    back = loads(dumps(r))
    assert back.g_hat[0].shape == (2,) and back.meta["n_a"] == 1
