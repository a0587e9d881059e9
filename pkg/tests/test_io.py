import struct

import numpy as np
import pytest

from stylesched.io import (array_checksum, read_ppm, read_tlat, write_ppm,
                           write_tlat)


def test_tlat_round_trip(tmp_path):
    arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4) / 7.0
    path = tmp_path / "latent.tlat"
    write_tlat(path, arr)
    back = read_tlat(path)
    assert back.shape == (2, 3, 4)
    assert np.array_equal(back, arr)


def test_tlat_exact_bytes(tmp_path):
    arr = np.array([[1.0, 2.0]], dtype=np.float32)
    path = tmp_path / "tiny.tlat"
    write_tlat(path, arr)
    data = path.read_bytes()
    expected = b"TLAT" + struct.pack("<I", 2) + struct.pack("<2I", 1, 2)
    expected += struct.pack("<2f", 1.0, 2.0)
    assert data == expected


def test_tlat_rank2(tmp_path):
    arr = np.ones((5, 6), dtype=np.float32)
    path = tmp_path / "map.tlat"
    write_tlat(path, arr)
    assert read_tlat(path).shape == (5, 6)


def test_tlat_bad_magic(tmp_path):
    path = tmp_path / "bad.tlat"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        read_tlat(path)


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = (rng.integers(0, 256, size=(8, 10, 3)) / 255.0).astype(np.float32)
    path = tmp_path / "img.ppm"
    write_ppm(path, img)
    back = read_ppm(path)
    assert back.shape == (8, 10, 3)
    assert np.allclose(back, img, atol=1e-6)


def test_ppm_header(tmp_path):
    img = np.zeros((4, 6, 3), dtype=np.float32)
    path = tmp_path / "img.ppm"
    write_ppm(path, img)
    assert path.read_bytes().startswith(b"P6\n6 4\n255\n")


def test_ppm_rejects_bad_shape(tmp_path):
    with pytest.raises(ValueError):
        write_ppm(tmp_path / "x.ppm", np.zeros((4, 4), dtype=np.float32))


def test_checksum_sensitivity():
    a = np.zeros((3, 3), dtype=np.float32)
    b = a.copy()
    b[0, 0] = 1e-7
    assert array_checksum(a) != array_checksum(b)
    assert array_checksum(a) == array_checksum(np.zeros((3, 3), dtype=np.float32))
