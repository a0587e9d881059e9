"""File formats: TLAT latent tensors, binary PPM images, checksums.

TLAT layout: magic ``b"TLAT"``, u32-LE rank, one u32-LE per dimension, then
the float32-LE payload in row-major order.  Images travel as binary PPM
(P6, maxval 255); in memory an image is a float32 ``(H, W, 3)`` array in
[0, 1] and a latent is a float32 ``(C, H, W)`` array.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

TLAT_MAGIC = b"TLAT"


def write_tlat(path: str | Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = TLAT_MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def read_tlat(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != TLAT_MAGIC:
        raise ValueError(f"{path}: not a TLAT file (bad magic {data[:4]!r})")
    (rank,) = struct.unpack_from("<I", data, 4)
    dims = struct.unpack_from(f"<{rank}I", data, 8)
    offset = 8 + 4 * rank
    count = int(np.prod(dims)) if rank else 1
    payload = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
    if payload.size != count:
        raise ValueError(f"{path}: truncated TLAT payload")
    return payload.reshape(dims).astype(np.float32)


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {image.shape}")
    h, w = image.shape[:2]
    pixels = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + pixels.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (magic {fields[0]!r})")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after header
    raw = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    if raw.size != w * h * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return (raw.reshape(h, w, 3).astype(np.float32)) / 255.0


def array_checksum(array: np.ndarray) -> str:
    """Order-sensitive sha256 over shape and raw float32 bytes."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()


def file_checksum(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
