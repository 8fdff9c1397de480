"""File formats: SSRF f32 rasters, 16-bit grayscale PNG, label masks.

SSRF layout: 4-byte magic "SSRF", little-endian u32 height, u32 width,
then height*width little-endian f32 values row-major. Values are stored
as f32; everything computes at f64 internally.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidImage

MAGIC = b"SSRF"

MASK_CLUTTER = 0
MASK_SHADOW = 128
MASK_TARGET = 255


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Write-temp-then-rename so partial files never appear."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ssrf(path: str | Path, values) -> None:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidImage(f"raster must be 2-D, got shape {arr.shape}")
    header = MAGIC + struct.pack("<II", arr.shape[0], arr.shape[1])
    payload = arr.astype("<f4").tobytes(order="C")
    atomic_write_bytes(path, header + payload)


def read_ssrf(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != MAGIC:
        raise InvalidImage(f"{path}: not an SSRF raster")
    height, width = struct.unpack("<II", data[4:12])
    if height == 0 or width == 0:
        raise InvalidImage(f"{path}: zero-sized raster")
    expected = 12 + 4 * height * width
    if len(data) != expected:
        raise InvalidImage(
            f"{path}: length {len(data)} disagrees with header (expected {expected})"
        )
    arr = np.frombuffer(data, dtype="<f4", offset=12).reshape(height, width)
    return arr.astype(np.float64)


def write_png16(path: str | Path, values) -> None:
    """Intensity v maps to round(v * 65535)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidImage(f"image must be 2-D, got shape {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
        raise InvalidImage("png16 export requires values in [0, 1]")
    q = np.round(arr * 65535.0).astype(np.uint16)
    img = Image.fromarray(q)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        img.save(tmp, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_png16(path: str | Path) -> np.ndarray:
    try:
        img = Image.open(path)
        arr = np.asarray(img)
    except Exception as exc:
        raise InvalidImage(f"{path}: cannot read PNG ({exc})") from exc
    if arr.ndim != 2:
        raise InvalidImage(f"{path}: expected single-channel grayscale PNG")
    return arr.astype(np.float64) / 65535.0


def read_raster(path: str | Path) -> np.ndarray:
    """Dispatch on extension: .ssrf or .png."""
    path = Path(path)
    if path.suffix == ".ssrf":
        return read_ssrf(path)
    if path.suffix == ".png":
        return read_png16(path)
    raise InvalidImage(f"{path}: unsupported raster format")


def write_raster(path: str | Path, values, fmt: str) -> None:
    if fmt == "ssrf":
        write_ssrf(path, values)
    elif fmt == "png16":
        write_png16(path, values)
    else:
        raise InvalidImage(f"unsupported output format: {fmt}")


def write_mask(path: str | Path, target, shadow, clutter) -> None:
    labels = np.full(np.asarray(target).shape, MASK_CLUTTER, dtype=np.uint8)
    labels[np.asarray(shadow, dtype=bool)] = MASK_SHADOW
    labels[np.asarray(target, dtype=bool)] = MASK_TARGET
    img = Image.fromarray(labels, mode="L")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        img.save(tmp, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_mask(path: str | Path):
    """Read an 8-bit label mask; values must be 0/128/255.

    Returns (target, shadow, clutter) boolean arrays.
    """
    try:
        arr = np.asarray(Image.open(path))
    except Exception as exc:
        raise InvalidImage(f"{path}: cannot read mask ({exc})") from exc
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise InvalidImage(f"{path}: mask must be 8-bit single-channel")
    valid = np.isin(arr, (MASK_CLUTTER, MASK_SHADOW, MASK_TARGET))
    if not valid.all():
        bad = sorted(set(np.unique(arr)) - {MASK_CLUTTER, MASK_SHADOW, MASK_TARGET})
        raise InvalidImage(f"{path}: mask holds invalid label values {bad}")
    return arr == MASK_TARGET, arr == MASK_SHADOW, arr == MASK_CLUTTER
