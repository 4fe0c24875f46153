"""Binary PGM (P5) read/write for masks and rasters."""

from __future__ import annotations

import numpy as np


def write_pgm(path, image: np.ndarray) -> None:
    """Write a 2D array as 8-bit P5. Boolean input maps to 0/255."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2D")
    if img.dtype == bool:
        img = img.astype(np.uint8) * 255
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _tokens(data: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos


def read_pgm(path) -> np.ndarray:
    """Read a P5 or P2 PGM into a uint8 (or uint16) array of shape (H, W)."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, maxval), pos = _tokens(data, 4, 0)
    w, h, maxval = int(w), int(h), int(maxval)
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        arr = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
        return arr.reshape(h, w).copy()
    if magic == b"P2":
        vals, _ = _tokens(data, w * h, pos)
        return np.array([int(v) for v in vals], dtype=np.uint16 if maxval > 255 else np.uint8).reshape(h, w)
    raise ValueError(f"{path}: not a PGM file (magic {magic!r})")


def read_mask(path) -> np.ndarray:
    """Boolean mask from a PGM: nonzero pixels are foreground."""
    return read_pgm(path) > 0
