"""Grayscale image I/O: binary PGM (P5), max-pixel normalized on load."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


class ImageFormatError(ValueError):
    """Raised on unsupported or corrupt image files."""


def load_image(path) -> np.ndarray:
    """Load an 8-bit binary PGM and scale by its own max pixel value.

    An all-black image loads as all zeros; otherwise the brightest pixel
    maps to exactly 1.0.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")
    fields, offset = _parse_header(data, path)
    width, height, maxval = fields
    if maxval <= 0 or maxval > 255:
        raise ImageFormatError(f"{path}: unsupported max value {maxval}")
    expected = width * height
    raw = data[offset:offset + expected]
    if len(raw) < expected:
        raise ImageFormatError(f"{path}: truncated pixel data")
    img = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    img = img.astype(np.float64)
    peak = img.max()
    return img / peak if peak > 0 else img


def save_image(image, path) -> None:
    """Write a [0, 1] image as an 8-bit binary PGM."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidInputError("expected a 2-D grayscale image")
    if img.min() < 0.0 or img.max() > 1.0:
        raise InvalidInputError("image values must lie in [0, 1]")
    data = np.round(img * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + data.tobytes())


def _parse_header(data, path):
    """Read width, height, maxval tokens after the magic, skipping comments."""
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ImageFormatError(f"{path}: malformed PGM header")
        fields.append(int(token))
    if pos >= len(data):
        raise ImageFormatError(f"{path}: header ends before pixel data")
    return tuple(fields), pos + 1
