"""Raster image value type and PNG conversions.

All pixel data is 8-bit, row-major, 1 (grayscale) or 3 (RGB) channels.
Images are immutable value objects so they can be shared across worker
threads without copying.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    channels: int
    pixels: bytes

    def __post_init__(self) -> None:
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        expected = self.width * self.height * self.channels
        if len(self.pixels) != expected:
            raise ValueError(
                f"pixel buffer has {len(self.pixels)} bytes, expected {expected}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        """Build from a HxW or HxWxC uint8 array."""
        arr = np.ascontiguousarray(arr)
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 array, got {arr.dtype}")
        if arr.ndim == 2:
            h, w = arr.shape
            c = 1
        elif arr.ndim == 3 and arr.shape[2] in (1, 3):
            h, w, c = arr.shape
        else:
            raise ValueError(f"unsupported array shape {arr.shape}")
        return cls(width=w, height=h, channels=c, pixels=arr.tobytes())

    def to_array(self) -> np.ndarray:
        """Return a HxW (grayscale) or HxWx3 uint8 array copy."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8).copy()
        if self.channels == 1:
            return arr.reshape(self.height, self.width)
        return arr.reshape(self.height, self.width, self.channels)

    def to_gray_array(self) -> np.ndarray:
        """HxW uint8 grayscale view (ITU-R 601 luma for RGB input)."""
        arr = self.to_array()
        if self.channels == 1:
            return arr
        # integer luma keeps the conversion platform-deterministic
        a = arr.astype(np.uint32)
        luma = (299 * a[:, :, 0] + 587 * a[:, :, 1] + 114 * a[:, :, 2]) // 1000
        return luma.astype(np.uint8)

    def to_png_bytes(self) -> bytes:
        mode = "L" if self.channels == 1 else "RGB"
        img = Image.frombytes(mode, (self.width, self.height), self.pixels)
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "RasterImage":
        img = Image.open(io.BytesIO(data))
        if img.mode == "L":
            pass
        elif img.mode != "RGB":
            img = img.convert("RGB")
        return cls.from_array(np.asarray(img))

    @classmethod
    def from_file(cls, path) -> "RasterImage":
        with open(path, "rb") as fh:
            return cls.from_png_bytes(fh.read())

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_png_bytes())
