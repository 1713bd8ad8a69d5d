"""RGB frame container with PNG persistence.

Frames are stored row-major as (height, width, 3) uint8 arrays. All renderers
and metrics in this package operate on this type.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError


class FrameShapeError(DataError):
    pass


@dataclass
class Frame:
    pixels: np.ndarray  # (h, w, 3) uint8

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise FrameShapeError(f"expected (h, w, 3) pixel array, got {px.shape}")
        if px.dtype != np.uint8:
            raise FrameShapeError(f"expected uint8 pixels, got {px.dtype}")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def copy(self) -> "Frame":
        return Frame(self.pixels.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    @classmethod
    def filled(cls, width: int, height: int, color=(128, 128, 128)) -> "Frame":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = np.asarray(color, dtype=np.uint8)
        return cls(px)

    def save_png(self, path: str | Path) -> None:
        Image.fromarray(self.pixels, mode="RGB").save(str(path), format="PNG")

    @classmethod
    def load_png(cls, path: str | Path) -> "Frame":
        with Image.open(str(path)) as im:
            return cls(np.asarray(im.convert("RGB"), dtype=np.uint8))


def grayscale(frame: Frame) -> np.ndarray:
    """Luminance (0.299 R + 0.587 G + 0.114 B) as float64, shape (h, w)."""
    px = frame.pixels.astype(np.float64)
    return 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]
