"""Raster decoding, luminance reduction, integral images and label-map output."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

DBLM_MAGIC = b"DBLM"
DBLM_VERSION = 1
_DBLM_HEADER = struct.Struct("<4sIII")  # magic, version, width, height


class RasterError(Exception):
    """Raised when an image cannot be decoded or is malformed."""


@dataclass(frozen=True)
class Raster:
    """8-bit image, samples stored as a (height, width, channels) uint8 array."""

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if s.ndim != 3 or s.shape[2] not in (1, 3):
            raise RasterError(f"samples must be (h, w, 1|3), got {s.shape}")
        if s.shape[0] < 1 or s.shape[1] < 1:
            raise RasterError("zero-dimension image")
        if s.dtype != np.uint8:
            raise RasterError(f"samples must be uint8, got {s.dtype}")

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]

    @classmethod
    def from_array(cls, arr) -> "Raster":
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return cls(np.ascontiguousarray(arr, dtype=np.uint8))


def _rescale_16bit(arr: np.ndarray) -> np.ndarray:
    # 65535 -> 255, matching a right shift by 8 bits
    return (arr.astype(np.uint32) >> 8).astype(np.uint8)


def load_image(path) -> Raster:
    """Decode a PNG or PGM/PPM file into a :class:`Raster`.

    Grayscale sources give one channel, everything else is converted to RGB.
    16-bit sources are reduced to 8 bits.
    """
    path = Path(path)
    if not path.is_file():
        raise RasterError(f"unreadable: {path} does not exist")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise RasterError(f"unsupported format: {im.format}")
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im)
                if arr.dtype != np.uint8:
                    if mode == "I" and arr.max(initial=0) <= 255:
                        arr = arr.astype(np.uint8)
                    else:
                        arr = _rescale_16bit(arr)
                arr = arr[:, :, None]
            elif mode in ("L", "1"):
                arr = np.asarray(im.convert("L"))[:, :, None]
            elif mode == "LA":
                arr = np.asarray(im.convert("L"))[:, :, None]
            else:
                arr = np.asarray(im.convert("RGB"))
    except RasterError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise RasterError(f"unreadable: {path}: {exc}") from exc
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise RasterError(f"zero-dimension image: {path}")
    return Raster(np.ascontiguousarray(arr, dtype=np.uint8))


def save_image(raster: Raster, path) -> None:
    s = raster.samples
    img = Image.fromarray(s[:, :, 0] if raster.channels == 1 else s)
    img.save(path, format="PNG")


def to_luminance(r: Raster) -> np.ndarray:
    """Reduce a raster to a float64 (height, width) intensity field."""
    s = r.samples
    if r.channels == 1:
        return s[:, :, 0].astype(np.float64)
    rgb = s.astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    return wr * rgb[:, :, 0] + wg * rgb[:, :, 1] + wb * rgb[:, :, 2]


class IntegralField:
    """Summed-area table with one row and one column of zero padding.

    Integer inputs are accumulated in int64 so that box sums are exact.
    """

    def __init__(self, field):
        f = np.asarray(field)
        if f.ndim != 2:
            raise ValueError("integral image needs a 2-D field")
        dtype = np.int64 if np.issubdtype(f.dtype, np.integer) or f.dtype == bool else np.float64
        self.height, self.width = f.shape
        table = np.zeros((self.height + 1, self.width + 1), dtype=dtype)
        np.cumsum(np.cumsum(f, axis=0, dtype=dtype), axis=1, dtype=dtype, out=table[1:, 1:])
        self.table = table

    def box_sum(self, x0, y0, x1, y1):
        """Sum over columns [x0, x1] and rows [y0, y1], inclusive, already in bounds.

        Works element-wise on integer arrays of corners.
        """
        t = self.table
        return t[y1 + 1, x1 + 1] - t[y0, x1 + 1] - t[y1 + 1, x0] + t[y0, x0]

    def clamp(self, x0, y0, x1, y1):
        x0 = np.clip(x0, 0, self.width)
        x1 = np.clip(x1, -1, self.width - 1)
        y0 = np.clip(y0, 0, self.height)
        y1 = np.clip(y1, -1, self.height - 1)
        return x0, y0, x1, y1

    def box_mean(self, x0: int, y0: int, x1: int, y1: int) -> float:
        """Mean over the inclusive rectangle after clamping it to the image."""
        cx0, cy0, cx1, cy1 = self.clamp(x0, y0, x1, y1)
        if cx1 < cx0 or cy1 < cy0:
            raise ValueError(f"rectangle ({x0},{y0})-({x1},{y1}) lies outside the image")
        area = (cx1 - cx0 + 1) * (cy1 - cy0 + 1)
        return float(self.box_sum(cx0, cy0, cx1, cy1)) / area


def integral(field) -> IntegralField:
    return IntegralField(field)


# -- label maps ------------------------------------------------------------

def _palette(labels: np.ndarray) -> np.ndarray:
    # Invertible mixing on 24-bit integers: distinct labels never share a color
    # and only label 0 maps to black.
    x = labels.astype(np.uint64) & np.uint64(0xFFFFFF)
    mask = np.uint64(0xFFFFFF)
    for _ in range(2):
        x = (x * np.uint64(0x9E3779)) & mask  # odd multiplier, bijective mod 2**24
        x ^= x >> np.uint64(11)
    rgb = np.empty(labels.shape + (3,), dtype=np.uint8)
    rgb[..., 0] = (x >> np.uint64(16)) & np.uint64(0xFF)
    rgb[..., 1] = (x >> np.uint64(8)) & np.uint64(0xFF)
    rgb[..., 2] = x & np.uint64(0xFF)
    return rgb


def colorize_labels(labels: np.ndarray) -> np.ndarray:
    """Map a label field to RGB; label 0 (dam) is black."""
    labels = np.asarray(labels)
    if labels.size and int(labels.max()) >= 1 << 24:
        raise ValueError("colorized output supports labels below 2**24")
    return _palette(labels)


def encode_label_map(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("label field must be 2-D")
    h, w = labels.shape
    header = _DBLM_HEADER.pack(DBLM_MAGIC, DBLM_VERSION, w, h)
    return header + np.ascontiguousarray(labels, dtype="<u4").tobytes()


def decode_label_map(data: bytes) -> np.ndarray:
    if len(data) < _DBLM_HEADER.size:
        raise RasterError("truncated DBLM header")
    magic, version, w, h = _DBLM_HEADER.unpack_from(data)
    if magic != DBLM_MAGIC:
        raise RasterError(f"bad DBLM magic {magic!r}")
    if version != DBLM_VERSION:
        raise RasterError(f"unsupported DBLM version {version}")
    payload = data[_DBLM_HEADER.size:]
    if len(payload) != 4 * w * h:
        raise RasterError(f"DBLM payload is {len(payload)} bytes, expected {4 * w * h}")
    return np.frombuffer(payload, dtype="<u4").reshape(h, w).astype(np.uint32)


def write_label_map(labels: np.ndarray, path, mode: str = "raw-u32") -> None:
    """Write a label field as DBLM raw (``raw-u32``) or as a ``colorized-png``."""
    path = Path(path)
    if mode == "raw-u32":
        path.write_bytes(encode_label_map(labels))
    elif mode == "colorized-png":
        Image.fromarray(colorize_labels(labels)).save(path, format="PNG")
    else:
        raise ValueError(f"unknown label map mode {mode!r}")


def read_label_map(path) -> np.ndarray:
    return decode_label_map(Path(path).read_bytes())


def write_mask_png(mask: np.ndarray, path) -> None:
    """Write a boolean mask as a 1-bit PNG."""
    Image.fromarray(np.asarray(mask, dtype=bool)).save(path, format="PNG")
