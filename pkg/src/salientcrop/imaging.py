"""Image decoding, grayscale conversion, resampling and Gaussian pyramids."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import DecodeError, InvalidArgument

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
PYRAMID_FLOOR = 8
SUPPORTED_FORMATS = ("PNG", "JPEG")

_SINGLE_CHANNEL_MODES = {"1", "L", "LA", "I", "I;16", "I;16B", "I;16L", "F"}


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Decoded image, ``data`` is ``(height, width, channels)`` in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] not in (1, 3):
            raise InvalidArgument(f"expected (h, w, 1|3) array, got shape {self.data.shape}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def from_array(cls, arr) -> RasterImage:
        """Wrap a float array in [0, 1]; 2-D input becomes one channel."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return cls(np.clip(arr, 0.0, 1.0))

    def crop(self, x: int, y: int, w: int, h: int) -> RasterImage:
        return RasterImage(self.data[y:y + h, x:x + w].copy())


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel luminance image, ``data`` is ``(height, width)``."""

    data: np.ndarray

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def decode_image(data: bytes) -> RasterImage:
    """Decode PNG or JPEG bytes.

    Palette, alpha and 16-bit images are reduced to 1 or 3 channels of
    float64 in [0, 1]. Anything else raises :class:`DecodeError`.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in SUPPORTED_FORMATS:
                raise DecodeError(f"unsupported image format {im.format!r}")
            im.load()
            if im.mode in _SINGLE_CHANNEL_MODES:
                arr = _single_channel(im)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(str(exc) or "cannot decode image") from exc
    return RasterImage.from_array(arr)


def _single_channel(im):
    if im.mode in ("1", "L", "LA"):
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    arr = np.asarray(im, dtype=np.float64)
    if im.mode.startswith("I;16") or (im.mode == "I" and arr.max(initial=0) > 255):
        return arr / 65535.0
    if im.mode == "I":
        return arr / 255.0
    return arr


def read_image(path) -> RasterImage:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_png(arr) -> bytes:
    """Encode a [0, 1] array (2-D, or 3-D with 1 or 3 channels) as 8-bit PNG."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    u8 = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8).save(buf, format="PNG")
    return buf.getvalue()


def to_grayscale(img: RasterImage) -> GrayImage:
    if img.channels == 1:
        return GrayImage(img.data[:, :, 0])
    r, g, b = (img.data[:, :, i] for i in range(3))
    gray = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    return GrayImage(np.clip(gray, 0.0, 1.0))


def gaussian_blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders."""
    if sigma <= 0:
        return np.asarray(arr, dtype=np.float64).copy()
    return ndimage.gaussian_filter(np.asarray(arr, dtype=np.float64), sigma, mode="nearest", truncate=4.0)


def resize_bilinear(arr: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resample of a 2-D array with pixel-center alignment."""
    arr = np.asarray(arr, dtype=np.float64)
    src_h, src_w = arr.shape
    if (src_h, src_w) == (height, width):
        return arr.copy()

    def axis_weights(src, dst):
        pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
        pos = np.clip(pos, 0.0, src - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, src - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis_weights(src_h, height)
    x0, x1, fx = axis_weights(src_w, width)
    top = arr[y0][:, x0] * (1 - fx) + arr[y0][:, x1] * fx
    bottom = arr[y1][:, x0] * (1 - fx) + arr[y1][:, x1] * fx
    return top * (1 - fy)[:, None] + bottom * fy[:, None]


def downsample(arr: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    """Blur then keep every second row and column (output is floor(h/2) x floor(w/2))."""
    h, w = arr.shape
    return gaussian_blur(arr, sigma)[0:2 * (h // 2):2, 0:2 * (w // 2):2]


def gaussian_pyramid(img: GrayImage | np.ndarray, levels: int, sigma: float = 1.0) -> list[GrayImage]:
    """Blur-and-halve pyramid; level 0 is the input.

    Stops early once the next level would drop below 8x8.
    """
    if levels < 1:
        raise InvalidArgument("levels must be >= 1")
    data = img.data if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    if min(data.shape) < 2:
        raise InvalidArgument("image must be at least 2x2")
    out = [GrayImage(np.asarray(data, dtype=np.float64))]
    while len(out) < levels:
        h, w = out[-1].data.shape
        if h // 2 < PYRAMID_FLOOR or w // 2 < PYRAMID_FLOOR:
            break
        out.append(GrayImage(downsample(out[-1].data, sigma)))
    return out
