"""Crop extraction from a saliency map.

The map is thresholded to count object blobs N. Strict local maxima above
the threshold are then visited from the most salient down: each one gets a
Gaussian fitted to its surrounding blob, a box sized from that Gaussian is
emitted, and any remaining maxima inside the box are discarded. At most N
boxes are produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidArgument
from .saliency import SaliencyMap

MIN_SIGMA = 1.0


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class Peak:
    x: int
    y: int
    value: float


@dataclass(frozen=True)
class GaussianBlob:
    center_x: float
    center_y: float
    sigma_x: float
    sigma_y: float


@dataclass(frozen=True)
class CropRegion:
    x: int
    y: int
    width: int
    height: int
    peak: Peak
    blob: GaussianBlob

    def contains(self, px: int, py: int) -> bool:
        return self.x <= px < self.x + self.width and self.y <= py < self.y + self.height

    @property
    def box(self) -> tuple[int, int, int, int]:
        return self.x, self.y, self.width, self.height


@dataclass(frozen=True)
class CropParams:
    threshold: float = 0.5
    blob_fraction: float = 0.6
    box_radius_sigmas: float = 2.0
    min_crop_px: int = 16
    max_crops: int | None = None

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise InvalidArgument("threshold must lie in (0, 1)")
        if not 0 < self.blob_fraction < 1:
            raise InvalidArgument("blob_fraction must lie in (0, 1)")
        if self.box_radius_sigmas <= 0:
            raise InvalidArgument("box_radius_sigmas must be positive")
        if self.min_crop_px < 1:
            raise InvalidArgument("min_crop_px must be >= 1")
        if self.max_crops is not None and self.max_crops < 0:
            raise InvalidArgument("max_crops must be >= 0")


def _values(smap) -> np.ndarray:
    values = smap.values if isinstance(smap, SaliencyMap) else smap
    return np.ascontiguousarray(values, dtype=np.float64)


def threshold_map(smap: SaliencyMap, threshold: float) -> BinaryMask:
    return BinaryMask(_values(smap) >= threshold)


def label_mask(mask: BinaryMask | np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labels (1..n in raster order of first pixel) and n."""
    bits = mask.bits if isinstance(mask, BinaryMask) else mask
    return _kernels.label_components(np.ascontiguousarray(bits, dtype=np.uint8))


def count_blobs(mask: BinaryMask) -> int:
    return label_mask(mask)[1]


def find_local_maxima(smap: SaliencyMap, floor: float = 0.0) -> list[Peak]:
    """Strict 8-neighborhood maxima above ``floor``.

    Sorted by value descending, ties by row then column. A plateau of two or
    more equal pixels yields no maximum.
    """
    values = _values(smap)
    ys, xs = _kernels.strict_local_maxima(values, float(floor))
    peaks = [Peak(int(x), int(y), float(values[y, x])) for y, x in zip(ys, xs)]
    peaks.sort(key=lambda p: (-p.value, p.y, p.x))
    return peaks


def fit_gaussian_blob(smap: SaliencyMap, peak: Peak, blob_fraction: float = 0.6) -> GaussianBlob:
    """Saliency-weighted moments of the blob around ``peak``.

    The blob is the 8-connected set of pixels at or above
    ``blob_fraction * peak.value`` that contains the peak. Sigmas are
    floored at one pixel.
    """
    values = _values(smap)
    labels, _ = label_mask(values >= blob_fraction * peak.value)
    region = labels == labels[peak.y, peak.x]
    ys, xs = np.nonzero(region)
    w = values[ys, xs]
    total = w.sum()
    if len(w) == 0 or total <= 0:
        return GaussianBlob(float(peak.x), float(peak.y), MIN_SIGMA, MIN_SIGMA)
    cx = float((w * xs).sum() / total)
    cy = float((w * ys).sum() / total)
    sx = math.sqrt(float((w * (xs - cx) ** 2).sum() / total))
    sy = math.sqrt(float((w * (ys - cy) ** 2).sum() / total))
    return GaussianBlob(cx, cy, max(sx, MIN_SIGMA), max(sy, MIN_SIGMA))


def _span(center: float, half: float, min_len: int, limit: int) -> tuple[int, int]:
    lo = int(math.floor(center - half + 0.5))
    hi = int(math.floor(center + half + 0.5)) + 1
    lo, hi = max(lo, 0), min(hi, limit)
    need = min(min_len, limit) - (hi - lo)
    if need > 0:
        lo -= need // 2
        hi += need - need // 2
        if lo < 0:
            hi, lo = hi - lo, 0
        if hi > limit:
            lo, hi = lo - (hi - limit), limit
        lo = max(lo, 0)
    return lo, hi


def box_around(blob: GaussianBlob, params: CropParams, width: int, height: int) -> tuple[int, int, int, int]:
    """Box of +/- ``box_radius_sigmas`` sigmas around the blob, clipped and grown to the minimum size."""
    x0, x1 = _span(blob.center_x, params.box_radius_sigmas * blob.sigma_x, params.min_crop_px, width)
    y0, y1 = _span(blob.center_y, params.box_radius_sigmas * blob.sigma_y, params.min_crop_px, height)
    return x0, y0, x1 - x0, y1 - y0


def extract_crops(img, smap: SaliencyMap, params: CropParams | None = None) -> list[CropRegion]:
    """Crop boxes in emission order (descending peak saliency).

    ``img`` is only used for its dimensions, which must match the map.
    """
    params = params or CropParams()
    values = _values(smap)
    if img is not None and (img.height, img.width) != values.shape:
        raise InvalidArgument("saliency map and image dimensions differ")
    height, width = values.shape
    n_blobs = count_blobs(threshold_map(values, params.threshold))
    limit = n_blobs if params.max_crops is None else min(n_blobs, params.max_crops)
    remaining = find_local_maxima(values, params.threshold)

    crops: list[CropRegion] = []
    while remaining and len(crops) < limit:
        peak = remaining.pop(0)
        blob = fit_gaussian_blob(values, peak, params.blob_fraction)
        x, y, w, h = box_around(blob, params, width, height)
        crop = CropRegion(x, y, w, h, peak, blob)
        crops.append(crop)
        remaining = [p for p in remaining if not crop.contains(p.x, p.y)]
    return crops


def saliency_bounding_box(smap: SaliencyMap, threshold: float = 0.5, min_size: int = 0) -> tuple[int, int, int, int]:
    """Bounding box of every pixel at or above ``threshold``.

    An empty mask yields the whole frame. The box is grown symmetrically to
    ``min_size`` per side where the image allows.
    """
    values = _values(smap)
    height, width = values.shape
    ys, xs = np.nonzero(values >= threshold)
    if len(xs) == 0:
        return 0, 0, width, height
    x0, x1 = _span((xs.min() + xs.max()) / 2, (xs.max() - xs.min()) / 2, min_size, width)
    y0, y1 = _span((ys.min() + ys.max()) / 2, (ys.max() - ys.min()) / 2, min_size, height)
    return x0, y0, x1 - x0, y1 - y0
