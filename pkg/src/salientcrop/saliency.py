"""Bottom-up center-surround saliency.

Intensity, red-green / blue-yellow opponency and four directional
gradient-energy channels are compared across a Gaussian pyramid (fine
"center" level against coarser "surround" level), each channel is
max-normalized, and the weighted sum is brought back to source resolution.

Any object with a ``raw_map(img) -> ndarray`` method can stand in for the
default backend, e.g. a learned fixation model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ImageTooSmall, InvalidArgument
from .imaging import RasterImage, gaussian_blur, gaussian_pyramid, resize_bilinear

MIN_SIZE = 32
ORIENTATIONS = (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4)
# Channel maxima below this are float noise from blurring flat regions.
_NOISE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SaliencyParams:
    """Center-surround settings.

    ``pyramid_levels`` is the index of the deepest pyramid level; surround
    levels deeper than what the image supports are clamped to the deepest
    available one. ``channel_weights`` order is intensity, color, orientation.
    ``smoothing`` is the Gaussian sigma, in combination-level pixels, applied
    to the summed map so each object yields a single-peaked blob.
    """

    pyramid_levels: int = 6
    center_levels: tuple[int, ...] = (1, 2, 3)
    surround_offsets: tuple[int, ...] = (2, 3)
    channel_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    smoothing: float = 1.0

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise InvalidArgument("pyramid_levels must be >= 1")
        if any(c < 0 for c in self.center_levels) or any(d < 1 for d in self.surround_offsets):
            raise InvalidArgument("center levels must be >= 0 and surround offsets >= 1")
        w = self.channel_weights
        if len(w) != 3 or any(x < 0 for x in w) or sum(w) <= 0:
            raise InvalidArgument("channel weights must be 3 non-negative values with positive sum")
        if self.smoothing < 0:
            raise InvalidArgument("smoothing must be >= 0")


class SaliencyBackend(Protocol):
    def raw_map(self, img: RasterImage) -> np.ndarray: ...


def normalize_map(raw) -> SaliencyMap:
    """Scale a non-negative grid so its maximum is 1; all-zero stays zero."""
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0) or np.any(np.isnan(raw)):
        raise InvalidArgument("saliency values must be non-negative")
    peak = raw.max(initial=0.0)
    if peak > 0:
        return SaliencyMap(raw / peak)
    return SaliencyMap(np.zeros_like(raw))


def _scale_pairs(params: SaliencyParams, deepest: int) -> list[tuple[int, int]]:
    pairs = []
    for c in params.center_levels:
        for delta in params.surround_offsets:
            s = min(c + delta, deepest)
            if c < s and (c, s) not in pairs:
                pairs.append((c, s))
    return pairs


def _center_surround(levels: list[np.ndarray], pairs, shape) -> np.ndarray:
    acc = np.zeros(shape)
    for c, s in pairs:
        center = levels[c]
        surround = resize_bilinear(levels[s], *center.shape)
        acc += resize_bilinear(np.abs(center - surround), *shape)
    return acc


def _max_normalized(channel: np.ndarray) -> np.ndarray:
    peak = channel.max(initial=0.0)
    if peak < _NOISE_FLOOR:
        return np.zeros_like(channel)
    return channel / peak


class CenterSurroundSaliency:
    """Itti-Koch style multiscale contrast model."""

    def __init__(self, params: SaliencyParams | None = None):
        self.params = params or SaliencyParams()

    def raw_map(self, img: RasterImage) -> np.ndarray:
        p = self.params
        rgb = img.data
        if rgb.shape[2] == 1:
            r = g = b = rgb[:, :, 0]
        else:
            r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
        intensity = (r + g + b) / 3.0

        n_levels = p.pyramid_levels + 1
        i_pyr = [lvl.data for lvl in gaussian_pyramid(intensity, n_levels)]
        deepest = len(i_pyr) - 1
        pairs = _scale_pairs(p, deepest)
        if not pairs:
            return np.zeros(intensity.shape)
        # combine across scales at the coarsest center level, then upsample once
        base_shape = i_pyr[max(c for c, _ in pairs)].shape

        channels = [_max_normalized(_center_surround(i_pyr, pairs, base_shape))]

        if rgb.shape[2] == 3:
            rg_pyr = [lvl.data for lvl in gaussian_pyramid(r - g, n_levels)]
            by_pyr = [lvl.data for lvl in gaussian_pyramid(b - (r + g) / 2.0, n_levels)]
            color = _center_surround(rg_pyr, pairs, base_shape) + _center_surround(by_pyr, pairs, base_shape)
            channels.append(_max_normalized(color))
        else:
            channels.append(np.zeros(base_shape))

        orient = np.zeros(base_shape)
        grads = [np.gradient(level) for level in i_pyr]
        for theta in ORIENTATIONS:
            ct, st = np.cos(theta), np.sin(theta)
            energy = [(gx * ct + gy * st) ** 2 for gy, gx in grads]
            orient += _center_surround(energy, pairs, base_shape)
        channels.append(_max_normalized(orient))

        # fixed channel order keeps the sum bitwise reproducible
        total = np.zeros(base_shape)
        for weight, channel in zip(p.channel_weights, channels):
            total += weight * channel
        total = gaussian_blur(total, p.smoothing)
        return resize_bilinear(total, *intensity.shape)


def compute_saliency(
    img: RasterImage,
    params: SaliencyParams | None = None,
    backend: SaliencyBackend | None = None,
) -> SaliencyMap:
    """Saliency map with the source image's dimensions and maximum 1 (or all zeros)."""
    if img.height < MIN_SIZE or img.width < MIN_SIZE:
        raise ImageTooSmall(f"saliency needs at least {MIN_SIZE}x{MIN_SIZE}, got {img.width}x{img.height}")
    backend = backend or CenterSurroundSaliency(params)
    raw = np.maximum(backend.raw_map(img), 0.0)
    return normalize_map(raw)
