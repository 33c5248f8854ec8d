"""Scale-invariant keypoints and 128-d gradient-orientation descriptors.

Follows Lowe (2004) without the initial image doubling: a Gaussian scale
space of ``scales_per_octave + 3`` images per octave, difference-of-Gaussian
extrema over 26 neighbours, quadratic subpixel refinement, contrast and
edge-response rejection, 36-bin orientation histograms, and 4x4x8
descriptors with trilinear binning and 0.2 clamping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import ImageTooSmall, InvalidArgument
from .imaging import GrayImage, gaussian_blur

MIN_SIZE = 32
DESCRIPTOR_SIZE = 128
ASSUMED_BLUR = 0.5
IMG_BORDER = 5
MAX_REFINE_STEPS = 5
ORI_BINS = 36
ORI_PEAK_RATIO = 0.8
ORI_SIGMA_FACTOR = 1.5
DESCR_SCALE_FACTOR = 3.0
DESCR_CLAMP = 0.2
MIN_OCTAVE_SIZE = 16


@dataclass(frozen=True)
class SiftParams:
    octaves: int = 4
    scales_per_octave: int = 3
    base_sigma: float = 1.6
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    descriptor_grid: int = 4
    descriptor_bins: int = 8

    def __post_init__(self):
        if self.octaves < 1 or self.scales_per_octave < 1:
            raise InvalidArgument("octaves and scales_per_octave must be >= 1")
        if self.base_sigma <= 0 or self.contrast_threshold <= 0 or self.edge_ratio <= 0:
            raise InvalidArgument("sigma and thresholds must be positive")
        if (self.descriptor_grid, self.descriptor_bins) != (4, 8):
            raise InvalidArgument("only the 4x4x8 descriptor layout is supported")


@dataclass(frozen=True)
class Keypoint:
    """Keypoint in input-image pixel coordinates.

    ``octave`` and ``layer`` locate the Gaussian image the keypoint came
    from; ``-1`` means derive them from ``scale``.
    """

    x: float
    y: float
    scale: float
    orientation: float
    response: float = 0.0
    octave: int = field(default=-1, compare=False)
    layer: int = field(default=-1, compare=False)


class ScaleSpace:
    """Gaussian and DoG octaves plus gradient polar maps for one image."""

    def __init__(self, gray: np.ndarray, params: SiftParams):
        self.params = params
        s = params.scales_per_octave
        h, w = gray.shape
        self.n_octaves = min(params.octaves, max(1, int(math.log2(min(h, w) / MIN_OCTAVE_SIZE)) + 1))

        k = 2.0 ** (1.0 / s)
        sig = [params.base_sigma * k**i for i in range(s + 3)]
        increments = [math.sqrt(sig[i] ** 2 - sig[i - 1] ** 2) for i in range(1, s + 3)]

        base = gaussian_blur(gray, math.sqrt(max(params.base_sigma**2 - ASSUMED_BLUR**2, 0.01)))
        self.gaussians: list[list[np.ndarray]] = []
        self.dogs: list[np.ndarray] = []
        for _ in range(self.n_octaves):
            octave = [base]
            for inc in increments:
                octave.append(gaussian_blur(octave[-1], inc))
            self.gaussians.append(octave)
            stack = np.stack(octave)
            self.dogs.append(stack[1:] - stack[:-1])
            nxt = octave[s]
            base = nxt[0:2 * (nxt.shape[0] // 2):2, 0:2 * (nxt.shape[1] // 2):2]
        self._polar: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def polar(self, octave: int, layer: int) -> tuple[np.ndarray, np.ndarray]:
        """Gradient magnitude and orientation in [0, 2*pi) of one Gaussian image."""
        key = (octave, layer)
        if key not in self._polar:
            img = self.gaussians[octave][layer]
            dx = np.zeros_like(img)
            dy = np.zeros_like(img)
            dx[:, 1:-1] = img[:, 2:] - img[:, :-2]
            dy[1:-1, :] = img[2:, :] - img[:-2, :]
            mag = np.sqrt(dx * dx + dy * dy)
            ori = np.mod(np.arctan2(dy, dx), 2 * np.pi)
            self._polar[key] = (np.ascontiguousarray(mag), np.ascontiguousarray(ori))
        return self._polar[key]

    def locate(self, kp: Keypoint) -> tuple[int, int, float]:
        """Octave, Gaussian layer index and octave-relative sigma for a keypoint."""
        s = self.params.scales_per_octave
        rel = math.log2(kp.scale / self.params.base_sigma)
        octave = kp.octave if kp.octave >= 0 else int(math.floor(rel + 1e-9))
        octave = min(max(octave, 0), self.n_octaves - 1)
        if kp.layer >= 0:
            layer = kp.layer
        else:
            layer = int(round((rel - octave) * s))
        layer = min(max(layer, 0), s + 2)
        return octave, layer, kp.scale / 2.0**octave


def _check_size(img: GrayImage):
    h, w = img.data.shape
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ImageTooSmall(f"SIFT needs at least {MIN_SIZE}x{MIN_SIZE}, got {w}x{h}")


def _extrema_candidates(dog: np.ndarray, s: int, threshold: float):
    footprint = np.ones((3, 3, 3), dtype=bool)
    footprint[1, 1, 1] = False
    nb_max = ndimage.maximum_filter(dog, footprint=footprint, mode="nearest")
    nb_min = ndimage.minimum_filter(dog, footprint=footprint, mode="nearest")
    is_ext = ((dog > nb_max) | (dog < nb_min)) & (np.abs(dog) > threshold)
    is_ext[0] = False
    is_ext[s + 1:] = False
    is_ext[:, :IMG_BORDER] = False
    is_ext[:, -IMG_BORDER:] = False
    is_ext[:, :, :IMG_BORDER] = False
    is_ext[:, :, -IMG_BORDER:] = False
    return np.argwhere(is_ext)


def _refine(dog: np.ndarray, layer: int, y: int, x: int, params: SiftParams):
    """Quadratic fit of the DoG around a sample; None when rejected."""
    s = params.scales_per_octave
    n_layers, h, w = dog.shape
    for _ in range(MAX_REFINE_STEPS):
        c = dog[layer, y, x]
        grad = 0.5 * np.array([
            dog[layer, y, x + 1] - dog[layer, y, x - 1],
            dog[layer, y + 1, x] - dog[layer, y - 1, x],
            dog[layer + 1, y, x] - dog[layer - 1, y, x],
        ])
        dxx = dog[layer, y, x + 1] + dog[layer, y, x - 1] - 2 * c
        dyy = dog[layer, y + 1, x] + dog[layer, y - 1, x] - 2 * c
        dss = dog[layer + 1, y, x] + dog[layer - 1, y, x] - 2 * c
        dxy = 0.25 * (dog[layer, y + 1, x + 1] - dog[layer, y + 1, x - 1]
                      - dog[layer, y - 1, x + 1] + dog[layer, y - 1, x - 1])
        dxs = 0.25 * (dog[layer + 1, y, x + 1] - dog[layer + 1, y, x - 1]
                      - dog[layer - 1, y, x + 1] + dog[layer - 1, y, x - 1])
        dys = 0.25 * (dog[layer + 1, y + 1, x] - dog[layer + 1, y - 1, x]
                      - dog[layer - 1, y + 1, x] + dog[layer - 1, y - 1, x])
        hess = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
        try:
            offset = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            break
        if not np.all(np.isfinite(offset)) or np.any(np.abs(offset) > 1e6):
            return None
        x += int(round(offset[0]))
        y += int(round(offset[1]))
        layer += int(round(offset[2]))
        if not (1 <= layer <= s and IMG_BORDER <= x < w - IMG_BORDER and IMG_BORDER <= y < h - IMG_BORDER):
            return None
    else:
        return None

    contrast = dog[layer, y, x] + 0.5 * float(grad @ offset)
    if abs(contrast) * s < params.contrast_threshold:
        return None
    trace = dxx + dyy
    det = dxx * dyy - dxy * dxy
    r = params.edge_ratio
    if det <= 0 or trace * trace * r >= (r + 1) ** 2 * det:
        return None
    return layer, y, x, offset, abs(float(contrast))


def _orientations(space: ScaleSpace, octave: int, layer: int, x: int, y: int, sigma_oct: float) -> list[float]:
    mag, ori = space.polar(octave, layer)
    h, w = mag.shape
    radius = int(round(3 * ORI_SIGMA_FACTOR * sigma_oct))
    y0, y1 = max(y - radius, 1), min(y + radius, h - 2)
    x0, x1 = max(x - radius, 1), min(x + radius, w - 2)
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    weight = np.exp(-((yy - y) ** 2 + (xx - x) ** 2) / (2 * (ORI_SIGMA_FACTOR * sigma_oct) ** 2))
    bins = np.round(ori[y0:y1 + 1, x0:x1 + 1] * ORI_BINS / (2 * np.pi)).astype(np.int64) % ORI_BINS
    hist = np.bincount(bins.ravel(), weights=(weight * mag[y0:y1 + 1, x0:x1 + 1]).ravel(), minlength=ORI_BINS)
    smooth = (6 * hist + 4 * (np.roll(hist, 1) + np.roll(hist, -1)) + np.roll(hist, 2) + np.roll(hist, -2)) / 16.0
    peak = smooth.max()
    if peak <= 0:
        return []
    left, right = np.roll(smooth, 1), np.roll(smooth, -1)
    angles = []
    for i in range(ORI_BINS):
        c = smooth[i]
        if c > left[i] and c > right[i] and c >= ORI_PEAK_RATIO * peak:
            denom = left[i] - 2 * c + right[i]
            shift = 0.5 * (left[i] - right[i]) / denom if denom != 0 else 0.0
            angle = ((i + shift) % ORI_BINS) * (2 * np.pi / ORI_BINS)
            if angle >= 2 * np.pi:
                angle = 0.0
            angles.append(float(angle))
    return angles


def _detect(space: ScaleSpace) -> list[Keypoint]:
    params = space.params
    s = params.scales_per_octave
    prescreen = 0.5 * params.contrast_threshold / s
    keypoints = []
    for o, dog in enumerate(space.dogs):
        for layer, y, x in _extrema_candidates(dog, s, prescreen):
            found = _refine(dog, int(layer), int(y), int(x), params)
            if found is None:
                continue
            rl, ry, rx, offset, response = found
            factor = 2.0**o
            sigma_oct = params.base_sigma * 2.0 ** ((rl + offset[2]) / s)
            kx = (rx + offset[0]) * factor
            ky = (ry + offset[1]) * factor
            for angle in _orientations(space, o, rl, rx, ry, sigma_oct):
                keypoints.append(Keypoint(float(kx), float(ky), float(sigma_oct * factor), angle, response, o, rl))
    return keypoints


def detect_keypoints(img: GrayImage, params: SiftParams | None = None) -> list[Keypoint]:
    params = params or SiftParams()
    _check_size(img)
    return _detect(ScaleSpace(img.data, params))


def _describe(space: ScaleSpace, keypoints: list[Keypoint]):
    d = space.params.descriptor_grid
    kept, rows = [], []
    for kp in keypoints:
        octave, layer, sigma_oct = space.locate(kp)
        mag, ori = space.polar(octave, layer)
        h, w = mag.shape
        factor = 2.0**octave
        cx, cy = int(round(kp.x / factor)), int(round(kp.y / factor))
        hist_width = DESCR_SCALE_FACTOR * sigma_oct
        radius = int(round(hist_width * math.sqrt(2) * (d + 1) * 0.5))
        if cx - radius < 0 or cy - radius < 0 or cx + radius >= w or cy + radius >= h:
            continue
        raw = _kernels.descriptor_histogram(mag, ori, cx, cy, float(hist_width), radius, float(kp.orientation))
        rows.append(normalize_descriptor(raw))
        kept.append(kp)
    descriptors = np.array(rows, dtype=np.float64).reshape(len(rows), DESCRIPTOR_SIZE)
    return kept, descriptors


def normalize_descriptor(raw: np.ndarray) -> np.ndarray:
    """Unit-normalize, clamp entries at 0.2, renormalize. All-zero stays zero."""
    raw = np.asarray(raw, dtype=np.float64)
    norm = np.linalg.norm(raw)
    if norm <= 1e-12:
        return np.zeros(DESCRIPTOR_SIZE)
    clamped = np.minimum(raw / norm, DESCR_CLAMP)
    return clamped / np.linalg.norm(clamped)


def compute_descriptors(img: GrayImage, keypoints: list[Keypoint], params: SiftParams | None = None):
    """Descriptors for ``keypoints``.

    Keypoints whose sampling patch leaves the image are dropped. Returns
    ``(kept_keypoints, descriptors)`` with descriptors shaped ``(n, 128)``.
    """
    params = params or SiftParams()
    _check_size(img)
    return _describe(ScaleSpace(img.data, params), keypoints)


def detect_and_describe(img: GrayImage, params: SiftParams | None = None):
    """Detection and description sharing one scale space."""
    params = params or SiftParams()
    _check_size(img)
    space = ScaleSpace(img.data, params)
    return _describe(space, _detect(space))
