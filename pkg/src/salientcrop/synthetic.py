"""Generators for synthetic test data: textured objects on flat backgrounds,
and saliency maps made of Gaussian bumps."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imaging import encode_png

TEXTURES = ("checker", "dashes", "dots")


def texture(kind: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """Square ``size x size`` texture in [0, 1]."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = rng.uniform(0, np.pi)
    u = xx * np.cos(theta) + yy * np.sin(theta)
    v = -xx * np.sin(theta) + yy * np.cos(theta)
    if kind == "checker":
        cell = rng.uniform(5.0, 7.0)
        return ((np.floor(u / cell) + np.floor(v / cell)) % 2).astype(np.float64)
    if kind == "dashes":
        # short bars on a brick lattice
        pitch_u, pitch_v = rng.uniform(11.0, 13.0), rng.uniform(6.0, 7.5)
        row = np.floor(v / pitch_v)
        uu = (u + 0.5 * pitch_u * (row % 2)) % pitch_u
        vv = v % pitch_v
        return ((uu < 0.55 * pitch_u) & (vv < 0.45 * pitch_v)).astype(np.float64)
    if kind == "dots":
        out = np.zeros((size, size))
        spacing = rng.uniform(7.0, 9.0)
        radius = rng.uniform(1.8, 2.4)
        offset = rng.uniform(0, spacing, size=2)
        for cy in np.arange(offset[0], size, spacing):
            for cx in np.arange(offset[1], size, spacing):
                jy, jx = rng.normal(0, 0.8, size=2)
                out[(yy - cy - jy) ** 2 + (xx - cx - jx) ** 2 <= radius**2] = 1.0
        return out
    raise ValueError(f"unknown texture {kind!r}")


def scene(objects, size=(128, 128), rng: np.random.Generator | None = None,
          background: float = 0.5, noise: float = 0.01) -> np.ndarray:
    """RGB scene with textured square objects.

    ``objects`` is a sequence of ``(kind, x, y, side)`` with ``(x, y)`` the
    top-left corner.
    """
    rng = rng or np.random.default_rng(0)
    h, w = size
    gray = np.full((h, w), background)
    for kind, x, y, side in objects:
        gray[y:y + side, x:x + side] = texture(kind, side, rng)
    if noise:
        gray = gray + rng.normal(0, noise, size=gray.shape)
    gray = np.clip(gray, 0.0, 1.0)
    return np.repeat(gray[:, :, None], 3, axis=2)


def single_object(kind: str, rng: np.random.Generator, size: int = 128) -> np.ndarray:
    side = int(rng.integers(size * 3 // 8, size // 2 + 1))
    x = int(rng.integers(size // 8, size - side - size // 8 + 1))
    y = int(rng.integers(size // 8, size - side - size // 8 + 1))
    return scene([(kind, x, y, side)], (size, size), rng)


def texture_corpus(root, n_train: int, n_test: int, seed: int = 42, kinds=TEXTURES, size: int = 128):
    """Write ``train/<kind>/*.png`` and ``test/<kind>/*.png`` plus ``test.csv``.

    Returns the training directory and the test manifest path.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    rows = ["path,label"]
    for split, count in (("train", n_train), ("test", n_test)):
        for kind in kinds:
            folder = root / split / kind
            folder.mkdir(parents=True, exist_ok=True)
            for i in range(count // len(kinds)):
                png = encode_png(single_object(kind, rng, size))
                (folder / f"{kind}_{i:03d}.png").write_bytes(png)
                if split == "test":
                    rows.append(f"{split}/{kind}/{kind}_{i:03d}.png,{kind}")
    manifest = root / "test.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return root / "train", manifest


def gaussian_bumps(shape, bumps) -> np.ndarray:
    """Pointwise maximum of isotropic bumps ``(cx, cy, sigma, height)``."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.zeros(shape)
    for cx, cy, sigma, height in bumps:
        out = np.maximum(out, height * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2)))
    return out


def random_bump_map(rng: np.random.Generator, shape=(128, 128), sigma_range=(3.0, 6.0),
                    max_bumps: int = 4, min_separation_sigmas: float = 6.0, min_height: float = 0.7):
    """Map with 1..max_bumps bumps, pairwise at least ``min_separation_sigmas``
    (of the larger sigma) apart and 3 sigma from the border. Returns
    ``(map, bumps)``."""
    h, w = shape
    target = int(rng.integers(1, max_bumps + 1))
    while True:
        bumps = []
        attempts = 0
        while len(bumps) < target and attempts < 1000:
            attempts += 1
            sigma = rng.uniform(*sigma_range)
            cx = rng.uniform(3 * sigma, w - 1 - 3 * sigma)
            cy = rng.uniform(3 * sigma, h - 1 - 3 * sigma)
            if all(np.hypot(cx - bx, cy - by) >= min_separation_sigmas * max(sigma, bs)
                   for bx, by, bs, _ in bumps):
                bumps.append((cx, cy, sigma, rng.uniform(min_height, 1.0)))
        if len(bumps) == target:
            break
    return gaussian_bumps(shape, bumps), bumps


def noise_chart(seed: int = 0, size: int = 129, blur: float = 2.0) -> np.ndarray:
    """Blurred uniform noise stretched to [0, 1]; a blob-rich grayscale chart."""
    from scipy.ndimage import gaussian_filter

    g = gaussian_filter(np.random.default_rng(seed).random((size, size)), blur)
    return (g - g.min()) / (g.max() - g.min())
