"""Visual vocabulary: k-means over descriptors, exact KD-tree quantization, word histograms."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, InsufficientData, InvalidArgument, NoFeatures

logger = logging.getLogger(__name__)

DEFAULT_K = 500
MAX_ITERATIONS = 100
LEAF_SIZE = 8
_CHUNK = 4096


class KDTree:
    """Exact nearest-neighbour index over a fixed point set.

    Splits on the dimension of largest spread at the median; leaves hold at
    most ``leaf_size`` points. Queries backtrack fully, so results equal a
    linear scan, with ties going to the lowest point index.
    """

    def __init__(self, points, leaf_size: int = LEAF_SIZE):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        if self.points.ndim != 2 or len(self.points) == 0:
            raise InvalidArgument("KDTree needs a non-empty 2-D point array")
        self.leaf_size = leaf_size
        self.perm = np.arange(len(self.points), dtype=np.int64)
        split_dim, split_val, left, right, start, stop = [], [], [], [], [], []

        def new_node():
            for arr in (split_dim, left, right, start, stop):
                arr.append(-1)
            split_val.append(0.0)
            return len(split_dim) - 1

        def build(node, lo, hi):
            start[node], stop[node] = lo, hi
            idx = self.perm[lo:hi]
            pts = self.points[idx]
            spread = pts.max(axis=0) - pts.min(axis=0)
            if hi - lo <= leaf_size or spread.max() <= 0:
                return
            dim = int(np.argmax(spread))
            order = np.argsort(pts[:, dim], kind="stable")
            self.perm[lo:hi] = idx[order]
            mid = lo + (hi - lo) // 2
            split_dim[node] = dim
            split_val[node] = float(self.points[self.perm[mid], dim])
            left[node] = new_node()
            right[node] = new_node()
            build(left[node], lo, mid)
            build(right[node], mid, hi)

        build(new_node(), 0, len(self.points))
        self.split_dim = np.array(split_dim, dtype=np.int64)
        self.split_val = np.array(split_val, dtype=np.float64)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.start = np.array(start, dtype=np.int64)
        self.stop = np.array(stop, dtype=np.int64)

    def query(self, queries, kernels=None) -> np.ndarray:
        """Index of the nearest point for each row of ``queries``."""
        q = np.ascontiguousarray(np.atleast_2d(queries), dtype=np.float64)
        if q.shape[1] != self.points.shape[1]:
            raise DimensionMismatch(f"query dimension {q.shape[1]} != {self.points.shape[1]}")
        k = kernels or _kernels
        return k.kdtree_query(self.points, self.perm, self.split_dim, self.split_val,
                              self.left, self.right, self.start, self.stop, q)


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """``k`` visual words (float32, ``k x 128``) with a KD-tree over them."""

    words: np.ndarray
    kdtree: KDTree = field(init=False, repr=False)

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.float32)
        if words.ndim != 2 or len(words) < 2:
            raise InvalidArgument("vocabulary needs at least 2 words")
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "kdtree", KDTree(words.astype(np.float64)))

    @property
    def k(self) -> int:
        return self.words.shape[0]

    @property
    def dim(self) -> int:
        return self.words.shape[1]


@dataclass(frozen=True, eq=False)
class Histogram:
    bins: np.ndarray
    total_features: int


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return (x * x).sum(axis=1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(axis=1)[None, :]


def _row_sq_dist(x: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> np.ndarray:
    diff = x - centers[assign]
    return (diff * diff).sum(axis=1)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = ((x - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[i] = x[idx]
        closest = np.minimum(closest, ((x - centers[i]) ** 2).sum(axis=1))
    return centers


def _nearest(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    out = np.empty(len(x), dtype=np.int64)
    for lo in range(0, len(x), _CHUNK):
        out[lo:lo + _CHUNK] = np.argmin(_sq_dists(x[lo:lo + _CHUNK], centers), axis=1)
    return out


@dataclass
class KMeansResult:
    centers: np.ndarray
    assignment: np.ndarray
    inertia_history: list[float]
    iterations: int


def kmeans(x, k: int, seed: int = 42, max_iter: int = MAX_ITERATIONS) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    A point only changes cluster when its new center is strictly closer, so
    the within-cluster sum of squares (recorded after every update step)
    cannot rise. Empty clusters are re-seeded with the point farthest from
    its own center.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if k < 2:
        raise InvalidArgument("k must be >= 2")
    if len(np.unique(x, axis=0)) < k:
        raise InsufficientData(f"need at least {k} distinct descriptors")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    assign = _nearest(x, centers)
    history = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        counts = np.bincount(assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            dist = _row_sq_dist(x, centers, assign)
            far = int(np.argmax(dist))
            counts[assign[far]] -= 1
            assign[far] = empty
            counts[empty] = 1
            centers[empty] = x[far]
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, x)
        centers = sums / counts[:, None]
        history.append(float(_row_sq_dist(x, centers, assign).sum()))

        candidate = _nearest(x, centers)
        moved = candidate != assign
        if moved.any():
            idx = np.flatnonzero(moved)
            better = _row_sq_dist(x[idx], centers, candidate[idx]) < _row_sq_dist(x[idx], centers, assign[idx])
            moved[idx[~better]] = False
        if not moved.any():
            break
        assign = np.where(moved, candidate, assign)
    logger.debug("k-means finished after %d iterations, inertia %.6g", iterations, history[-1])
    return KMeansResult(centers, assign, history, iterations)


def build_vocabulary(descriptors, k: int = DEFAULT_K, seed: int = 42) -> Vocabulary:
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.ndim != 2:
        raise InvalidArgument("descriptors must be an (n, d) array")
    result = kmeans(descriptors, k, seed)
    return Vocabulary(result.centers)


def quantize(vocab: Vocabulary, descriptors) -> np.ndarray | int:
    """Nearest-word index for one descriptor (returns int) or a stack (returns array)."""
    d = np.asarray(descriptors, dtype=np.float64)
    if d.shape[-1] != vocab.dim:
        raise DimensionMismatch(f"descriptor dimension {d.shape[-1]} != {vocab.dim}")
    if d.ndim == 1:
        return int(vocab.kdtree.query(d[None, :])[0])
    return vocab.kdtree.query(d)


def histogram(vocab: Vocabulary, descriptors) -> Histogram:
    """L1-normalized visual-word frequencies."""
    d = np.asarray(descriptors, dtype=np.float64)
    if d.size == 0:
        raise NoFeatures("no descriptors to quantize")
    words = quantize(vocab, d.reshape(-1, vocab.dim))
    counts = np.bincount(words, minlength=vocab.k).astype(np.float64)
    return Histogram(counts / len(words), len(words))
