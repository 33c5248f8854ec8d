"""Compare the compiled kernels against their numpy/pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per call for each backend and the speedup.
"""

import argparse
import timeit

import numpy as np

from salientcrop import _kernels
from salientcrop.synthetic import gaussian_bumps
from salientcrop.vocab import KDTree


def cases(rng):
    smap = gaussian_bumps((480, 640), [(100, 120, 20, 1.0), (400, 300, 35, 0.8), (550, 80, 12, 0.9)])
    smap += rng.random(smap.shape) * 1e-3
    mask = (smap >= 0.3).astype(np.uint8)
    noisy_mask = (rng.random((256, 256)) > 0.55).astype(np.uint8)
    tree = KDTree(rng.random((500, 128)))
    queries = rng.random((2000, 128))
    mag = rng.random((128, 128))
    ori = rng.uniform(0, 2 * np.pi, (128, 128))
    tree_args = (tree.points, tree.perm, tree.split_dim, tree.split_val, tree.left, tree.right,
                 tree.start, tree.stop)
    return {
        "local maxima 640x480": lambda k: k.strict_local_maxima(smap, 0.5),
        "labels 640x480 blobs": lambda k: k.label_components(mask),
        "labels 256x256 noise": lambda k: k.label_components(noisy_mask),
        "kd-tree 2000 q, k=500": lambda k: k.kdtree_query(*tree_args, queries),
        "descriptor r=16": lambda k: k.descriptor_histogram(mag, ori, 64, 64, 4.8, 16, 0.9),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run: pip install -e . --no-build-isolation")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        times = []
        for backend in (_kernels.compiled, _kernels.python):
            timer = timeit.Timer(lambda: fn(backend))
            n, _ = timer.autorange()
            times.append(min(timer.repeat(args.repeat, n)) / n * 1000)
        print(f"{name:<24}{times[0]:>12.3f}{times[1]:>12.3f}{times[1] / times[0]:>9.1f}x")


if __name__ == "__main__":
    main()
