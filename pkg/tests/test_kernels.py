import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from salientcrop import _kernels
from salientcrop.vocab import KDTree

BACKENDS = [_kernels.python] + ([_kernels.compiled] if _kernels.compiled is not None else [])
needs_compiled = pytest.mark.skipif(_kernels.compiled is None, reason="extension not built")


@pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_labels_match_scipy(k, rng):
    mask = (rng.random((40, 50)) > 0.6).astype(np.uint8)
    labels, count = k.label_components(mask)
    ref, ref_count = ndimage.label(mask, structure=np.ones((3, 3)))
    assert count == ref_count
    # same partition, and labels numbered in raster order of first pixel
    assert np.array_equal(labels == 0, ref == 0)
    firsts = [np.flatnonzero(labels.ravel() == i)[0] for i in range(1, count + 1)]
    assert firsts == sorted(firsts)
    for i in range(1, count + 1):
        assert len(np.unique(ref[labels == i])) == 1


@pytest.mark.parametrize("k", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_local_maxima_brute_force(k, rng):
    values = np.round(rng.random((20, 25)), 1)  # plenty of plateaus
    ys, xs = k.strict_local_maxima(values, 0.3)
    expected = set()
    for y in range(20):
        for x in range(25):
            nb = [values[y + dy, x + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1)
                  if (dy or dx) and 0 <= y + dy < 20 and 0 <= x + dx < 25]
            if values[y, x] >= 0.3 and all(values[y, x] > v for v in nb):
                expected.add((y, x))
    assert set(zip(ys.tolist(), xs.tolist())) == expected


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 15), st.integers(1, 15)), elements=st.floats(0, 1)),
       st.floats(0, 1))
def test_local_maxima_backends_agree(values, floor):
    a = _kernels.compiled.strict_local_maxima(values, floor)
    b = _kernels.python.strict_local_maxima(values, floor)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 1)))
def test_labels_backends_agree(mask):
    a, na = _kernels.compiled.label_components(mask)
    b, nb = _kernels.python.label_components(mask)
    assert na == nb and np.array_equal(a, b)


@needs_compiled
def test_kdtree_backends_agree(rng):
    tree = KDTree(rng.normal(size=(500, 32)))
    q = rng.normal(size=(300, 32))
    assert np.array_equal(tree.query(q), tree.query(q, kernels=_kernels.python))


@needs_compiled
@pytest.mark.parametrize("angle", [0.0, 0.7, 3.1, 5.9])
def test_descriptor_backends_agree(rng, angle):
    mag = rng.random((60, 60))
    ori = rng.uniform(0, 2 * np.pi, (60, 60))
    a = _kernels.compiled.descriptor_histogram(mag, ori, 30, 29, 4.5, 16, angle)
    b = _kernels.python.descriptor_histogram(mag, ori, 30, 29, 4.5, 16, angle)
    assert a.shape == (128,)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_pure_python_switch():
    env = dict(os.environ, SALIENTCROP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import salientcrop; print(salientcrop.KERNEL_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == "python"
