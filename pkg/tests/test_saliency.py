import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from salientcrop.errors import ImageTooSmall, InvalidArgument
from salientcrop.imaging import RasterImage
from salientcrop.saliency import SaliencyParams, compute_saliency, normalize_map


def _square_image(x, y, size=128, side=8):
    data = np.zeros((size, size, 3))
    data[y:y + side, x:x + side] = 1.0
    return RasterImage(data)


def test_constant_image_has_zero_saliency():
    smap = compute_saliency(RasterImage(np.full((64, 64, 3), 0.5)))
    assert smap.values.shape == (64, 64)
    assert np.all(smap.values == 0)


@pytest.mark.parametrize("x,y", [(60, 60), (20, 30), (90, 15), (10, 100), (100, 100), (45, 70)])
def test_square_is_the_most_salient_spot(x, y):
    smap = compute_saliency(_square_image(x, y))
    # exhaustive scan for the argmax
    py, px = np.unravel_index(np.argmax(smap.values), smap.values.shape)
    assert x - 8 <= px < x + 8 + 8
    assert y - 8 <= py < y + 8 + 8
    assert smap.values.max() == pytest.approx(1.0)


def test_saliency_deterministic(rng):
    img = RasterImage(rng.random((64, 80, 3)))
    assert np.array_equal(compute_saliency(img).values, compute_saliency(img).values)


def test_gray_input_works():
    data = np.zeros((64, 64, 1))
    data[20:30, 20:30] = 1
    smap = compute_saliency(RasterImage(data))
    assert smap.values.max() == pytest.approx(1.0)


def test_color_contrast_is_salient():
    data = np.full((96, 96, 3), 0.5)
    data[40:52, 40:52] = (1.0, 0.0, 0.0)
    smap = compute_saliency(RasterImage(data))
    py, px = np.unravel_index(np.argmax(smap.values), smap.values.shape)
    assert 30 <= px < 62 and 30 <= py < 62


def test_too_small():
    with pytest.raises(ImageTooSmall):
        compute_saliency(RasterImage(np.zeros((31, 64, 3))))


def test_params_validation():
    with pytest.raises(InvalidArgument):
        SaliencyParams(pyramid_levels=0)
    with pytest.raises(InvalidArgument):
        SaliencyParams(channel_weights=(0, 0, 0))
    with pytest.raises(InvalidArgument):
        SaliencyParams(smoothing=-1)


def test_channel_weights_change_map(rng):
    img = RasterImage(rng.random((64, 64, 3)))
    a = compute_saliency(img, SaliencyParams(channel_weights=(1, 0, 0))).values
    b = compute_saliency(img, SaliencyParams(channel_weights=(0, 0, 1))).values
    assert not np.allclose(a, b)


class _Flat:
    def raw_map(self, img):
        out = np.zeros((img.height, img.width))
        out[3, 4] = 2.0
        return out


def test_pluggable_backend():
    smap = compute_saliency(RasterImage(np.zeros((40, 40, 3))), backend=_Flat())
    assert smap.values[3, 4] == 1.0 and smap.values.sum() == 1.0


def test_normalize_examples():
    raw = np.array([[1.0, 4.0], [2.0, 0.0]])
    assert np.array_equal(normalize_map(raw).values, raw / 4.0)
    assert np.all(normalize_map(np.zeros((3, 3))).values == 0)
    peaked = np.array([[0.2, 1.0]])
    assert np.array_equal(normalize_map(peaked).values, peaked)


def test_normalize_rejects_negative():
    with pytest.raises(InvalidArgument):
        normalize_map(np.array([[-1.0, 1.0]]))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(0, 1e6, allow_nan=False)))
def test_normalize_idempotent_and_bounded(raw):
    once = normalize_map(raw).values
    assert once.max(initial=0) <= 1.0
    assert np.allclose(normalize_map(once).values, once)
