import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import gaussian_filter

from salientcrop.errors import ImageTooSmall, InvalidArgument
from salientcrop.imaging import GrayImage
from salientcrop.sift import (
    Keypoint,
    SiftParams,
    compute_descriptors,
    detect_and_describe,
    detect_keypoints,
    normalize_descriptor,
)
from salientcrop.synthetic import noise_chart


def _disc(radius=6, size=128):
    yy, xx = np.mgrid[0:size, 0:size]
    return ((xx - 64) ** 2 + (yy - 64) ** 2 <= radius**2).astype(float)


def test_constant_image_has_no_keypoints():
    assert detect_keypoints(GrayImage(np.full((64, 64), 0.5))) == []


def test_disc_center_found():
    img = _disc()
    # oracle: brute-force scale-normalized DoG over a sigma sweep, strongest response
    best = None
    for sigma in np.geomspace(1.6, 12, 25):
        dog = gaussian_filter(img, sigma * 2 ** (1 / 3)) - gaussian_filter(img, sigma)
        y, x = np.unravel_index(np.argmax(np.abs(dog)), dog.shape)
        if best is None or abs(dog[y, x]) > best[0]:
            best = (abs(dog[y, x]), x, y)
    _, ox, oy = best
    assert np.hypot(ox - 64, oy - 64) <= 1
    kps = detect_keypoints(GrayImage(img))
    assert min(np.hypot(k.x - ox, k.y - oy) for k in kps) <= 3


def test_detection_deterministic():
    img = GrayImage(noise_chart(1))
    assert detect_keypoints(img) == detect_keypoints(img)


def test_descriptor_contract():
    kps, desc = detect_and_describe(GrayImage(noise_chart(2)))
    assert len(kps) > 20
    assert desc.shape == (len(kps), 128)
    assert np.allclose(np.linalg.norm(desc, axis=1), 1.0, atol=1e-5)
    assert np.all(desc >= 0)


def test_flat_patch_gives_zero_descriptor():
    img = np.zeros((96, 96))
    img[:, 80:] = 1.0
    kept, desc = compute_descriptors(GrayImage(img), [Keypoint(30.0, 48.0, 2.0, 0.0)])
    assert len(kept) == 1
    assert np.all(desc[0] == 0)


def test_patch_outside_image_dropped():
    kept, desc = compute_descriptors(GrayImage(noise_chart(0, 64)), [Keypoint(1.0, 1.0, 3.0, 0.0)])
    assert kept == [] and desc.shape == (0, 128)


def test_compute_matches_detect_and_describe():
    img = GrayImage(noise_chart(4))
    kps = detect_keypoints(img)
    kept, desc = compute_descriptors(img, kps)
    kept2, desc2 = detect_and_describe(img)
    assert kept == kept2
    assert np.array_equal(desc, desc2)


def test_keypoints_inside_image():
    img = noise_chart(5, 100)
    for kp in detect_keypoints(GrayImage(img)):
        assert 0 <= kp.x < 100 and 0 <= kp.y < 100
        assert kp.scale > 0 and 0 <= kp.orientation < 2 * np.pi + 1e-9


def test_rotation_matching_small_chart():
    g = noise_chart(1)
    k1, d1 = detect_and_describe(GrayImage(g))
    k2, d2 = detect_and_describe(GrayImage(np.rot90(g).copy()))
    w = g.shape[1]
    hits = 0
    for kp, d in zip(k1, d1):
        q = k2[int(np.argmin(((d2 - d) ** 2).sum(axis=1)))]
        hits += np.hypot(q.x - kp.y, q.y - (w - 1 - kp.x)) <= 3
    assert hits / len(k1) >= 0.7


def test_normalize_descriptor():
    raw = np.zeros(128)
    raw[0] = 10.0
    raw[1] = 1.0
    out = normalize_descriptor(raw)
    unit = raw / np.sqrt(101.0)
    clamped = np.minimum(unit, 0.2)
    assert np.allclose(out, clamped / np.sqrt((clamped**2).sum()))
    assert np.linalg.norm(out) == pytest.approx(1.0)
    assert np.all(normalize_descriptor(np.zeros(128)) == 0)


def test_too_small_and_bad_params():
    with pytest.raises(ImageTooSmall):
        detect_keypoints(GrayImage(np.zeros((20, 64))))
    with pytest.raises(InvalidArgument):
        SiftParams(descriptor_grid=2)
    with pytest.raises(InvalidArgument):
        SiftParams(contrast_threshold=0)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 1000), st.floats(0.01, 0.05), st.floats(1.1, 2.0))
def test_contrast_threshold_monotone(seed, low, factor):
    img = GrayImage(noise_chart(seed, 64))
    loose = detect_keypoints(img, SiftParams(contrast_threshold=low))
    strict = detect_keypoints(img, SiftParams(contrast_threshold=low * factor))
    assert set(strict) <= set(loose)
