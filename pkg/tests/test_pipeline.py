import base64
import json
import shutil

import numpy as np
import pytest

from salientcrop.errors import DecodeError, InvalidArgument
from salientcrop.imaging import RasterImage, decode_image, encode_png
from salientcrop.pipeline import (
    PipelineParams,
    analyze_bytes,
    analyze_image,
    canonical_json,
    image_id_for,
    list_training_images,
)
from salientcrop.synthetic import scene
from salientcrop.vocab import Vocabulary

KINDS = ["checker", "dashes", "dots"]


def three_objects(seed):
    r = np.random.default_rng(seed)
    kinds = list(r.permutation(KINDS))
    img = scene([(kinds[0], 20, 30, 60), (kinds[1], 150, 40, 60), (kinds[2], 80, 170, 60)], (256, 256), r)
    return img, kinds


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_three_object_scene(trained, seed):
    vocab, model, params = trained
    img, kinds = three_objects(seed)
    res = analyze_image(RasterImage(img), vocab, model, params)
    assert len(res.crops) == 3
    assert sorted(label.name for _, label, _ in res.crops) == sorted(kinds)
    assert sum(res.counts.values()) == 3
    # each crop overlaps the object it was labelled as
    placed = {kinds[0]: (50, 60), kinds[1]: (180, 70), kinds[2]: (110, 200)}
    for crop, label, score in res.crops:
        cx, cy = placed[label.name]
        assert crop.contains(cx, cy)
        assert score is not None


def test_two_same_class(trained):
    vocab, model, params = trained
    img = scene([("dots", 20, 30, 60), ("dots", 150, 140, 60)], (256, 256), np.random.default_rng(3))
    assert analyze_image(RasterImage(img), vocab, model, params).counts == {"dots": 2}


def test_uniform_gray(trained):
    vocab, model, params = trained
    res = analyze_image(RasterImage(np.full((96, 96, 3), 0.5)), vocab, model, params)
    assert res.crops == [] and res.counts == {}


def test_analyze_bytes_json_shape(trained):
    vocab, model, params = trained
    img, _ = three_objects(4)
    data = encode_png(img)
    res = analyze_bytes(data, vocab, model, params)
    doc = json.loads(res.to_json())
    assert set(doc) == {"image_id", "crops", "counts"}
    assert doc["image_id"] == image_id_for(data) and len(doc["image_id"]) == 16
    assert res.to_json() == analyze_bytes(data, vocab, model, params).to_json()
    with_png = json.loads(res.to_json(with_png=True))
    crop0 = decode_image(base64.b64decode(with_png["crops"][0]["png"]))
    box = doc["crops"][0]["box"]
    assert (crop0.width, crop0.height) == (box["w"], box["h"])


def test_analyze_bytes_bad_input(trained):
    vocab, model, params = trained
    with pytest.raises(DecodeError):
        analyze_bytes(b"\x89PNG garbage", vocab, model, params)


def test_vocab_model_mismatch(trained):
    _, model, params = trained
    with pytest.raises(InvalidArgument):
        analyze_image(RasterImage(np.zeros((64, 64, 3))), Vocabulary(np.eye(8)), model, params)


def test_canonical_json():
    assert canonical_json({"b": 1.0 / 3, "a": [2.5e-10, 1]}) == '{"a":[2.5e-10,1],"b":0.333333}'
    with pytest.raises(InvalidArgument):
        canonical_json({"x": float("nan")})


def test_params_roundtrip():
    p = PipelineParams().with_threshold(0.4)
    assert PipelineParams.from_dict(json.loads(json.dumps(p.to_dict()))) == p
    assert PipelineParams.from_dict({}) == PipelineParams()


def test_list_training_images(tmp_path):
    for name in ("b", "a"):
        (tmp_path / name).mkdir()
        (tmp_path / name / "x.png").write_bytes(b"")
        (tmp_path / name / "notes.txt").write_text("")
    items, names = list_training_images(tmp_path)
    assert names == ("a", "b")
    assert [p.name for p, _ in items] == ["x.png", "x.png"]
    shutil.rmtree(tmp_path / "b")
    with pytest.raises(InvalidArgument):
        list_training_images(tmp_path)


def test_in_memory_image_gets_pixel_id(trained):
    vocab, model, params = trained
    img = RasterImage(np.full((64, 64, 3), 0.25))
    res = analyze_image(img, vocab, model, params)
    assert res.image_id == image_id_for(img.data.tobytes())
