import struct

import numpy as np
import pytest

from salientcrop.classifier import SvmModel
from salientcrop.errors import CorruptArchive, FormatError, IoError
from salientcrop.store import MAGIC, load_archive, load_model, load_vocabulary, save_model, save_vocabulary
from salientcrop.vocab import Vocabulary


def random_pair(r, k=None, m=None):
    k = k or int(r.integers(2, 50))
    m = m or int(r.integers(2, 11))
    vocab = Vocabulary(r.normal(size=(k, 128)).astype(np.float32))
    model = SvmModel(r.normal(size=(m, k)).astype(np.float32), r.normal(size=m).astype(np.float32),
                     tuple(f"c{i}" for i in range(m)), float(r.normal()), float(r.uniform(0.1, 10)))
    return vocab, model


def test_roundtrip_bitwise(tmp_path, rng):
    vocab, model = random_pair(rng)
    path = tmp_path / "m.scrm"
    save_model(vocab, model, path, {"note": 1})
    v2, m2 = load_model(path)
    assert v2.words.tobytes() == vocab.words.tobytes()
    assert m2.weights.tobytes() == model.weights.tobytes()
    assert m2.biases.tobytes() == model.biases.tobytes()
    assert (m2.labels, m2.tau, m2.C) == (model.labels, model.tau, model.C)
    assert load_archive(path)[0]["params"] == {"note": 1}


def test_archive_bytes_are_stable(tmp_path, rng):
    vocab, model = random_pair(rng)
    save_model(vocab, model, tmp_path / "a")
    save_model(vocab, model, tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
    assert (tmp_path / "a").read_bytes().startswith(MAGIC)


def test_vocabulary_archive(tmp_path, rng):
    vocab, _ = random_pair(rng)
    save_vocabulary(vocab, tmp_path / "v")
    assert load_vocabulary(tmp_path / "v").words.tobytes() == vocab.words.tobytes()
    with pytest.raises(FormatError):
        load_model(tmp_path / "v")


def test_unwritable_path(tmp_path, rng):
    vocab, model = random_pair(rng)
    with pytest.raises(IoError):
        save_model(vocab, model, tmp_path / "missing" / "dir" / "m.scrm")


def test_bad_magic(tmp_path, rng):
    vocab, model = random_pair(rng)
    path = tmp_path / "m"
    save_model(vocab, model, path)
    path.write_bytes(b"XXXXXXXX" + path.read_bytes()[8:])
    with pytest.raises(FormatError):
        load_model(path)


@pytest.mark.parametrize("cut", [4, 12, 40, -1, -100])
def test_truncated(tmp_path, rng, cut):
    vocab, model = random_pair(rng)
    path = tmp_path / "m"
    save_model(vocab, model, path)
    data = path.read_bytes()
    path.write_bytes(data[:cut] if cut > 8 or cut < 0 else data[:8] + data[8:8 + cut])
    with pytest.raises(CorruptArchive):
        load_model(path)


def test_trailing_bytes(tmp_path, rng):
    vocab, model = random_pair(rng)
    path = tmp_path / "m"
    save_model(vocab, model, path)
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(CorruptArchive):
        load_model(path)


def test_wrong_version(tmp_path):
    meta = b'{"format_version":99}'
    (tmp_path / "m").write_bytes(MAGIC + struct.pack("<Q", len(meta)) + meta)
    with pytest.raises(FormatError):
        load_model(tmp_path / "m")


def test_missing_file(tmp_path):
    with pytest.raises(IoError):
        load_model(tmp_path / "nope")
