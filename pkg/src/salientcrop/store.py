"""Single-file model archive.

Layout (all integers little-endian)::

    8 bytes   magic "SCRMDL01"
    u64       metadata length in bytes
    ...       UTF-8 JSON metadata (sorted keys, no timestamps)
    3 x [u64 element count, float32 LE elements]   words, weights, biases

A vocabulary-only archive (written by ``build-vocab``) carries
``"kind": "vocabulary"`` with empty weight and bias arrays.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .classifier import SvmModel
from .errors import CorruptArchive, FormatError, IoError
from .vocab import Vocabulary

MAGIC = b"SCRMDL01"
FORMAT_VERSION = 1
_U64 = struct.Struct("<Q")
_F32 = np.dtype("<f4")


def _encode(vocab: Vocabulary, model: SvmModel | None, params: dict | None) -> bytes:
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": "model" if model is not None else "vocabulary",
        "k": vocab.k,
        "dim": vocab.dim,
        "params": params or {},
    }
    if model is not None:
        meta.update({"M": model.M, "labels": list(model.labels), "tau": model.tau, "C": model.C})
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    arrays = [vocab.words]
    if model is not None:
        arrays += [model.weights, model.biases]
    else:
        arrays += [np.zeros(0, np.float32), np.zeros(0, np.float32)]
    parts = [MAGIC, _U64.pack(len(header)), header]
    for arr in arrays:
        flat = np.ascontiguousarray(arr, dtype=_F32).ravel()
        parts += [_U64.pack(flat.size), flat.tobytes()]
    return b"".join(parts)


def _write(path, blob: bytes):
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def save_model(vocab: Vocabulary, model: SvmModel, path, params: dict | None = None) -> None:
    if model.k != vocab.k:
        raise CorruptArchive(f"model expects k={model.k} but vocabulary has {vocab.k} words")
    _write(path, _encode(vocab, model, params))


def save_vocabulary(vocab: Vocabulary, path, params: dict | None = None) -> None:
    _write(path, _encode(vocab, None, params))


def _decode(blob: bytes):
    if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC:
        raise FormatError("not a model archive (bad magic)")
    pos = len(MAGIC)

    def take(n):
        nonlocal pos
        if pos + n > len(blob):
            raise CorruptArchive("archive truncated")
        chunk = blob[pos:pos + n]
        pos += n
        return chunk

    (meta_len,) = _U64.unpack(take(_U64.size))
    try:
        meta = json.loads(take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptArchive(f"unreadable metadata: {exc}") from exc
    if meta.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {meta.get('format_version')!r}")

    arrays = []
    for _ in range(3):
        (count,) = _U64.unpack(take(_U64.size))
        if count > len(blob):
            raise CorruptArchive("array length exceeds archive size")
        arrays.append(np.frombuffer(take(count * _F32.itemsize), dtype=_F32).astype(np.float32))
    if pos != len(blob):
        raise CorruptArchive("trailing bytes after payload")

    words, weights, biases = arrays
    try:
        k, dim = int(meta["k"]), int(meta["dim"])
        if words.size != k * dim:
            raise CorruptArchive(f"expected {k * dim} word values, found {words.size}")
        vocab = Vocabulary(words.reshape(k, dim))
        if meta["kind"] == "vocabulary":
            if weights.size or biases.size:
                raise CorruptArchive("vocabulary archive carries classifier arrays")
            return meta, vocab, None
        m = int(meta["M"])
        if weights.size != m * k or biases.size != m or len(meta["labels"]) != m:
            raise CorruptArchive("classifier arrays disagree with metadata")
        model = SvmModel(weights.reshape(m, k), biases, tuple(meta["labels"]),
                         float(meta["tau"]), float(meta["C"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArchive(f"inconsistent archive: {exc}") from exc
    return meta, vocab, model


def _read(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def load_archive(path):
    """``(metadata, vocabulary, model_or_None)`` from any archive kind."""
    return _decode(_read(path))


def load_model(path) -> tuple[Vocabulary, SvmModel]:
    _, vocab, model = load_archive(path)
    if model is None:
        raise FormatError(f"{path} holds only a vocabulary")
    return vocab, model


def load_vocabulary(path) -> Vocabulary:
    return load_archive(path)[1]
