import numpy as np
import pytest

from salientcrop.pipeline import (
    PipelineParams,
    extract_training_features,
    list_training_images,
    train_model,
    vocabulary_from_features,
)
from salientcrop.synthetic import texture_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    train_dir, manifest = texture_corpus(root, 60, 15, seed=7)
    return train_dir, manifest


@pytest.fixture(scope="session")
def trained(corpus):
    """(vocab, model, params) from a small texture corpus."""
    train_dir, _ = corpus
    params = PipelineParams()
    items, names = list_training_images(train_dir)
    feats = extract_training_features(items, params)
    vocab = vocabulary_from_features(feats, 100, 42)
    model = train_model(feats, [n for _, n in items], names, vocab, C=1.0, seed=42)
    return vocab, model, params


@pytest.fixture(scope="session")
def model_file(trained, tmp_path_factory):
    from salientcrop.store import save_model

    vocab, model, params = trained
    path = tmp_path_factory.mktemp("model") / "m.scrm"
    save_model(vocab, model, path, params.to_dict())
    return path


_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    detail = dict(item.user_properties).get("detail", "")
    n = marker.args[0]
    ok = report.passed and _criteria.get(n, (True,))[0]
    _criteria[n] = (ok, detail or _criteria.get(n, (True, ""))[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
