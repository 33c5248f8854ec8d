import http.client
import json
import socket
import subprocess
import sys
import threading
import time

import numpy as np
import pytest

from salientcrop.imaging import encode_png
from salientcrop.pipeline import analyze_bytes
from salientcrop.service import AnalysisApp, ServiceConfig, make_server
from salientcrop.synthetic import scene


@pytest.fixture(scope="module")
def server(trained):
    vocab, model, params = trained
    srv = make_server(AnalysisApp(vocab, model, params, max_upload_bytes=1 << 20), timeout=10)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv.server_address[:2]
    srv.shutdown()
    srv.server_close()


def request(addr, method, path, body=None, headers=None):
    conn = http.client.HTTPConnection(*addr, timeout=60)
    try:
        conn.request(method, path, body=body, headers=headers or {})
        resp = conn.getresponse()
        return resp.status, resp.read()
    finally:
        conn.close()


def raw_request(addr, data: bytes) -> bytes:
    with socket.create_connection(addr, timeout=30) as sock:
        sock.sendall(data)
        return sock.recv(65536)


@pytest.fixture(scope="module")
def three_png():
    r = np.random.default_rng(11)
    img = scene([("checker", 20, 30, 60), ("dashes", 150, 40, 60), ("dots", 80, 170, 60)], (256, 256), r)
    return encode_png(img)


def test_health(server):
    status, body = request(server, "GET", "/v1/health")
    assert status == 200
    assert json.loads(body) == {"status": "ok", "model_k": 100, "classes": 3}


def test_unknown_route(server):
    assert request(server, "GET", "/v1/unknown")[0] == 404
    assert request(server, "POST", "/v2/analyze", body=b"x")[0] == 404


def test_analyze_three_objects(server, three_png, trained):
    status, body = request(server, "POST", "/v1/analyze", three_png, {"Content-Type": "image/png"})
    assert status == 200
    doc = json.loads(body)
    assert len(doc["crops"]) == 3
    assert doc["counts"] == {"checker": 1, "dashes": 1, "dots": 1}
    vocab, model, params = trained
    assert body == (analyze_bytes(three_png, vocab, model, params).to_json() + "\n").encode()


def test_analyze_with_png_crops(server, three_png):
    status, body = request(server, "POST", "/v1/analyze?crops=png", three_png)
    assert status == 200
    assert all("png" in c for c in json.loads(body)["crops"])


def test_random_bytes(server):
    body = np.random.default_rng(0).bytes(500)
    status, resp = request(server, "POST", "/v1/analyze", body, {"Content-Type": "application/octet-stream"})
    assert status == 400 and json.loads(resp) == {"error": "decode"}


def test_too_small_image(server):
    status, _ = request(server, "POST", "/v1/analyze", encode_png(np.zeros((8, 8, 3))))
    assert status == 400


def test_too_large(server):
    status, body = request(server, "POST", "/v1/analyze", b"\0" * ((1 << 20) + 1))
    assert status == 413


def test_wrong_media_type(server, three_png):
    assert request(server, "POST", "/v1/analyze", three_png, {"Content-Type": "text/plain"})[0] == 415


def test_length_required(server):
    reply = raw_request(server, b"POST /v1/analyze HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
    assert reply.startswith(b"HTTP/1.1 411")


def test_health_during_load(server, three_png):
    done = []

    def hammer():
        done.append(request(server, "POST", "/v1/analyze", three_png)[0])

    workers = [threading.Thread(target=hammer) for _ in range(4)]
    for w in workers:
        w.start()
    start = time.monotonic()
    assert request(server, "GET", "/v1/health")[0] == 200
    assert time.monotonic() - start < 5
    for w in workers:
        w.join()
    assert done == [200] * 4


def test_internal_error_is_500(trained):
    vocab, model, _ = trained
    app = AnalysisApp(vocab, model, object())  # params without any attributes
    assert app.analyze(encode_png(np.zeros((64, 64, 3))))[0] == 500
    assert json.loads(app.analyze(encode_png(np.zeros((64, 64, 3))))[1]) == {"error": "internal"}


def test_serve_fails_without_model(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "salientcrop", "serve", "--model", str(tmp_path / "none"),
                           "--bind", "127.0.0.1:0"], capture_output=True, timeout=60)
    assert proc.returncode == 1


def test_config_defaults():
    cfg = ServiceConfig()
    assert cfg.max_upload_bytes == 16 * 1024 * 1024 and cfg.port == 8080
