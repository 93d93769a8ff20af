import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from sonoguard.model import ReferenceSegmenter, generate_phantom
from sonoguard.sigproc import RngStream


@pytest.fixture
def segmenter():
    return ReferenceSegmenter()


@pytest.fixture
def phantom():
    return generate_phantom(RngStream(7).child("fixture"), 96, 96)


@pytest.fixture
def model_server():
    """Local HTTP stub. Yields (base_url, set_behavior).

    behavior(path, body_dict) -> (status_code, dict | raw_bytes)
    """
    state = {"fn": None}

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length)) if length else {}
            status, payload = state["fn"](self.path, body)
            data = payload if isinstance(payload, bytes) else json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()

    def set_behavior(fn):
        state["fn"] = fn

    yield f"http://127.0.0.1:{server.server_port}", set_behavior
    server.shutdown()
    thread.join()


@pytest.fixture
def echo_probs(model_server):
    """Server that returns the request pixels unchanged as probabilities."""
    url, set_behavior = model_server

    def behavior(path, body):
        return 200, {"width": body["width"], "height": body["height"], "probs": body["pixels"]}

    set_behavior(behavior)
    return url


@pytest.fixture(scope="session")
def smoke_result():
    """One small end-to-end run shared by harness, plot, and report tests."""
    from sonoguard.harness import ExperimentConfig, run_experiment

    cfg = ExperimentConfig(
        seed=11,
        cases=4,
        width=64,
        height=64,
        iterations=5,
        population=2,
        budget=10,
    )
    return run_experiment(cfg)


def pytest_configure(config):
    np.seterr(all="raise", under="ignore")
