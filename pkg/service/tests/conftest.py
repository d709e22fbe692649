import threading
import time

import pytest
import uvicorn
from fastapi.testclient import TestClient

from mscb_service.app import create_app
from mscb_service.config import ServiceConfig


@pytest.fixture(scope="session")
def stub_app():
    return create_app(ServiceConfig(mode="stub", seed=0))


@pytest.fixture()
def client(stub_app):
    return TestClient(stub_app)


class LiveServer:
    """Stub service on a real localhost socket, for wire-level tests."""

    def __init__(self, app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self):
        self.thread.start()
        deadline = time.time() + 10
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("stub service did not start")
            time.sleep(0.02)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        self.endpoint = f"http://127.0.0.1:{port}"
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture(scope="session")
def live_stub(stub_app):
    with LiveServer(stub_app) as server:
        yield server.endpoint
