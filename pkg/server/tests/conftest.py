import pytest
from fastapi.testclient import TestClient

from babel_model_server.app import create_app
from babel_model_server.config import load_config

from pathlib import Path

CONFIG_PATH = Path(__file__).resolve().parents[1] / "config" / "server.json"


@pytest.fixture(scope="session")
def app():
    return create_app(load_config(CONFIG_PATH))


@pytest.fixture(scope="session")
def client(app):
    return TestClient(app)


class TestClientTransport:
    """Adapter so the primary package's wire client runs against the app
    in-process."""

    __test__ = False

    def __init__(self, client: TestClient):
        self.client = client

    def request(self, method, path, body=None, params=None):
        response = self.client.request(method, path, json=body, params=params)
        return response.status_code, response.json()


@pytest.fixture(scope="session")
def transport(client):
    return TestClientTransport(client)
