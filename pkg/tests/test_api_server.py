import json

import pytest
from fastapi.testclient import TestClient

import config
from api_server import app


@pytest.fixture
def client(monkeypatch):
    monkeypatch.setattr(config, "AUTH_CODE", "")
    return TestClient(app)


@pytest.fixture
def micrurus_document(fixtures_dir):
    with open(fixtures_dir / "micrurus_spec.json", encoding="utf-8") as f:
        return json.load(f)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "online"


class TestDesign:

    def test_solves_targets(self, client):
        response = client.post("/design", json={"targets": {"head": 200.0, "tail": 0}})
        assert response.status_code == 200
        body = response.json()
        assert body["max_curvature_per_m"]["head-design"] == pytest.approx(200.0, rel=1e-7)
        assert body["bands"]["tail-design"] == "low-curvature"
        assert [s["label"] for s in body["spec"]["segments"]] == ["head-design", "tail-design"]

    def test_infeasible_target(self, client):
        response = client.post("/design", json={"targets": {"head": 1e6}})
        assert response.status_code == 422
        body = response.json()
        assert body["status"] == "error"
        assert body["attainable"] == pytest.approx(1.5 ** 0.5 / config.RELAXED_RADIUS_M, rel=1e-6)

    def test_schema_error(self, client):
        response = client.post("/design", json={"targets": {"neck": 1.0}})
        assert response.status_code == 422
        assert response.json()["status"] == "error"


class TestSimulate:

    def test_renders_points(self, client, micrurus_document):
        response = client.post("/simulate", json={"spec": micrurus_document, "samples": 301})
        assert response.status_code == 200
        body = response.json()
        assert len(body["points"]) == 301
        assert body["points"][0] == [0.0, 0.0]

    def test_schema_error_names_path(self, client, micrurus_document):
        micrurus_document["segments"][1]["sign_pattern"][0]["fraction"] = -1.0
        response = client.post("/simulate", json={"spec": micrurus_document})
        assert response.status_code == 422
        assert "segments[1].sign_pattern[0].fraction" in response.json()["message"]


class TestProfile:

    def test_straight_line(self, client):
        points = [[0.01 * i, 0.0] for i in range(100)]
        response = client.post("/profile", json={"points": points, "n": 100, "trial_id": "line"})
        assert response.status_code == 200
        body = response.json()
        assert body["trial_id"] == "line"
        assert sum(body["valid"]) == 80
        assert body["curvature"][:10] == [None] * 10
        assert all(value == 0.0 for value in body["curvature"][10:90])

    def test_single_point(self, client):
        response = client.post("/profile", json={"points": [[0.0, 0.0]]})
        assert response.status_code == 400
        assert response.json()["status"] == "error"


def test_auth_code_is_enforced(monkeypatch):
    monkeypatch.setattr(config, "AUTH_CODE", "secret")
    client = TestClient(app)
    assert client.post("/design", json={"targets": {"head": 0}}).status_code == 401
    assert client.post("/design?auth_code=secret", json={"targets": {"head": 0}}).status_code == 200
