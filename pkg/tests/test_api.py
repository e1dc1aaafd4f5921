"""
tests/test_api.py

Integration tests for the API endpoints:
- Landing page (`/`) and health check (`/ping`)
- Existence decision (`/check_exists`)
- Synthesis (`/synthesize/{method}`)
"""

import json

from fastapi.testclient import TestClient

from api.main import app
from src.config import MDPS_DIR

client = TestClient(app)

LOOP_EXIT = json.loads((MDPS_DIR / "loop_exit.json").read_text(encoding="utf-8"))
TWO_PATH = json.loads((MDPS_DIR / "twopath.json").read_text(encoding="utf-8"))


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert "MDP Policy Synthesis API" in response.text


def test_ping():
    response = client.get("/ping")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "service": "mdp-policy-synthesis"}


def test_check_exists_loop_exit():
    response = client.post("/check_exists", json=LOOP_EXIT)
    assert response.status_code == 200
    result = response.json()
    assert result["exists"] is False
    assert result["witness"] is None
    assert result["summary"] == "no optimal policy; infimum 0"


def test_check_exists_two_path():
    result = client.post("/check_exists", json=TWO_PATH).json()
    assert result["exists"] is True
    assert abs(result["witness"]["cost"] - 1.5) < 1e-9


def test_synthesize_exact():
    response = client.post("/synthesize/exact", json=TWO_PATH)
    assert response.status_code == 200
    result = response.json()
    assert result["policy"]["s1"] == {"b": 1.0}
    assert result["deterministic"] is True


def test_synthesize_eps():
    response = client.post("/synthesize/eps?eps=0.01", json=LOOP_EXIT)
    assert response.status_code == 200
    result = response.json()
    assert result["cost"] <= 0.01 + 1e-9
    assert abs(result["reach"] - 1.0) < 1e-9


def test_synthesize_approx():
    result = client.post("/synthesize/approx", json=TWO_PATH).json()
    assert result["method"] == "approx"
    assert abs(result["surrogate"] - 1.5) < 1e-9


def test_bad_eps():
    assert client.post("/synthesize/eps?eps=0", json=LOOP_EXIT).status_code == 400


def test_unknown_method():
    assert client.post("/synthesize/magic", json=LOOP_EXIT).status_code == 422


def test_malformed_document():
    doc = dict(LOOP_EXIT, comment="extra")
    assert client.post("/check_exists", json=doc).status_code == 422


def test_invalid_probabilities():
    doc = json.loads(json.dumps(LOOP_EXIT))
    doc["transitions"][1]["prob"] = 0.5
    response = client.post("/synthesize/approx", json=doc)
    assert response.status_code == 422
    assert "row sum" in response.json()["detail"]
