"""
Test cases for the HTTP API
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fastapi.testclient import TestClient

from api.main import app

client = TestClient(app)


def test_root_and_health():
    assert client.get("/").json()["documentation"] == "/docs"
    health = client.get("/health").json()
    assert health["status"] == "healthy"
    print("✓ Health check")


def test_validate_endpoint():
    valid = client.post("/validate/summary", json={"layer_id": 1, "timestamp": 1.0, "state_digest": "abc"})
    assert valid.status_code == 200
    assert valid.json()["status"] == "valid"

    repaired = client.post("/validate/plan", json={"goal_id": "g", "subgoals": [], "priority": 7})
    assert repaired.json()["status"] == "repaired"
    assert repaired.json()["message"]["priority"] == 1

    defaulted = client.post("/validate/policy", json=[1, 2, 3])
    assert defaulted.json()["status"] == "defaulted"
    assert defaulted.json()["message"] == {"rules": []}


def test_validate_unpaired_surrogate():
    body = b'{"layer_id": 1, "timestamp": 0.0, "state_digest": "\\ud800"}'
    response = client.post("/validate/summary", content=body, headers={"Content-Type": "application/json"})
    assert response.status_code == 200
    assert response.json()["status"] == "repaired"
    assert response.json()["message"]["state_digest"] == "?"


def test_validate_unknown_kind():
    assert client.post("/validate/memo", json={}).status_code == 400


def test_overhead_endpoint():
    rows = client.get("/overhead", params={"n_max": 3}).json()
    assert len(rows) == 9
    assert all(r["matches"] for r in rows)
    assert client.get("/overhead", params={"n_max": 0}).status_code == 422


def test_gain_endpoint():
    curve = client.post("/gain", json={"depth": 2, "trials": 50}).json()
    assert curve["seed"] == 42
    assert [p["depth"] for p in curve["points"]] == [1, 2]
    assert client.post("/gain", json={"depth": 0}).status_code == 422
    assert client.post("/gain", json={"depth": 2, "low": 2.0, "high": 1.0}).status_code == 400
    oversized = client.post("/gain", json={"depth": 32, "trials": 100_000, "n": 64})
    assert oversized.status_code == 400
    assert "limit" in oversized.json()["detail"]


def test_runs_endpoint():
    report = client.post("/runs", json={"name": "api", "horizon": 6}).json()
    assert report["name"] == "api" and report["mode"] == "ctha"
    assert len(report["traces"]) == 6
    assert report["aggregates"]["active_histogram"] == {"1": 4, "2": 2}

    single = client.post("/runs", params={"mode": "single-scale"}, json={"horizon": 3}).json()
    assert single["aggregates"]["messages"] == 0


def test_runs_rejects_bad_input():
    assert client.post("/runs", json={"seed": 1}).status_code == 400
    assert client.post("/runs", params={"mode": "chaos"}, json={"horizon": 3}).status_code == 400


if __name__ == "__main__":
    print("Testing API...")
    test_root_and_health()
    test_validate_endpoint()
    test_overhead_endpoint()
    print("\n✅ API tests passed!")
