from datetime import datetime, timedelta

import pytest
from fastapi.testclient import TestClient

from main import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def run_payload(out: str, **fields) -> dict:
    payload = {
        "method": "gsadmm",
        "splits": 2,
        "widths": [6, 6],
        "blobs": {"classes": 3, "dim": 4, "per_class": 10},
        "epochs": 2,
        "hyperparams": {"batch_size": 8},
        "workers": 1,
        "out": out,
    }
    payload.update(fields)
    return payload


class TestHealth:

    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["success"] is True
        assert body["data"]["status"] == "healthy"


class TestRuns:

    def test_start_and_poll(self, client, tmp_path):
        response = client.post("/api/runs", json=run_payload(str(tmp_path / "run.csv")))
        assert response.status_code == 202
        run_id = response.json()["data"]["run_id"]

        # TestClient finishes background tasks before returning
        record = client.get(f"/api/runs/{run_id}").json()["data"]
        assert record["status"] == "completed"
        assert [row["epoch"] for row in record["rows"]] == [1, 2]
        assert record["summary"]["epochs"] == 2
        assert (tmp_path / "run.csv").exists()
        finished = datetime.fromisoformat(record["finished_at"].replace("Z", "+00:00"))
        assert finished.utcoffset() == timedelta(0)

        listed = client.get("/api/runs").json()["data"]
        assert run_id in [run["run_id"] for run in listed]

    def test_failed_run_is_recorded(self, client, tmp_path):
        payload = run_payload(str(tmp_path / "run.csv"), dataset="kmnist", data_root=str(tmp_path / "none"))
        run_id = client.post("/api/runs", json=payload).json()["data"]["run_id"]
        record = client.get(f"/api/runs/{run_id}").json()["data"]
        assert record["status"] == "failed"
        assert record["error_code"] == "DATASET_NOT_FOUND"

    def test_unknown_run(self, client):
        response = client.get("/api/runs/does-not-exist")
        assert response.status_code == 404
        body = response.json()
        assert body["success"] is False
        assert body["error_code"] == "RUN_NOT_FOUND"

    def test_invalid_config(self, client, tmp_path):
        response = client.post("/api/runs", json=run_payload(str(tmp_path / "x.csv"), method="sgd"))
        assert response.status_code == 422


class TestVerify:

    def test_empty_selection(self, client):
        response = client.post("/api/verify", json={"checks": []})
        assert response.status_code == 200
        data = response.json()["data"]
        assert data["passed"] is True and data["checks"] == []

    def test_selected_check(self, client):
        data = client.post("/api/verify", json={"checks": ["q_argmin"], "seed": 3}).json()["data"]
        assert data["passed"] is True
        assert data["checks"][0]["name"] == "q_argmin"

    def test_unknown_check(self, client):
        response = client.post("/api/verify", json={"checks": ["bogus"]})
        assert response.status_code == 422
        assert response.json()["error_code"] == "UNKNOWN_CHECK"
