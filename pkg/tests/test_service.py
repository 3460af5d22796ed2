"""HTTP service: endpoint behavior and error mapping."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from helpers import make_pool
from nnpool.pool import write_pool
from nnpool.service.app import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


@pytest.fixture()
def pool_files(tmp_path):
    rng = np.random.default_rng(0)
    pool = make_pool(rng, 100, 4)
    man = tmp_path / "p.jsonl"
    vec = tmp_path / "p.vec"
    write_pool(pool, man, vec)
    return pool, str(man), str(vec)


def load_pool_id(client, pool_files):
    _, man, vec = pool_files
    resp = client.post("/pools", json={"manifest_path": man, "vectors_path": vec})
    assert resp.status_code == 200, resp.text
    return resp.json()["pool_id"]


def build_index_id(client, pool_id):
    resp = client.post("/indexes", json={"pool_id": pool_id})
    assert resp.status_code == 200, resp.text
    return resp.json()["index_id"]


class TestHealthAndPools:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_load_pool_and_info(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        info = client.get(f"/pools/{pool_id}")
        assert info.status_code == 200
        assert info.json() == {"pool_id": pool_id, "count": 100, "dim": 4}

    def test_sequential_ids(self, client, pool_files):
        a = load_pool_id(client, pool_files)
        b = load_pool_id(client, pool_files)
        assert a != b
        assert a.startswith("pool-") and b.startswith("pool-")

    def test_stats_match_library(self, client, pool_files):
        from nnpool.pool import pool_stats

        pool, _, _ = pool_files
        pool_id = load_pool_id(client, pool_files)
        resp = client.get(f"/pools/{pool_id}/stats")
        assert resp.status_code == 200
        assert resp.json() == pool_stats(pool).to_dict()

    def test_unknown_pool_404(self, client):
        resp = client.get("/pools/pool-999")
        assert resp.status_code == 404
        assert "pool-999" in resp.json()["detail"]

    def test_bad_pool_path_400(self, client, tmp_path):
        resp = client.post(
            "/pools",
            json={
                "manifest_path": str(tmp_path / "no.jsonl"),
                "vectors_path": str(tmp_path / "no.vec"),
            },
        )
        assert resp.status_code == 400
        assert "error" in resp.json()


class TestIndexes:
    def test_build_and_search(self, client, pool_files):
        pool, _, _ = pool_files
        pool_id = load_pool_id(client, pool_files)
        index_id = build_index_id(client, pool_id)
        q = pool.vectors[13].astype(float).tolist()
        resp = client.post(f"/indexes/{index_id}/search", json={"query": q, "k": 3})
        assert resp.status_code == 200
        neighbors = resp.json()["neighbors"]
        assert len(neighbors) == 3
        assert neighbors[0]["row"] == 13
        assert neighbors[0]["distance"] == 0.0

    def test_search_wrong_dim_400(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        index_id = build_index_id(client, pool_id)
        resp = client.post(
            f"/indexes/{index_id}/search", json={"query": [0.0, 1.0], "k": 2}
        )
        assert resp.status_code == 400
        assert "dim" in resp.json()["detail"].lower()

    def test_search_k_too_large_400(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        index_id = build_index_id(client, pool_id)
        resp = client.post(
            f"/indexes/{index_id}/search", json={"query": [0.0] * 4, "k": 101}
        )
        assert resp.status_code == 400

    def test_unknown_index_404(self, client):
        resp = client.post(
            "/indexes/index-7/search", json={"query": [0.0], "k": 1}
        )
        assert resp.status_code == 404

    def test_index_for_missing_pool_404(self, client):
        resp = client.post("/indexes", json={"pool_id": "pool-42"})
        assert resp.status_code == 404


class TestRetrieveEndpoint:
    def test_retrieve_with_exclusions(self, client, pool_files):
        pool, _, _ = pool_files
        pool_id = load_pool_id(client, pool_files)
        index_id = build_index_id(client, pool_id)
        rng = np.random.default_rng(1)
        body = {
            "queries": rng.normal(size=(2, 4)).tolist(),
            "r": 10,
            "exclude_languages": ["en"],
        }
        resp = client.post(f"/indexes/{index_id}/retrieve", json=body)
        assert resp.status_code == 200
        data = resp.json()
        assert len(data["items"]) == 10
        assert all(it["language"] != "en" for it in data["items"])
        assert sum(data["provenance"].values()) == 10
        texts = [it["text"] for it in data["items"]]
        assert len(set(texts)) == len(texts)

    def test_shortfall_maps_to_409(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        index_id = build_index_id(client, pool_id)
        body = {"queries": [[0.0] * 4], "r": 1000}
        resp = client.post(f"/indexes/{index_id}/retrieve", json=body)
        assert resp.status_code == 409
        assert "1000" in resp.json()["detail"]

    def test_mmr_options_accepted(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        index_id = build_index_id(client, pool_id)
        body = {
            "queries": [[0.5, -0.5, 0.25, 1.0]],
            "r": 5,
            "mmr": {"lam": 0.5},
        }
        resp = client.post(f"/indexes/{index_id}/retrieve", json=body)
        assert resp.status_code == 200
        assert len(resp.json()["items"]) == 5


class TestModels:
    def test_train_and_predict(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        resp = client.post(
            "/models", json={"pool_id": pool_id, "epochs": 2, "rng_seed": 0}
        )
        assert resp.status_code == 200, resp.text
        info = resp.json()
        assert info["epochs_run"] == 2
        model_id = info["model_id"]

        pred = client.post(
            f"/models/{model_id}/predict", json={"vector": [0.1, -0.2, 0.3, 0.0]}
        )
        assert pred.status_code == 200
        body = pred.json()
        assert 0.0 < body["probability"] < 1.0
        assert body["label"] == int(body["probability"] >= 0.5)

    def test_train_with_validation_pool(self, client, pool_files, tmp_path):
        rng = np.random.default_rng(2)
        vpool = make_pool(rng, 30, 4)
        vman, vvec = tmp_path / "v.jsonl", tmp_path / "v.vec"
        write_pool(vpool, vman, vvec)
        pool_id = load_pool_id(client, pool_files)
        vresp = client.post(
            "/pools", json={"manifest_path": str(vman), "vectors_path": str(vvec)}
        )
        val_id = vresp.json()["pool_id"]
        resp = client.post(
            "/models",
            json={"pool_id": pool_id, "val_pool_id": val_id, "epochs": 3},
        )
        assert resp.status_code == 200
        assert resp.json()["best_epoch"] is not None

    def test_predict_wrong_dim_400(self, client, pool_files):
        pool_id = load_pool_id(client, pool_files)
        resp = client.post("/models", json={"pool_id": pool_id, "epochs": 1})
        model_id = resp.json()["model_id"]
        pred = client.post(f"/models/{model_id}/predict", json={"vector": [1.0]})
        assert pred.status_code == 400

    def test_unknown_model_404(self, client):
        resp = client.post("/models/model-1/predict", json={"vector": [0.0]})
        assert resp.status_code == 404
