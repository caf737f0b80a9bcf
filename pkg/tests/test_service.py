import pytest
from fastapi.testclient import TestClient

from evotree.service import app

from conftest import TEN_RETURNS


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def _scenarios_payload():
    return {"values": [[r] for r in TEN_RETURNS]}


def _generate_payload(**overrides):
    payload = {
        "scenarios": _scenarios_payload(),
        "structure": [2],
        "initial_population": 40,
        "population": 20,
        "iterations": 15,
        "seed": 7,
    }
    payload.update(overrides)
    return payload


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


class TestSimulate:
    def test_dimensions_and_determinism(self, client):
        request = {"paths": 20, "horizon": 3, "seed": 5, "mu": 0.001,
                   "omega": 1e-5, "alpha": 0.08, "beta": 0.9}
        a = client.post("/simulate", json=request).json()
        b = client.post("/simulate", json=request).json()
        assert a == b
        assert len(a["values"]) == 20 and len(a["values"][0]) == 3
        assert a["probs"] == [0.05] * 20

    def test_nonstationary_rejected(self, client):
        response = client.post(
            "/simulate",
            json={"paths": 5, "horizon": 1, "omega": 1e-4, "alpha": 0.6, "beta": 0.5},
        )
        assert response.status_code == 422
        assert "NonStationary" in response.json()["detail"]


class TestGenerate:
    def test_returns_tree_log_and_objective(self, client):
        response = client.post("/generate", json=_generate_payload())
        assert response.status_code == 200
        body = response.json()
        tree = body["tree"]
        assert tree["stages"] == 2 and tree["structure"] == [2]
        assert len(tree["nodes"]) == 3
        assert len(body["log"]) == 16
        bests = [row["best"] for row in body["log"]]
        assert body["objective"] == min(bests)

    def test_deterministic(self, client):
        a = client.post("/generate", json=_generate_payload()).json()
        b = client.post("/generate", json=_generate_payload()).json()
        assert a == b

    def test_invalid_structure_rejected(self, client):
        response = client.post(
            "/generate", json=_generate_payload(structure=[5, 3])
        )
        assert response.status_code == 422
        assert "NonMonotone" in response.json()["detail"]

    def test_bad_operator_mix_rejected(self, client):
        response = client.post(
            "/generate",
            json=_generate_payload(operators=[50, 10, 10, 10, 10, 10, 10, 10, 30]),
        )
        assert response.status_code == 422


class TestEmitLp:
    def _tree(self, client):
        return client.post("/generate", json=_generate_payload()).json()["tree"]

    def test_counts_match_formulas(self, client):
        tree = self._tree(client)
        response = client.post(
            "/emit-lp",
            json={"tree": tree, "kappa": 0.5, "budget": [100.0], "riskfree_rate": 0.01},
        )
        assert response.status_code == 200
        body = response.json()
        # 2 stages, no interior nodes, 2 leaves
        assert body["variables"] == 2 * 3 + 2 * 2
        assert body["constraints"] == 1 + 4 * 2
        assert body["lp"].startswith("\\")
        assert "Maximize" in body["lp"]

    def test_kappa_zero_objective_has_no_deviation_terms(self, client):
        tree = self._tree(client)
        body = client.post(
            "/emit-lp", json={"tree": tree, "kappa": 0.0, "budget": [100.0]}
        ).json()
        objective_line = body["lp"].split("Subject To")[0]
        assert "d_" not in objective_line

    def test_malformed_tree_rejected(self, client):
        tree = self._tree(client)
        tree["nodes"] = tree["nodes"][:-1]
        response = client.post(
            "/emit-lp", json={"tree": tree, "kappa": 0.0, "budget": [100.0]}
        )
        assert response.status_code == 422

    def test_budget_length_mismatch_rejected(self, client):
        tree = self._tree(client)
        response = client.post(
            "/emit-lp", json={"tree": tree, "kappa": 0.0, "budget": [100.0, 10.0]}
        )
        assert response.status_code == 422


class TestExperiment:
    def test_aggregates_per_mix(self, client):
        payload = {
            "scenarios": _scenarios_payload(),
            "structure": [2],
            "initial_population": 20,
            "population": 10,
            "iterations": 6,
            "seed": 1,
            "repetitions": 2,
            "operator_mixes": [
                [20, 10, 10, 20, 10, 10, 20, 10, 30],
                [50, 0, 0, 0, 0, 0, 50, 10, 30],
            ],
        }
        response = client.post("/experiment", json=payload)
        assert response.status_code == 200
        results = response.json()["results"]
        assert len(results) == 2
        for result in results:
            assert len(result["rows"]) == 7
            for row in result["rows"]:
                assert row["best_min"] <= row["best_mean"] <= row["best_max"]
