"""HTTP service behavior via the in-process ASGI test client."""

import pytest
from fastapi.testclient import TestClient

import statloc
from statloc.service.app import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    body = client.get("/health").json()
    assert body == {"status": "ok", "version": statloc.__version__}


# ---------------------------------------------------------------------------
# ising endpoints


def test_ising_exact_default(client):
    response = client.post("/ising/exact", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["width"] == 2 and body["boundary"] == "open"
    entries = body["entries"]
    assert len(entries) == 16
    assert [e["config"] for e in entries] == sorted(e["config"] for e in entries)
    by_config = {e["config"]: e["probability"] for e in entries}
    assert by_config["++++"] == pytest.approx(0.2731751799446433, rel=1e-15)
    assert sum(by_config.values()) == pytest.approx(1.0, abs=1e-12)


def test_ising_exact_too_large(client):
    response = client.post("/ising/exact", json={"width": 6, "height": 6})
    assert response.status_code == 400
    body = response.json()
    assert body["error"] == "CapacityError"
    assert "36" in body["message"]


def test_ising_exact_rejects_malformed_body(client):
    response = client.post("/ising/exact", json={"width": "wide"})
    assert response.status_code == 422


def test_unknown_fields_rejected_not_defaulted(client):
    # Spec fields placed at the top level instead of under "spec" must fail
    # loudly; silently falling back to the default geometry would return
    # plausible but wrong numbers.
    flat = client.post("/bell/distribution", json={"extent": 4, "b_deg": 60.0})
    assert flat.status_code == 422

    nested_typo = client.post(
        "/bell/distribution", json={"spec": {"b_degrees": 60.0}}
    )
    assert nested_typo.status_code == 422

    extra_in_rule = client.post(
        "/bell/distribution",
        json={"spec": {"rule": {"name": "singlet", "lam": 0.5}}},
    )
    assert extra_in_rule.status_code == 422


def test_ising_sample_deterministic(client):
    request = {"width": 3, "height": 3, "sweeps": 60, "seed": 11}
    first = client.post("/ising/sample", json=request)
    second = client.post("/ising/sample", json=request)
    assert first.status_code == 200
    assert first.json() == second.json()
    body = first.json()
    assert body["sweeps"] == 60 and body["seed"] == 11 and body["stream"] == 0
    assert 0.0 < body["acceptance_rate"] <= 1.0
    assert len(body["final_config"]) == 9
    assert set(body["final_config"]) <= {"+", "-"}
    assert sum(body["magnetization_histogram"].values()) == 60
    assert body["tv_distance"] is not None  # 9 sites: exact comparison feasible
    for stat in body["correlations"]:
        assert -1.0 <= stat["sampled"] <= 1.0
        assert stat["exact"] is not None

    other = client.post("/ising/sample", json={**request, "stream": 1})
    assert other.json() != body


# ---------------------------------------------------------------------------
# bell endpoints


def test_bell_distribution_sixty_degrees(client):
    response = client.post(
        "/bell/distribution", json={"spec": {"b_deg": 60.0}}
    )
    assert response.status_code == 200
    body = response.json()
    assert set(body["probabilities"]) == {"++", "+-", "-+", "--"}
    assert body["probabilities"]["++"] == pytest.approx(0.125, abs=1e-12)
    assert body["probabilities"]["+-"] == pytest.approx(0.375, abs=1e-12)
    assert body["correlation"] == pytest.approx(-0.5, abs=1e-12)
    assert body["right_marginal_plus"] == pytest.approx(0.5, abs=1e-12)
    assert body["n_configurations"] == 80
    assert body["survival_probability"] == pytest.approx(
        (1.0 - 0.003) ** 3, rel=1e-15
    )
    assert body["warnings"] == []


def test_bell_distribution_surfaces_warnings(client):
    response = client.post(
        "/bell/distribution",
        json={"spec": {"extent": 2, "epsilon": 0.25, "b_deg": 60.0}},
    )
    assert response.status_code == 200
    body = response.json()
    assert len(body["warnings"]) == 1
    assert "survival probability" in body["warnings"][0]
    # outcome law unchanged by the large epsilon
    assert body["probabilities"]["++"] == pytest.approx(0.125, abs=1e-12)


def test_bell_distribution_rejects_bad_geometry(client):
    response = client.post(
        "/bell/distribution", json={"spec": {"detector_right": -1}}
    )
    assert response.status_code == 400
    body = response.json()
    assert body["error"] == "SpecError"
    assert "strictly right" in body["message"]


def test_rule_validation_shapes(client):
    # strength on the singlet rule: rejected while parsing the request
    response = client.post(
        "/bell/distribution",
        json={"spec": {"rule": {"name": "singlet", "strength": 0.5}}},
    )
    assert response.status_code == 422
    # missing strength on the signalling rule: also a parse error
    response = client.post(
        "/bell/distribution",
        json={"spec": {"rule": {"name": "signalling"}}},
    )
    assert response.status_code == 422
    # out-of-range strength parses but fails domain validation
    response = client.post(
        "/bell/distribution",
        json={"spec": {"rule": {"name": "signalling", "strength": 1.5}}},
    )
    assert response.status_code == 400
    assert response.json()["error"] == "ValueError"


# ---------------------------------------------------------------------------
# campaign endpoints


def test_locality_endpoint(client):
    response = client.post("/bell/locality", json={"target": "bell", "trials": 5})
    assert response.status_code == 200
    body = response.json()
    assert body["campaign"] == "locality-audit"
    assert body["passed"] is True
    assert len(body["checks"]) == 5
    assert body["seed"] == 20240817


def test_chsh_scan_endpoint(client):
    response = client.post(
        "/bell/chsh-scan", json={"angles_deg": [0.0, 45.0, 90.0, 135.0]}
    )
    body = response.json()
    assert response.status_code == 200
    assert body["passed"] is True
    assert body["checks"][-1]["check_id"] == "max-abs-s"
    assert sorted(body["metadata"]["best_angles_deg"]) == [0.0, 45.0, 90.0, 135.0]


def test_free_will_endpoint_default_settings(client):
    response = client.post("/bell/free-will", json={"workers": 2})
    body = response.json()
    assert response.status_code == 200
    assert body["campaign"] == "free-will-suite"
    assert body["passed"] is True
    assert len(body["checks"]) == 6  # four default settings, all pairs


def test_no_signalling_endpoint(client):
    response = client.post(
        "/bell/no-signalling", json={"settings_deg": [[0, 0], [0, 90]]}
    )
    body = response.json()
    assert response.status_code == 200
    assert body["passed"] is True
    assert len(body["checks"]) == 4


def test_signalling_demo_endpoint(client):
    response = client.post("/bell/signalling-demo", json={"strength": 0.55})
    body = response.json()
    assert response.status_code == 200
    assert body["passed"] is True
    assert body["metadata"]["strength"] == 0.55
    by_id = {c["check_id"]: c for c in body["checks"]}
    assert by_id["alice-marginal-00"]["observed"] == pytest.approx(0.775, abs=1e-12)
