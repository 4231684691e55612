from typing import Any

from fastapi.testclient import TestClient

from pmkit.planner.schemas import OpportunisticResponse, PlanResponse


def plan_request(**overrides: Any) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "baseline": {"theta": 1.95e-6, "kappa": 3.0},
        "costs": {"mode": "flat", "flat": {"g": 10.0, "h0": 0.1, "h": 0.1, "m": 0.0}},
        "s": 15,
        "T": 21,
        "units": [{"id": "OLD", "age": 150}, {"id": "N1", "age": 0}, {"id": "N2", "age": 0}],
    }
    payload.update(overrides)
    return payload


def test_create_plan_returns_next_pm(client: TestClient) -> None:
    response = client.post("/plans", json=plan_request())

    assert response.status_code == 200
    result = PlanResponse.model_validate(response.json())
    assert result.t_star == 16
    assert "OLD" in result.replace
    assert result.c > 0


def test_create_plan_for_new_farm_plans_nothing(client: TestClient) -> None:
    request = plan_request(
        costs={"mode": "flat", "flat": {"g": 1.085, "h0": 0.13, "h": 0.308, "m": 0.008}},
        units=[{"id": "T01", "age": 0}, {"id": "T02", "age": 0}],
    )

    response = client.post("/plans", json=request)

    assert response.status_code == 200
    result = PlanResponse.model_validate(response.json())
    assert result.no_pm
    assert result.t_star is None
    assert result.replace == []


def test_create_plan_rejects_invalid_window(client: TestClient) -> None:
    response = client.post("/plans", json=plan_request(T=15))

    assert response.status_code == 422


def test_create_plan_rejects_invalid_costs(client: TestClient) -> None:
    response = client.post("/plans", json=plan_request(costs={"mode": "flat"}))

    assert response.status_code == 422


def test_opportunistic_plan_adds_worn_components(client: TestClient) -> None:
    response = client.post("/plans/opportunistic", json={**plan_request(), "failed_id": "N1"})

    assert response.status_code == 200
    result = OpportunisticResponse.model_validate(response.json())
    assert result.replace == ["OLD", "N1"]


def test_opportunistic_plan_rejects_unknown_unit(client: TestClient) -> None:
    response = client.post("/plans/opportunistic", json={**plan_request(), "failed_id": "X"})

    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "unknown_unit"
