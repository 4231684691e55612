import pytest
from fastapi.testclient import TestClient

from pmkit.system import routes
from pmkit.system.schemas import AppInfo, HealthStatus, RootResponse


def test_root_returns_welcome_message(client: TestClient) -> None:
    response = client.get("/")

    assert response.status_code == 200
    result = RootResponse.model_validate(response.json())
    assert result.message == "Welcome to pmkit"


def test_root_returns_links(client: TestClient) -> None:
    response = client.get("/")
    result = RootResponse.model_validate(response.json())
    rels = [link.rel for link in result.links]
    assert rels == ["plans", "opportunistic", "docs"]


def test_health_returns_healthy_status(client: TestClient) -> None:
    response = client.get("/health")

    assert response.status_code == 200
    result = HealthStatus.model_validate(response.json())
    assert result.status == "healthy"
    assert result.seasonal_costs.endswith("seasonal.yaml")
    assert result.detail is None


def test_health_degrades_without_cost_table(client: TestClient, monkeypatch: pytest.MonkeyPatch) -> None:
    def broken():
        raise ValueError("Expected a 'downtime' mapping")

    monkeypatch.setattr(routes, "load_seasonal_model", broken)

    result = HealthStatus.model_validate(client.get("/health").json())

    assert result.status == "degraded"
    assert "downtime" in (result.detail or "")


def test_info_reports_numerical_stack(client: TestClient) -> None:
    response = client.get("/info")

    assert response.status_code == 200
    result = AppInfo.model_validate(response.json())
    assert result.numpy_version
    assert result.scipy_version
    assert result.pandas_version
    assert result.default_grid_months == 600
    assert result.fixed_point_tolerance == 1e-8
