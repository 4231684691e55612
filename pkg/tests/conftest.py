import json
from pathlib import Path
from typing import Any

import pytest
from fastapi.testclient import TestClient

from pmkit.costs.schemas import CostParams
from pmkit.main import app
from pmkit.survival.schemas import WeibullParams

FIXTURES = Path(__file__).parent / "fixtures"

SHORT_LIFE = WeibullParams(theta=1.95e-6, kappa=3.0)
LONG_LIFE = WeibullParams(theta=8.386e-4, kappa=1.217)
FLAT_COSTS = CostParams(g=1.085, h0=0.13, h=0.308, m=0.008)
# Same PM side, with a corrective replacement that costs a long outage.
OUTAGE_COSTS = CostParams(g=3.0, h0=0.13, h=0.308, m=0.008)


@pytest.fixture
def client() -> TestClient:
    return TestClient(app)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def run_config() -> dict[str, Any]:
    return json.loads((FIXTURES / "farm_config.json").read_text(encoding="utf-8"))


@pytest.fixture
def write_config(tmp_path: Path):
    def write(payload: dict[str, Any], name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return write
