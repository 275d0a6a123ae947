import numpy as np
import pytest
from loguru import logger

from taylor_couette_lab.config import get_settings
from taylor_couette_lab.models import Annulus, FlowConfig
from taylor_couette_lab.services import build_services

@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch, tmp_path):

    monkeypatch.setenv("TCLAB_OUTPUT_DIR", str(tmp_path / "default-output"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    # the CLI rebinds loguru to the captured stderr of the finished test
    logger.remove()

@pytest.fixture
def lab():
    return build_services()

@pytest.fixture
def thresholds(lab):
    return lab.threshold_service

@pytest.fixture
def exact(lab):
    return lab.exact_flow_service

@pytest.fixture
def operators(lab):
    return lab.operator_service

@pytest.fixture
def solver(lab):
    return lab.solver_service

@pytest.fixture
def annulus():
    return Annulus(r_inner=1.0, r_outer=2.0)

@pytest.fixture
def below_threshold():
    return FlowConfig(viscosity=1.0, omega_inner=0.3, omega_outer=0.1)

@pytest.fixture
def convergence_order():
    """Least-squares slope of log(error) against log(h)."""

    def fit(spacings, errors):
        return float(np.polyfit(np.log(spacings), np.log(errors), 1)[0])

    return fit
