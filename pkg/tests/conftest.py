"""
Pytest configuration and fixtures for socsec tests.
"""
from pathlib import Path

import numpy as np
import pytest

from core.gamma_approx import IntegralCache
from core.outage import clear_terms_cache
from core.params import SystemParams


@pytest.fixture
def project_root() -> Path:
    """Return the project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture
def temp_dir(tmp_path: Path) -> Path:
    """Return a temporary directory for test artifacts."""
    return tmp_path


@pytest.fixture
def params() -> SystemParams:
    """Published caption scenario."""
    return SystemParams()


@pytest.fixture
def small_params() -> SystemParams:
    """Compact scenario that keeps quadrature and simulation cheap."""
    return SystemParams(l1=2.0, l2=20.0, lg=2.0, d=10.0, c2=0.75, lam_e=0.005)


@pytest.fixture
def cache() -> IntegralCache:
    """Fresh integral cache, isolated from the module default."""
    return IntegralCache()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def fresh_terms_cache():
    """Start every test with an empty multi-eavesdropper terms cache."""
    clear_terms_cache()
    yield
    clear_terms_cache()
