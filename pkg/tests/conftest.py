from fractions import Fraction
from pathlib import Path

import pytest

from ergodic.polys import PolynomialFamily
from ergodic.systems import BernoulliShiftSystem, ProbabilityVector, TorusRotationSystem
from settings import config


@pytest.fixture(autouse=True)
def isolated_registry(tmp_path, monkeypatch):
    """Keeps every test away from the shared run registry."""
    monkeypatch.setattr(config, "registry_enabled", False)
    monkeypatch.setattr(config, "path_to_db", tmp_path / "registry" / "runs.db")


@pytest.fixture
def out_dir(tmp_path) -> Path:
    return tmp_path / "run"


@pytest.fixture
def fair_coin() -> ProbabilityVector:
    return ProbabilityVector((Fraction(1, 2), Fraction(1, 2)))


@pytest.fixture
def bernoulli_2d(fair_coin) -> BernoulliShiftSystem:
    return BernoulliShiftSystem(d=2, prob=fair_coin, master_seed=20240601)


@pytest.fixture
def bernoulli_1d(fair_coin) -> BernoulliShiftSystem:
    return BernoulliShiftSystem(d=1, prob=fair_coin, master_seed=7)


@pytest.fixture
def golden_rotation() -> TorusRotationSystem:
    return TorusRotationSystem(d=1, k=1, alphas=((0x9E3779B97F4A7C15,),), master_seed=3)


@pytest.fixture
def prop_family() -> PolynomialFamily:
    """Columns (3n^2, 8n^2) and (n^2, -n^2)."""
    return PolynomialFamily.from_coefficients([[[0, 0, 3], [0, 0, 8]], [[0, 0, 1], [0, 0, -1]]])


@pytest.fixture
def linear_family() -> PolynomialFamily:
    return PolynomialFamily.from_coefficients([[[0, 1]]])
