import pytest
from hypothesis import HealthCheck, settings

from algothermo.machine import builtin

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def dyadic2():
    return builtin("dyadic2")


@pytest.fixture(scope="session")
def harmonic():
    return builtin("harmonic")


@pytest.fixture(scope="session")
def geohalf():
    return builtin("geometric-half")


@pytest.fixture(scope="session")
def vm():
    return builtin("sdvm")
