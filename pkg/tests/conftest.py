import pytest
from hypothesis import HealthCheck, settings

from torusflow import (
    GridSpec,
    commutator_constant,
    random_solenoidal_init,
)

settings.register_profile(
    "suite",
    max_examples=25,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(8)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture(scope="session")
def random_fields_16(grid16):
    """Twenty seeded unit-H^2 solenoidal fields, shared across tests."""
    return [random_solenoidal_init(grid16, 2.0, seed) for seed in range(20)]


@pytest.fixture(scope="session")
def advection_constant_16(grid16):
    """Empirical commutator constant over a 200-field battery at s = 2."""
    fields = [random_solenoidal_init(grid16, 2.0, seed) for seed in range(200)]
    return commutator_constant(fields, 2.0)


def diff_norm(a, b, s=0.0):
    from torusflow import sobolev_norm

    return sobolev_norm(a.with_coeffs(a.coeffs - b.coeffs), s)


@pytest.fixture(scope="session")
def helpers():
    class H:
        diff_norm = staticmethod(diff_norm)

        @staticmethod
        def rel_diff(a, b, s=0.0):
            from torusflow import sobolev_norm

            return diff_norm(a, b, s) / sobolev_norm(b, s)

    return H
