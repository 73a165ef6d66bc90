import numpy as np
import pytest
from hypothesis import settings, HealthCheck, strategies as st

from pairspec import PhysParams

settings.register_profile("pairspec", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pairspec")


def params_strategy(tau_min=1e-3, tau_max=1.0, mu_max=0.49):
    """Reduced parameters ``(mu_tilde, tau)`` drawn over the relativistic range."""
    return st.builds(PhysParams.from_reduced,
                     st.floats(-mu_max, mu_max), st.floats(tau_min, tau_max))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def equal():
    return PhysParams(0.5, 0.5, 1.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
