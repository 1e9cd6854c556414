import os
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def wire():
    from gencon.scenarios import flat_wire
    return flat_wire(1.0)


@pytest.fixture(scope="session")
def monopole():
    from gencon.scenarios import dirac_monopole
    return dirac_monopole(1.0)


@pytest.fixture(scope="session")
def su2_linear():
    from gencon.scenarios import su2_singular
    return su2_singular(0.3, "linear")


@pytest.fixture(scope="session")
def su2_flat():
    from gencon.scenarios import su2_singular
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return su2_singular(0.3, "zero")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
