from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pqntoda import toda

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@lru_cache(maxsize=None)
def model(family: str, n: int) -> toda.TodaModel:
    return toda.build_model(family, n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def points(n: int, k: int, seed: int = 0, box: float = 1.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-box, box, size=(k, 2 * n))


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
