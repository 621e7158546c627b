import math

import numpy as np
import pytest

from pointcasimir.model import ObstacleConfiguration


def random_admissible(rng: np.random.Generator, n: int, rho_max: float = 0.7,
                      ell: float = 1.0) -> ObstacleConfiguration:
    """Seeded random configuration with mixed strengths and ``rho <= rho_max``."""
    while True:
        alpha = rng.uniform(0.05, 0.3, size=n)
        pos = rng.uniform(-1.0, 1.0, size=(n, 3)) * rng.uniform(0.5, 3.0)
        cfg = ObstacleConfiguration(pos, alpha, ell)
        if cfg.n == 1 or cfg.rho <= rho_max:
            return cfg


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pair():
    """Two identical obstacles at rescaled distance 3."""
    return ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, 3.0]])


@pytest.fixture
def triple(rng):
    return random_admissible(rng, 3)


def single_closed_form(alpha: float, ell: float) -> float:
    return 2.0 * alpha * (1.0 - math.log(8.0 * math.pi * alpha * ell))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
