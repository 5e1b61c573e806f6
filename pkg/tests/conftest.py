import dataclasses

import numpy as np
import pytest

from asii_enhance.scene import ScenarioConfig

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    """Default geometry, shortened so end-to-end tests stay quick."""
    return dataclasses.replace(ScenarioConfig(), duration_s=1.5, repeats=2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
