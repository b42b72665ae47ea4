import numpy as np
import pytest

from chainfocus.harness.config import DATA_DIR
from chainfocus.portrait.scoring import SitterAssets, synthetic_sitter

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bundled_assets() -> SitterAssets:
    return SitterAssets.from_png(DATA_DIR / "sitter.png", DATA_DIR / "mask.png")


@pytest.fixture(scope="session")
def small_assets() -> SitterAssets:
    return synthetic_sitter(16, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
