"""Shared fixtures: fixture markets, fresh services and the corpus size option."""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from config import settings  # noqa: E402
from market_core import load_market  # noqa: E402

FIXTURES = Path(__file__).parent.parent / settings.fixtures_dir


def pytest_addoption(parser):
    parser.addoption("--full-corpus", action="store_true", default=False,
                     help="Run the property checks over seeds 1-500 instead of 1-40")


def pytest_generate_tests(metafunc):
    if "seed" in metafunc.fixturenames:
        last = 500 if metafunc.config.getoption("--full-corpus") else 40
        metafunc.parametrize("seed", range(1, last + 1))


@pytest.fixture
def fixture_path():
    def resolve(name: str) -> str:
        return str(FIXTURES / name)
    return resolve


@pytest.fixture
def load():
    """(market, profile) of a fixture document."""
    def read(name: str):
        return load_market(FIXTURES / name)
    return read
