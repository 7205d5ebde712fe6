import warnings

import pytest
from hypothesis import settings

warnings.filterwarnings("ignore", message=".*TBB.*")
settings.register_profile("lab", deadline=None, max_examples=40)
settings.load_profile("lab")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo runs")
