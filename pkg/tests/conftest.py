import os

import pytest

from dfdscan.analysis import analyze_directory

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
MINIAPP = os.path.join(FIXTURES, "miniapp")


@pytest.fixture(scope="session")
def miniapp_path():
    return MINIAPP


@pytest.fixture(scope="session")
def miniapp_result():
    """One shared analysis of the miniapp fixture for read-only tests."""
    return analyze_directory(MINIAPP)
