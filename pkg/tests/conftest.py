import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seedcodec import BlockConfig, build_pinv_cache, standard_cache  # noqa: E402


@pytest.fixture(scope="session")
def cache3():
    return standard_cache(3)


@pytest.fixture(scope="session")
def cache16():
    return standard_cache(16)


@pytest.fixture(scope="session")
def small_config():
    return BlockConfig(4, 2, 3)


@pytest.fixture(scope="session")
def small_pinv(small_config, cache3):
    return build_pinv_cache(small_config, cache3)


@pytest.fixture(scope="session")
def m4_pinv(cache16):
    return build_pinv_cache(BlockConfig.preset(4), cache16)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
