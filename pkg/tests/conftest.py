import pytest

from artifact.wick import log_z_series


@pytest.fixture(scope="session")
def log_series5():
    # order 5 enumerates 10! pairings, so build it once per session
    return log_z_series(5)
