# tests/conftest.py
import pytest

from common.logging_config import configure_logging


@pytest.fixture(autouse=True)
def quiet_logging():
    """Point structlog at the current stderr so no test writes to a stream a previous test closed."""
    configure_logging("WARNING")
    yield
