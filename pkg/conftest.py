import pytest

from core.sampling import SeededStream


@pytest.fixture
def stream():
    """A fixed sampling stream, so statistical tests are reproducible."""
    return SeededStream(0x5EED, 0)
