import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hawkthresh.imagery import Histogram

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def sparse_histogram(seed: int, occupied: int = 32, max_count: int = 1000) -> Histogram:
    """Random histogram with exactly ``occupied`` non-empty bins."""
    rng = np.random.default_rng(seed)
    counts = np.zeros(256, dtype=np.int64)
    counts[rng.choice(256, occupied, replace=False)] = rng.integers(1, max_count, occupied)
    return Histogram(counts)


def two_spike(a: int = 49, b: int = 199, n: int = 500) -> Histogram:
    """Spikes at pixel values ``a`` and ``b`` (gray levels ``a+1``, ``b+1``)."""
    return Histogram.from_counts({a: n, b: n})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance reporting -----------------------------------------------------

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one status line per criterion; printed again in the summary."""

    def record(number: int, status: str, detail: str) -> str:
        line = f"criterion {number}: {status} - {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
