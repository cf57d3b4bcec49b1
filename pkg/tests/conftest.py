import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from streamsvm.data import Dataset, Example

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance lines collected during the session, printed at the end
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)


def random_stream(rng, n, dim, sparse=False):
    X = rng.standard_normal((n, dim))
    if sparse:
        X[rng.random((n, dim)) < 0.5] = 0.0
    y = np.where(rng.random(n) < 0.5, -1, 1)
    return Dataset.from_dense(X, y)


def pairs(X, y):
    return [(np.asarray(x, dtype=float), int(t)) for x, t in zip(X, y)]


class CountingStream:
    """Iterable that records how often each item is handed out."""

    def __init__(self, items):
        self.items = list(items)
        self.reads = np.zeros(len(self.items), dtype=np.int64)
        self.iterations = 0

    def __iter__(self):
        self.iterations += 1
        for i, item in enumerate(self.items):
            self.reads[i] += 1
            yield item


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_examples():
    return [Example.from_dense([1.0, 0.0], 1), Example.from_dense([-1.0, 0.0], -1)]
