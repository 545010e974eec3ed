import numpy as np
import pytest

from mixfid.ensembles import ginibre_batch, stream

_ACCEPTANCE = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None or call.when != "call":
        return
    number = mark.kwargs.get("criterion")
    title = mark.kwargs.get("title", item.name)
    passed = call.excinfo is None
    prev = _ACCEPTANCE.get(number)
    _ACCEPTANCE[number] = (title, passed and (prev is None or prev[1]))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture
def pairs():
    """Factory for seeded random density-matrix pairs of shape ``(n, d, d)``."""

    def make(d, n, seed=0, rank=None):
        rng = stream(seed, d)
        return ginibre_batch(d, n, rng, rank), ginibre_batch(d, n, rng, rank)

    return make


def rand_state(d, seed, rank=None):
    return ginibre_batch(d, 1, stream(seed), rank)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
