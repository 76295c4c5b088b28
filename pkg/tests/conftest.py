import numpy as np
import pytest


class PinnedRng:
    """Stands in for RngStream with every uniform draw fixed to ``value``."""

    def __init__(self, value=0.5):
        self.value = value
        self.seed = 0

    def uniform(self, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)

    def normal(self, size=None):
        return np.zeros(size)

    def spawn(self, key=0):
        return PinnedRng(self.value)


@pytest.fixture
def pinned_rng():
    return PinnedRng(0.5)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" in getattr(rep, "nodeid", "") and rep.when == "call":
                lines.append((rep.nodeid.split("::")[-1], "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
