import numpy as np
import pytest

from finsler_lab import catalog

LISTED = [spec.name for spec in catalog.list_catalog()]
ALL_METRICS = LISTED + ["randers-const"]
FAMILY = [(), (1.0,), (0.3, -0.2), (0.0, 0.4)]


@pytest.fixture(params=ALL_METRICS)
def spec(request):
    return catalog.get_metric(request.param)


def batch(spec, count=8, offset=1):
    """Deterministic sample batch ``(x, y)`` for ``spec``."""
    return catalog.sample_points(spec, count, offset)


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
