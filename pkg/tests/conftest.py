import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qrsim.link_physics import PhysicalParams

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def phys():
    return PhysicalParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Call ``criterion(ok, detail)`` once; records a PASS/FAIL line and asserts."""
    import time

    start = time.perf_counter()
    marker = request.node.get_closest_marker("criterion")
    label, limit = marker.args

    def check(ok: bool, detail: str):
        elapsed = time.perf_counter() - start
        in_time = elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        line = f"{status}  {label}: {detail}  [{elapsed:.1f} s, limit {limit:g} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert in_time, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
