import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("exact", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("exact")

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""
    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
