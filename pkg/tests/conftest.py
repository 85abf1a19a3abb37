import pytest

from levypassage.runner import RunContext

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
CRITERIA = {}


def record(number, passed, detail):
    prev = CRITERIA.get(number)
    if prev is not None:
        passed = passed and prev[0]
        detail = prev[1] + "; " + detail
    CRITERIA[number] = (bool(passed), detail)


@pytest.fixture(scope="session")
def ctx():
    """Shared run context: meander tables and excursion batches are built once."""
    return RunContext(master_seed=20240601)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
