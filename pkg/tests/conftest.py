"""Shared fixtures and the acceptance-criteria summary hook."""

import pytest

_CRITERIA = {}


@pytest.fixture(scope="session")
def criteria():
    """Callable the acceptance tests use to log one verdict per criterion."""

    def record(number, label, ok, detail=""):
        _CRITERIA[number] = (label, bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        label, ok, detail = _CRITERIA[num]
        verdict = "PASS" if ok else "FAIL"
        line = f"criterion {num} [{verdict}] {label}"
        if detail:
            line += f" :: {detail}"
        tr.write_line(line, green=ok, red=not ok)
