import re

import pytest

from gasketgrad.harmonic_algebra import build_family

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def fam3():
    return build_family(3)


@pytest.fixture(scope="session")
def fam4():
    return build_family(4)


@pytest.fixture
def criterion():
    """Record one acceptance line; call it with (label, passed, detail)."""

    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, bool(passed), detail))
        return passed

    return record


def _label_key(row):
    num = re.match(r"\d+", row[0])
    return (int(num.group()) if num else 0, row[0])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(_ACCEPTANCE, key=_label_key):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
