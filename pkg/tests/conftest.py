import os

import pytest

from msdg.coefficients import sin_plus_2
from msdg.solution import cached_reference

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ref_cache(tmp_path_factory):
    path = os.environ.get("MSDG_REF_CACHE")
    if path:
        os.makedirs(path, exist_ok=True)
        return path
    return str(tmp_path_factory.mktemp("refcache"))


@pytest.fixture(scope="session")
def ref_sinp2_005(ref_cache):
    return cached_reference(ref_cache, sin_plus_2(), 0.005)


@pytest.fixture(scope="session")
def ref_sinp2_001(ref_cache):
    return cached_reference(ref_cache, sin_plus_2(), 0.001)


@pytest.fixture
def acceptance_line():
    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
