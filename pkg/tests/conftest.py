from __future__ import annotations

import time

import pytest

from spawnnet.engine import SimConfig, run

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def million_run():
    start = time.perf_counter()
    result = run(SimConfig(max_nodes=1_000_000))
    elapsed = time.perf_counter() - start
    return result, elapsed


@pytest.fixture(scope="session")
def small_run():
    return run(SimConfig(max_nodes=100))


@pytest.fixture
def acceptance_line():
    def record(criterion: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
