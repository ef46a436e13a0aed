from __future__ import annotations

from dataclasses import dataclass, field

import pytest

from fraclap.harness import ConvergenceReport, run_study, table_config
from fraclap.solve import relative_residual


@dataclass
class TableRun:
    """Reports of one reference study plus every system it solved.

    ``systems`` maps (alpha, r, N) to (F, solution, normwise relative residual);
    matrices are not kept.
    """

    reports: list[ConvergenceReport]
    systems: dict = field(default_factory=dict)


def _run_table(table: int, solver: str) -> TableRun:
    run = TableRun([])

    def observe(alpha, r, A, F, sol):
        run.systems[(alpha, r, A.mesh.N)] = (F, sol, relative_residual(A, sol.values, F))

    run.reports = run_study(table_config(table, solver=solver), observer=observe)
    return run


@pytest.fixture(scope="session")
def table_run():
    cache: dict[tuple[int, str], TableRun] = {}

    def get(table: int, solver: str = "direct") -> TableRun:
        key = (table, solver)
        if key not in cache:
            cache[key] = _run_table(table, solver)
        return cache[key]

    return get


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number} ({title}): {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
