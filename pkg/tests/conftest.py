import os

# more workers than cores is fine; it lets tests compare thread counts
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np
import pytest

from graphgtn.graph import build_graph
from graphgtn.scoring import ScoreTable

A, B, C, D, E = range(5)
SOLID, DASHED = 0, 1


@pytest.fixture
def fig1_graph():
    return build_graph(
        [(A, B, SOLID), (B, C, DASHED), (A, D, DASHED), (D, C, SOLID), (D, E, DASHED)], 5, 2
    )


@pytest.fixture
def fig1_table():
    # rows: positions 1, 2; columns: solid, dashed
    return ScoreTable.from_rows([[2.0, 1.0], [3.0, 2.0]])


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
