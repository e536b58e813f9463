import itertools

import numpy as np
import pytest

from twentyq.matrix import ResponseMatrix


def pair_loop_fraction(bits, questions):
    """Reference count of pairs split by a question set, one pair at a time."""
    L = len(bits)
    split = 0
    for i, j in itertools.combinations(range(L), 2):
        if any(bits[i][q] != bits[j][q] for q in questions):
            split += 1
    return split, L * (L - 1) // 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_matrix():
    return ResponseMatrix([[0, 1, 1, 0], [0, 0, 1, 0], [1, 1, 0, 1]],
                          ["a", "b", "c"], ["q0", "q1", "q2", "q3"])


def random_matrix(rng, L, K):
    return ResponseMatrix(rng.integers(0, 2, size=(L, K)))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def _report(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number} {name}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
