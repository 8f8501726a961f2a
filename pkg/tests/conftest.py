import numpy as np
import pytest
from hypothesis import strategies as st

from paritygnn.games import ParityGame


def small_game(rng: np.random.Generator, max_n: int = 8, max_degree: int = 3, max_color: int = 6) -> ParityGame:
    n = int(rng.integers(1, max_n + 1))
    succ = [
        sorted(rng.choice(n, size=int(rng.integers(1, min(max_degree, n) + 1)), replace=False))
        for _ in range(n)
    ]
    return ParityGame.from_lists(rng.integers(0, 2, n), rng.integers(0, max_color + 1, n), succ)


@st.composite
def games(draw, max_n=6, max_degree=3, max_color=5):
    n = draw(st.integers(1, max_n))
    owner = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    color = draw(st.lists(st.integers(0, max_color), min_size=n, max_size=n))
    succ = [
        sorted(draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=min(max_degree, n))))
        for _ in range(n)
    ]
    return ParityGame.from_lists(owner, color, succ)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line and assert it."""

    def check(number, title, ok, detail=""):
        _CRITERIA.append((number, title, bool(ok), detail))
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
