from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from functal import linalg as la

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def int_matrices(rows, cols, lo=-3, hi=3):
    """Strategy for exact integer matrices of a fixed shape."""
    return st.lists(st.integers(lo, hi), min_size=rows * cols, max_size=rows * cols).map(
        lambda xs: la.as_exact(np.array(xs, dtype=object).reshape(rows, cols)))


@st.composite
def square_and_rows(draw, n_max=5, r_max=3):
    n = draw(st.integers(1, n_max))
    r = draw(st.integers(1, r_max))
    return draw(int_matrices(n, n)), draw(int_matrices(r, n))


def frac_matrix(rows) -> np.ndarray:
    return la.as_exact([[Fraction(x) for x in r] for r in rows])


# one line per acceptance criterion, printed after the test run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
