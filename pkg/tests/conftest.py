import numpy as np
import pytest

from grouphedge.core import Rounds


def random_rounds(seed: int, T: int = 200, d: int = 4, K: int = 3, p_active: float = 0.5,
                  always_on: bool = True) -> Rounds:
    """Random regression rounds with features and labels in [0, 1]."""
    rng = np.random.default_rng(seed)
    X = rng.random((T, d))
    act = (rng.random((T, K)) < p_active).astype(float)
    if always_on:
        act[:, -1] = 1.0
    theta = rng.random((K, d)) / d
    y = np.clip(np.einsum("td,td->t", X, theta[rng.integers(0, K, size=T)]) + 0.05 * rng.standard_normal(T), 0, 1)
    return Rounds(X, act, y, [f"g{i}" for i in range(K)])


@pytest.fixture
def small_rounds():
    return random_rounds(0)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line and assert on it."""

    def record(criterion: str, ok: bool, detail: str = "", gating: bool = True) -> None:
        status = "PASS" if ok else "FAIL"
        if not gating:
            status += " (non-gating)"
        line = f"{criterion}: {status}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        if gating:
            assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
