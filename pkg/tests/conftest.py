import numpy as np
import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


def record(k: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {k:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def dev_up_to_phase(A, B):
    A, B = np.asarray(A), np.asarray(B)
    i = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    c = A[i] / B[i]
    return float(np.max(np.abs(A / c - B)))
