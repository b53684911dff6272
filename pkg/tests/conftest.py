import numpy as np
import pytest

from mpemba import lindblad

MIXED_BLOCH = (0.52807291, 0.21585042, 0.02214326)
PURE_BLOCH = (0.0025964, -0.70710201, 0.70710678)


@pytest.fixture
def hot_qubit():
    return lindblad.davies_qubit(5.0, 1.0, 1.0, 10.0)


@pytest.fixture
def cold_qubit():
    return lindblad.davies_qubit(1.0, 1.0, 1.0, 0.0)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    A = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record a named acceptance verdict, then assert it."""
    def record(name: str, ok: bool, detail: str):
        ACCEPTANCE.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
