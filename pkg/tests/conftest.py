import itertools
from functools import reduce

import numpy as np
import pytest

from qcsi_lab.pauli import BitString2n, PauliObservable

PAULI_2x2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def textbook_matrix(p: PauliObservable) -> np.ndarray:
    """Kronecker product of textbook 2x2 Paulis times the stored phase.

    Independent of the package: the string fixes the operator, qubit 0 is
    the last Kronecker factor (little-endian amplitudes).
    """
    s = p.label.to_string()
    mat = reduce(np.kron, [PAULI_2x2[c] for c in reversed(s)], np.eye(1, dtype=complex))
    return (1j ** p.phase_exp) * mat


def labels(n):
    return [BitString2n.from_index(n, k) for k in range(4 ** n)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_pauli_strings(n):
    return ["".join(t) for t in itertools.product("IXYZ", repeat=n)]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(k, ok, detail)`` records a pass/fail line, then asserts ``ok``."""

    def record(k, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
