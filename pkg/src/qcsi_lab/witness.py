"""Mermin GHZ witness: quantum value against the exhaustive noncontextual bound."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import oracle
from .oracle import DenseState
from .pauli import PauliObservable, format_pauli, parse_pauli
from .scheme import SchemeSpec

# coefficient, correlator
MERMIN_TERMS = ((1, "XXX"), (-1, "XZZ"), (-1, "ZXZ"), (-1, "ZZX"))


class WitnessError(ValueError):
    pass


@dataclass
class MerminReport:
    quantum_value: float
    hvm_max: int
    gap: float
    terms: list[dict]
    optimal_assignments: int
    noise: float = 0.0

    def as_record(self) -> dict:
        return {
            "quantum": self.quantum_value,
            "hvm_bound": float(self.hvm_max),
            "gap": self.gap,
            "optimal_assignments": self.optimal_assignments,
            "noise": self.noise,
            "terms": self.terms,
        }


def mermin_terms() -> list[tuple[int, PauliObservable]]:
    return [(c, parse_pauli(s)) for c, s in MERMIN_TERMS]


def mermin_quantum_value(state: DenseState) -> float:
    if state.n != 3:
        raise WitnessError(f"Mermin witness needs a 3-qubit state, got n={state.n}")
    return sum(c * oracle.pauli_expectation(state, p) for c, p in mermin_terms())


def mermin_value(assignment: dict[str, int]) -> int:
    """Witness value for local values ``{"X0": +-1, ..., "Z2": +-1}``.

    Correlator values are products of the local values; on disjoint
    supports the default-convention operators multiply with sign +1.
    """
    total = 0
    for c, s in MERMIN_TERMS:
        v = 1
        for q, kind in enumerate(s):
            v *= assignment[f"{kind}{q}"]
        total += c * v
    return total


def _assignments():
    keys = [f"{k}{q}" for q in range(3) for k in "XZ"]
    for vals in itertools.product((1, -1), repeat=len(keys)):
        yield dict(zip(keys, vals))


def mermin_hvm_bound() -> tuple[int, dict[str, int], int]:
    """Exhaustive maximum over the 64 local sign assignments.

    Returns ``(max value, first optimal assignment, number of optimal assignments)``.
    """
    best, arg, count = None, None, 0
    for a in _assignments():
        v = mermin_value(a)
        if best is None or v > best:
            best, arg, count = v, a, 1
        elif v == best:
            count += 1
    return best, arg, count


def contextuality_gap(scheme: SchemeSpec, state: DenseState, noise: float = 0.0) -> MerminReport:
    """Quantum witness value minus the noncontextual bound for ``scheme``."""
    if scheme.n != 3:
        raise WitnessError("scheme must act on 3 qubits")
    labels = scheme.measurable_labels
    for q in range(3):
        for k in "XZ":
            if PauliObservable.single(3, q, k).label.index not in labels:
                raise WitnessError(f"{k}{q} is not directly measurable in this scheme")
    if noise:
        state = oracle.depolarize(state, noise)
    terms = [
        {"coefficient": c, "observable": format_pauli(p), "expectation": oracle.pauli_expectation(state, p)}
        for c, p in mermin_terms()
    ]
    quantum = sum(t["coefficient"] * t["expectation"] for t in terms)
    bound, _, count = mermin_hvm_bound()
    return MerminReport(quantum, bound, quantum - bound, terms, count, noise)
