"""Named gates: dense unitaries and exact Clifford conjugation of Paulis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import BitString2n, PauliObservable, multiply

SQRT1_2 = 1 / np.sqrt(2)

SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2,
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    # e^{-i pi/8 Z}
    "T": np.diag([np.exp(-1j * np.pi / 8), np.exp(1j * np.pi / 8)]),
}
TWO_QUBIT = {"CZ"}
CLIFFORD = {"I", "H", "S", "SDG", "X", "Y", "Z", "CZ"}

# Images of (Z, X) under conjugation U P U^dagger, as signed single-qubit kinds.
_SINGLE_IMAGES = {
    "I": (("Z", 1), ("X", 1)),
    "H": (("X", 1), ("Z", 1)),
    "S": (("Z", 1), ("Y", 1)),
    "SDG": (("Z", 1), ("Y", -1)),
    "X": (("Z", -1), ("X", 1)),
    "Y": (("Z", -1), ("X", -1)),
    "Z": (("Z", 1), ("X", -1)),
}


class GateError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple[int, ...]

    def __post_init__(self):
        name = self.name.upper()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        arity = 2 if name in TWO_QUBIT else 1
        if name not in SINGLE_QUBIT and name not in TWO_QUBIT:
            raise GateError(f"unknown gate {self.name!r}")
        if len(self.targets) != arity:
            raise GateError(f"gate {name} takes {arity} target(s), got {len(self.targets)}")
        if len(set(self.targets)) != len(self.targets):
            raise GateError(f"gate {name} has repeated targets {self.targets}")

    @property
    def is_clifford(self) -> bool:
        return self.name in CLIFFORD

    def check_range(self, n: int) -> None:
        for t in self.targets:
            if not 0 <= t < n:
                raise GateError(f"gate {self} target {t} out of range for n={n}")

    def __str__(self) -> str:
        return " ".join([self.name, *map(str, self.targets)])

    @classmethod
    def parse(cls, text: str) -> Gate:
        parts = text.split()
        if not parts:
            raise GateError("empty gate token")
        try:
            targets = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise GateError(f"non-integer target in gate {text!r}") from None
        return cls(parts[0], targets)


def conjugate(p: PauliObservable, gate: Gate) -> PauliObservable:
    """Return ``U p U^dagger`` exactly, for a Clifford ``gate``."""
    if not gate.is_clifford:
        raise GateError(f"gate {gate.name} is not Clifford")
    n = p.n
    gate.check_range(n)
    a = p.label

    def image(kind: str, q: int) -> PauliObservable:
        if gate.name == "CZ":
            i, j = gate.targets
            if kind == "Z" or q not in (i, j):
                return PauliObservable.single(n, q, kind)
            other = j if q == i else i
            return multiply(PauliObservable.single(n, q, "X"), PauliObservable.single(n, other, "Z"))
        if q != gate.targets[0]:
            return PauliObservable.single(n, q, kind)
        zimg, ximg = _SINGLE_IMAGES[gate.name]
        k, s = zimg if kind == "Z" else ximg
        return PauliObservable.single(n, q, k, s)

    # p = i^k (-i)^{|az&ax|} prod Z_q prod X_q
    out = PauliObservable.identity(n)
    for q in range(n):
        if (a.z >> q) & 1:
            out = multiply(out, image("Z", q))
    for q in range(n):
        if (a.x >> q) & 1:
            out = multiply(out, image("X", q))
    return PauliObservable(out.label, out.phase_exp + p.phase_exp - (a.z & a.x).bit_count())


_ORDER = {"I": 1, "H": 2, "X": 2, "Y": 2, "Z": 2, "CZ": 2, "S": 4, "SDG": 4}


def conjugate_inverse(p: PauliObservable, gate: Gate) -> PauliObservable:
    """Return ``U^dagger p U`` by applying forward conjugation order-1 times."""
    out = p
    for _ in range(_ORDER[gate.name] - 1):
        out = conjugate(out, gate)
    return out


def pull_back(p: PauliObservable, gates: list[Gate]) -> PauliObservable:
    """Heisenberg picture: measuring ``p`` after ``gates`` equals measuring the result before them."""
    out = p
    for g in reversed(gates):
        out = conjugate_inverse(out, g)
    return out


def single_qubit_label(n: int, qubit: int, kind: str) -> BitString2n:
    return PauliObservable.single(n, qubit, kind).label
