"""
Binary-symplectic representation of the n-qubit Pauli group.

A label ``a = (a_z, a_x)`` is a pair of n-bit integers; bit ``i`` refers to
qubit ``i``. The operator attached to a label is

    T_a = xi(a) Z(a_z) X(a_x),    xi(a) = (-i)^{|a_z & a_x|}

which is Hermitian and squares to the identity. A :class:`PauliObservable`
carries an extra phase ``i^k`` on top of ``T_a``; observables have
``k in {0, 2}``, products of anticommuting observables may carry ``k`` odd.

Labels are also packed into a single integer ``index = z | (x << n)``, which
is the ordering used by the dense hidden-variable tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

_CHARS = {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "Y"}
_BITS = {c: zx for zx, c in _CHARS.items()}


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class PauliParseError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class BitString2n:
    """A 2n-bit string ``(z, x)``; addition is bitwise XOR."""

    n: int
    z: int = 0
    x: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be nonnegative")
        limit = 1 << self.n
        if not (0 <= self.z < limit and 0 <= self.x < limit):
            raise ValueError(f"z/x must be {self.n}-bit strings")

    def __add__(self, other: BitString2n) -> BitString2n:
        _check_n(self.n, other.n)
        return BitString2n(self.n, self.z ^ other.z, self.x ^ other.x)

    __xor__ = __add__

    @property
    def index(self) -> int:
        return self.z | (self.x << self.n)

    @classmethod
    def from_index(cls, n: int, index: int) -> BitString2n:
        mask = (1 << n) - 1
        return cls(n, index & mask, index >> n)

    @property
    def weight(self) -> int:
        return (self.z | self.x).bit_count()

    def is_identity(self) -> bool:
        return self.z == 0 and self.x == 0

    def to_string(self) -> str:
        return "".join(
            _CHARS[(self.z >> i) & 1, (self.x >> i) & 1] for i in range(self.n)
        )

    def __str__(self) -> str:
        return self.to_string()


def _check_n(n1: int, n2: int) -> None:
    if n1 != n2:
        raise DimensionError(f"qubit counts differ: {n1} != {n2}")


def symplectic_form(a: BitString2n, b: BitString2n) -> int:
    """``[a, b] = a_x.b_z + a_z.b_x mod 2``; 0 iff ``T_a`` and ``T_b`` commute."""
    _check_n(a.n, b.n)
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() & 1


def symplectic_index(n: int, a: int, b: int) -> int:
    """Symplectic form on packed indices (hot path for the HVM tables)."""
    # (a >> n) and (b >> n) are already n-bit, so the AND drops the other half
    return (((a >> n) & b) ^ (a & (b >> n))).bit_count() & 1


def default_phase(a: BitString2n) -> int:
    """Exponent ``k`` with ``i^k Z(a_z) X(a_x)`` Hermitian: ``-|a_z & a_x| mod 4``."""
    return (-(a.z & a.x).bit_count()) % 4


@dataclass(frozen=True, order=True)
class PauliObservable:
    """``i^phase_exp * T_label`` with ``T_label`` in the default convention."""

    label: BitString2n
    phase_exp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @property
    def n(self) -> int:
        return self.label.n

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    @property
    def sign(self) -> int:
        if not self.is_hermitian:
            raise ValueError(f"{self!r} is not a Hermitian observable")
        return 1 if self.phase_exp == 0 else -1

    def __neg__(self) -> PauliObservable:
        return PauliObservable(self.label, self.phase_exp + 2)

    def __mul__(self, other: PauliObservable) -> PauliObservable:
        return multiply(self, other)

    def unsigned(self) -> PauliObservable:
        return PauliObservable(self.label, 0)

    def __str__(self) -> str:
        return format_pauli(self)

    # constructors -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> PauliObservable:
        return cls(BitString2n(n))

    @classmethod
    def single(cls, n: int, qubit: int, kind: str, sign: int = 1) -> PauliObservable:
        """Single-qubit ``X``/``Y``/``Z`` on ``qubit``."""
        if not 0 <= qubit < n:
            raise IndexError(f"qubit {qubit} out of range for n={n}")
        zb, xb = _BITS[kind.upper()]
        label = BitString2n(n, zb << qubit, xb << qubit)
        return cls(label, 0 if sign > 0 else 2)

    @classmethod
    def from_string(cls, text: str) -> PauliObservable:
        return parse_pauli(text)


def multiply(p: PauliObservable, q: PauliObservable) -> PauliObservable:
    """Exact operator product ``p q``, phase tracked as a power of ``i``."""
    a, b = p.label, q.label
    _check_n(a.n, b.n)
    c = a + b
    # Z(az)X(ax) Z(bz)X(bx) = (-1)^{ax.bz} Z(az+bz) X(ax+bx)
    swap = 2 * (a.x & b.z).bit_count()
    # xi(a) xi(b) / xi(a+b) = (-i)^{|a|+|b|-|a+b|}, |.| = overlap count
    overlap = (a.z & a.x).bit_count() + (b.z & b.x).bit_count() - (c.z & c.x).bit_count()
    return PauliObservable(c, p.phase_exp + q.phase_exp + swap - overlap)


def commutes(p: PauliObservable | BitString2n, q: PauliObservable | BitString2n) -> bool:
    a = p.label if isinstance(p, PauliObservable) else p
    b = q.label if isinstance(q, PauliObservable) else q
    return symplectic_form(a, b) == 0


def parse_pauli(text: str) -> PauliObservable:
    """Parse ``"-XZZ"``, ``"+IY"`` or ``"XX"``; character ``i`` is qubit ``i``."""
    s = text.strip()
    phase = 0
    if s[:1] in ("+", "-", "−"):
        phase = 0 if s[0] == "+" else 2
        s = s[1:]
    if not s:
        raise PauliParseError(f"empty Pauli string in {text!r}")
    z = x = 0
    for i, ch in enumerate(s):
        try:
            zb, xb = _BITS[ch.upper()]
        except KeyError:
            raise PauliParseError(f"invalid Pauli character {ch!r} at column {i + 1} in {text!r}") from None
        z |= zb << i
        x |= xb << i
    return PauliObservable(BitString2n(len(s), z, x), phase)


def format_pauli(p: PauliObservable) -> str:
    prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[p.phase_exp]
    return prefix + p.label.to_string()


def all_labels(n: int) -> Iterator[BitString2n]:
    for idx in range(1 << (2 * n)):
        yield BitString2n.from_index(n, idx)
