"""
Dense quantum-mechanical reference simulator.

Amplitude ordering is little-endian: basis index ``k`` has qubit ``i`` in
bit ``i`` of ``k`` (qubit 0 fastest). Density matrices use the same
ordering on both axes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .gates import SINGLE_QUBIT, Gate
from .pauli import BitString2n, PauliObservable, format_pauli, multiply

MAX_PURE_QUBITS = 14
MAX_MIXED_QUBITS = 7
TOL = 1e-10


class OracleError(ValueError):
    pass


class StabilizerError(OracleError):
    pass


@dataclass
class DenseState:
    n: int
    data: np.ndarray
    kind: str = "pure"  # "pure" | "mixed"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        dim = 1 << self.n
        if self.kind == "pure":
            if self.n > MAX_PURE_QUBITS:
                raise OracleError(f"pure-state bound is n <= {MAX_PURE_QUBITS}")
            if self.data.shape != (dim,):
                raise OracleError(f"expected {dim} amplitudes, got shape {self.data.shape}")
        elif self.kind == "mixed":
            if self.n > MAX_MIXED_QUBITS:
                raise OracleError(f"density-matrix bound is n <= {MAX_MIXED_QUBITS}")
            if self.data.shape != (dim, dim):
                raise OracleError(f"expected {dim}x{dim} density matrix, got {self.data.shape}")
        else:
            raise OracleError(f"unknown state kind {self.kind!r}")

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def copy(self) -> DenseState:
        return DenseState(self.n, self.data.copy(), self.kind)

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> DenseState:
        return DenseState(self.n, self.density_matrix().copy(), "mixed")

    def check(self, tol: float = TOL) -> None:
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1) > tol:
                raise OracleError(f"state norm {norm} != 1")
            return
        rho = self.data
        if not np.allclose(rho, rho.conj().T, atol=tol):
            raise OracleError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > tol:
            raise OracleError("density matrix trace != 1")
        if np.linalg.eigvalsh(rho).min() < -tol:
            raise OracleError("density matrix is not positive semidefinite")


# --- preparation ---------------------------------------------------------

def zeros(n: int) -> DenseState:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    return DenseState(n, psi)


def basis_state(n: int, bits: int) -> DenseState:
    psi = np.zeros(1 << n, dtype=complex)
    psi[bits] = 1
    return DenseState(n, psi)


def maximally_mixed(n: int) -> DenseState:
    dim = 1 << n
    return DenseState(n, np.eye(dim, dtype=complex) / dim, "mixed")


def custom(amplitudes, n: int | None = None) -> DenseState:
    psi = np.asarray(amplitudes, dtype=complex)
    if n is None:
        n = int(round(np.log2(psi.size)))
    state = DenseState(n, psi)
    state.check(1e-12)
    return state


def plus_state(n: int) -> DenseState:
    return DenseState(n, np.full(1 << n, (1 << n) ** -0.5, dtype=complex))


def stabilizer_rank(stabilizers: list[PauliObservable]) -> int:
    """Dimension of the joint +1 eigenspace of commuting signed Paulis.

    ``tr prod (I + g)/2 = 2^{n-m} * sum over subsets of the product's sign``
    when the product is +-I, which needs only Pauli algebra.
    """
    n = stabilizers[0].n
    m = len(stabilizers)
    total = 0
    for bits in itertools.product((0, 1), repeat=m):
        prod = PauliObservable.identity(n)
        for g, b in zip(stabilizers, bits):
            if b:
                prod = multiply(prod, g)
        if prod.label.is_identity():
            total += {0: 1, 2: -1}[prod.phase_exp]
    numer = total * (1 << n)
    assert numer % (1 << m) == 0
    return numer >> m


def ghz_from_stabilizers(stabilizers: list[PauliObservable], seed: int = 7) -> DenseState:
    """Unique joint +1 eigenstate of ``stabilizers`` via projector products."""
    if not stabilizers:
        raise StabilizerError("empty stabilizer list")
    n = stabilizers[0].n
    for g, h in itertools.combinations(stabilizers, 2):
        if multiply(g, h) != multiply(h, g):
            raise StabilizerError(f"{format_pauli(g)} and {format_pauli(h)} do not commute")
    rank = stabilizer_rank(stabilizers)
    if rank == 0:
        raise StabilizerError("stabilizers are inconsistent (empty joint eigenspace)")
    if rank > 1:
        raise StabilizerError(f"stabilizers do not fix a unique state (rank {rank})")
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    for g in stabilizers:
        psi = 0.5 * (psi + apply_pauli(g, psi))
    psi /= np.linalg.norm(psi)
    return DenseState(n, psi)


GHZ_STABILIZERS = ("+XXX", "-XZZ", "-ZXZ", "-ZZX")


def ghz() -> DenseState:
    from .pauli import parse_pauli

    return ghz_from_stabilizers([parse_pauli(s) for s in GHZ_STABILIZERS])


def prepare(kind: str, n: int, arg=None) -> DenseState:
    if kind == "zeros":
        return zeros(n)
    if kind == "maximally_mixed":
        return maximally_mixed(n)
    if kind == "ghz_from_stabilizers":
        return ghz_from_stabilizers(list(arg))
    if kind == "custom":
        return custom(arg, n)
    raise OracleError(f"unknown preparation {kind!r}")


# --- Pauli action --------------------------------------------------------

def _pauli_phases(p: PauliObservable) -> tuple[int, np.ndarray]:
    """``P|k> = coeff[k] |k ^ x>`` for every basis index ``k``."""
    n = p.n
    a = p.label
    k = np.arange(1 << n, dtype=np.int64)
    # Z(z) X(x) |k> = (-1)^{|z & (k^x)|} |k^x>; overall i^phase * (-i)^{|z&x|}
    parity = np.bitwise_count((k ^ a.x) & a.z) & 1
    scalar = 1j ** ((p.phase_exp - (a.z & a.x).bit_count()) % 4)
    return a.x, scalar * (1 - 2 * parity.astype(float))


def apply_pauli(p: PauliObservable, arr: np.ndarray) -> np.ndarray:
    """Apply ``p`` along axis 0 of ``arr`` (vector or matrix)."""
    x, coeff = _pauli_phases(p)
    k = np.arange(arr.shape[0])
    out = np.empty_like(arr, dtype=complex)
    shape = (-1,) + (1,) * (arr.ndim - 1)
    out[k ^ x] = coeff.reshape(shape) * arr
    return out


def pauli_matrix(p: PauliObservable) -> np.ndarray:
    return apply_pauli(p, np.eye(1 << p.n, dtype=complex))


def pauli_expectation(state: DenseState, p: PauliObservable) -> float:
    if p.n != state.n:
        raise OracleError(f"observable on {p.n} qubits, state has {state.n}")
    if state.is_pure:
        val = np.vdot(state.data, apply_pauli(p, state.data))
    else:
        val = np.trace(apply_pauli(p, state.data))
    if abs(val.imag) > TOL:
        raise OracleError(f"expectation of {format_pauli(p)} has imaginary part {val.imag}")
    return float(val.real)


def project_pauli(state: DenseState, p: PauliObservable, outcome: int) -> tuple[float, DenseState | None]:
    """Probability of ``outcome`` and the normalized post-measurement state."""
    s = 1 if outcome > 0 else -1
    if state.is_pure:
        proj = 0.5 * (state.data + s * apply_pauli(p, state.data))
        prob = float(np.vdot(proj, proj).real)
        if prob < 1e-15:
            return 0.0, None
        return prob, DenseState(state.n, proj / np.sqrt(prob))
    left = 0.5 * (state.data + s * apply_pauli(p, state.data))
    # (Pi rho) Pi = ((Pi (Pi rho)^dagger))^dagger
    both = 0.5 * (left + s * apply_pauli(p, left.conj().T).conj().T)
    prob = float(np.trace(both).real)
    if prob < 1e-15:
        return 0.0, None
    return prob, DenseState(state.n, both / prob, "mixed")


def measure_pauli(state: DenseState, p: PauliObservable, rng: np.random.Generator):
    """Projective measurement: returns ``(outcome, collapsed state, probability)``."""
    p_plus = min(max((1 + pauli_expectation(state, p)) / 2, 0.0), 1.0)
    outcome = 1 if rng.random() < p_plus else -1
    prob, post = project_pauli(state, p, outcome)
    return outcome, post, prob


# --- single-qubit operators and gates ------------------------------------

def apply_single(state: DenseState, u: np.ndarray, qubit: int) -> DenseState:
    """Apply a 2x2 matrix to ``qubit`` (ket side only; densities get U rho U^dagger)."""
    n = state.n
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for n={n}")
    axis = n - 1 - qubit

    def act(vec):
        t = vec.reshape((2,) * n + vec.shape[1:])
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
        return t.reshape(vec.shape)

    if state.is_pure:
        return DenseState(n, act(state.data))
    rho = act(state.data)
    rho = act(rho.conj().T).conj().T
    return DenseState(n, rho, "mixed")


def _cz_diag(n: int, i: int, j: int) -> np.ndarray:
    k = np.arange(1 << n)
    return 1 - 2 * (((k >> i) & (k >> j)) & 1).astype(float)


def apply_gate(state: DenseState, gate: Gate) -> DenseState:
    gate.check_range(state.n)
    if gate.name == "CZ":
        d = _cz_diag(state.n, *gate.targets)
        if state.is_pure:
            return DenseState(state.n, d * state.data)
        return DenseState(state.n, d[:, None] * state.data * d[None, :], "mixed")
    return apply_single(state, SINGLE_QUBIT[gate.name], gate.targets[0])


def apply_gates(state: DenseState, gates) -> DenseState:
    for g in gates:
        state = apply_gate(state, g if isinstance(g, Gate) else Gate.parse(g))
    return state


def gate_unitary(gate: Gate, n: int) -> np.ndarray:
    """Full ``2^n x 2^n`` unitary, built column by column."""
    dim = 1 << n
    cols = [apply_gate(DenseState(n, np.eye(dim, dtype=complex)[:, k]), gate).data for k in range(dim)]
    return np.stack(cols, axis=1)


def project_single(state: DenseState, op: np.ndarray, qubit: int, outcome: int):
    """Project ``qubit`` onto the ``outcome`` eigenspace of a ±1-valued 2x2 observable."""
    s = 1 if outcome > 0 else -1
    proj = 0.5 * (np.eye(2) + s * op)
    post = apply_single(state, proj, qubit)
    prob = float(np.real(np.vdot(post.data, post.data) if post.is_pure else np.trace(post.data)))
    if prob < 1e-15:
        return 0.0, None
    if post.is_pure:
        return prob, DenseState(state.n, post.data / np.sqrt(prob))
    return prob, DenseState(state.n, post.data / prob, "mixed")


def reduced_qubit(state: DenseState, qubit: int) -> np.ndarray:
    """2x2 reduced density matrix of a single qubit."""
    n = state.n
    axis = n - 1 - qubit
    if state.is_pure:
        t = np.moveaxis(state.data.reshape((2,) * n), axis, 0).reshape(2, -1)
        return t @ t.conj().T
    rows = list(range(n))
    cols = [i if i != axis else n + axis for i in range(n)]
    return np.einsum(state.data.reshape((2,) * (2 * n)), rows + cols, [axis, n + axis])


def fidelity(a: DenseState, b: DenseState) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))^2``; ``|<a|b>|^2`` for pure states."""
    if a.n != b.n:
        raise OracleError("fidelity between states of different size")
    if a.is_pure and b.is_pure:
        val = abs(np.vdot(a.data, b.data)) ** 2
    elif a.is_pure or b.is_pure:
        psi, rho = (a, b) if a.is_pure else (b, a)
        val = np.vdot(psi.data, rho.data @ psi.data).real
    else:
        sa = scipy.linalg.sqrtm(a.data)
        val = np.trace(scipy.linalg.sqrtm(sa @ b.data @ sa)).real ** 2
    return float(min(max(val, 0.0), 1.0))


def depolarize(state: DenseState, eps: float) -> DenseState:
    """Convex mixture ``(1 - eps) rho + eps I / 2^n``."""
    if not 0 <= eps <= 1:
        raise OracleError("depolarizing strength must lie in [0, 1]")
    rho = state.density_matrix()
    dim = 1 << state.n
    return DenseState(state.n, (1 - eps) * rho + eps * np.eye(dim) / dim, "mixed")


def dump_amplitudes(state: DenseState) -> bytes:
    """Raw little-endian complex128 amplitudes, qubit 0 fastest."""
    if not state.is_pure:
        raise OracleError("amplitude dump needs a pure state")
    return state.data.astype("<c16").tobytes()


def label_expectations(state: DenseState) -> dict[int, float]:
    """Expectation of every default-convention ``T_a``, keyed by packed index."""
    n = state.n
    return {
        idx: pauli_expectation(state, PauliObservable(BitString2n.from_index(n, idx)))
        for idx in range(4 ** n)
    }
