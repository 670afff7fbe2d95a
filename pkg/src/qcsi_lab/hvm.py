"""
Noncontextual hidden-variable models on the internal-state space Z_2^{2n}.

Internal states and labels share the packed index ``z | (x << n)``. A value
assignment is a base sign table ``lambda_0`` over inferable labels, and the
translated assignments are ``lambda_nu(a) = lambda_0(a) (-1)^{[nu, a]}``.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gates import Gate, pull_back
from .pauli import BitString2n, PauliObservable, format_pauli, parse_pauli, symplectic_index
from .scheme import (
    InferabilityClosure,
    SchemeSpec,
    ValueAssignmentResult,
    check_absence_of_sic,
    check_free_gate,
    closure,
)

MAX_DENSE_QUBITS = 8
MIN_PROB = 1e-12
BLOCK_SHOTS = 8192


class DomainError(ValueError):
    """Label outside the inferable (or measurable) set."""


class ImpossibleOutcomeError(ValueError):
    pass


class CircuitError(ValueError):
    pass


def _index(a) -> int:
    if isinstance(a, PauliObservable):
        return a.label.index
    if isinstance(a, BitString2n):
        return a.index
    return int(a)


@dataclass(frozen=True)
class ValueAssignment:
    n: int
    base: dict[int, int] | None = None  # None: lambda_0 == +1 on every label
    measurable: frozenset[int] | None = None  # None: single-qubit labels

    @classmethod
    def local(cls, n: int) -> ValueAssignment:
        return cls(n)

    @classmethod
    def from_check(cls, cl: InferabilityClosure, va: ValueAssignmentResult) -> ValueAssignment:
        if not va.consistent:
            raise DomainError("scheme has no consistent value assignment (C1 fails)")
        if va.analytic:
            return cls(cl.n)
        return cls(cl.n, dict(va.signs), cl.spec.measurable_labels)

    def base_value(self, a) -> int:
        idx = _index(a)
        if self.base is None:
            if not 0 <= idx < 4 ** self.n:
                raise DomainError(f"label index {idx} out of range")
            return 1
        try:
            return self.base[idx]
        except KeyError:
            raise DomainError(f"{BitString2n.from_index(self.n, idx)} is not inferable") from None

    def is_measurable(self, a) -> bool:
        idx = _index(a)
        if self.measurable is None:
            return BitString2n.from_index(self.n, idx).weight == 1
        return idx in self.measurable


def assignment_value(lam: ValueAssignment, nu, a) -> int:
    """``lambda_nu(a) = lambda_0(a) (-1)^{[nu, a]}``."""
    a_idx = _index(a)
    return lam.base_value(a_idx) * (1 - 2 * symplectic_index(lam.n, _index(nu), a_idx))


def translation_signs(n: int, a: int) -> np.ndarray:
    """``(-1)^{[nu, a]}`` for every internal state ``nu``."""
    nu = np.arange(4 ** n, dtype=np.uint64)
    mask = np.uint64((1 << n) - 1)
    az, ax = np.uint64(a & ((1 << n) - 1)), np.uint64(a >> n)
    par = np.bitwise_count(((nu >> np.uint64(n)) & az) ^ ((nu & mask) & ax)) & 1
    return 1 - 2 * par.astype(np.int64)


@dataclass(frozen=True)
class HVMDistribution:
    n: int
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"dense tables are bounded to n <= {MAX_DENSE_QUBITS}")
        q = np.asarray(self.q, dtype=float)
        if q.shape != (4 ** self.n,):
            raise ValueError(f"q must have {4 ** self.n} entries")
        if (q < 0).any() or abs(q.sum() - 1) > 1e-12:
            raise ValueError("q must be a probability distribution")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, n: int) -> HVMDistribution:
        return cls(n, np.full(4 ** n, 4.0 ** -n))

    @classmethod
    def point(cls, n: int, nu) -> HVMDistribution:
        q = np.zeros(4 ** n)
        q[_index(nu)] = 1
        return cls(n, q)

    def translate(self, u) -> HVMDistribution:
        """Distribution of ``nu + u`` for ``nu ~ q``."""
        idx = np.arange(4 ** self.n) ^ _index(u)
        return HVMDistribution(self.n, self.q[idx])


def hvm_expectation(q: HVMDistribution, lam: ValueAssignment, a, alpha: float = 1.0) -> float:
    """``alpha * sum_nu q(nu) lambda_nu(a)``.

    The sum is correctly rounded (``math.fsum``), so tables whose terms cancel
    in pairs give exactly 0.
    """
    a_idx = _index(a)
    base = lam.base_value(a_idx)
    return alpha * base * _signed_sum(q.q, translation_signs(q.n, a_idx))


def _signed_sum(q: np.ndarray, signs: np.ndarray) -> float:
    return math.fsum((q * signs).tolist())


def local_scheme_hvm(n: int) -> tuple[HVMDistribution, ValueAssignment]:
    """Uniform distribution and ``lambda_0 = +1``: a model of I/2^n for local Paulis."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return HVMDistribution.uniform(n), ValueAssignment.local(n)


def scheme_hvm(spec: SchemeSpec, fast_path: bool = True) -> tuple[HVMDistribution, ValueAssignment]:
    """Uniform-translate model of I/2^n for any scheme passing C1."""
    cl = closure(spec, fast_path=fast_path)
    lam = ValueAssignment.from_check(cl, check_absence_of_sic(cl))
    return HVMDistribution.uniform(spec.n), lam


def exact_measure_update(q: HVMDistribution, lam: ValueAssignment, a_t, s_t: int):
    """Condition on outcome ``s_t`` of ``T_{a_t}``; returns ``(p, q')``.

    ``q'(nu) = delta(s_t, lambda_nu(a_t)) (q(nu) + q(nu + a_t)) / (2 p)``
    with ``p = (1 + s_t <T_{a_t}>) / 2``.
    """
    a_idx = _index(a_t)
    if not lam.is_measurable(a_idx):
        raise DomainError(f"{BitString2n.from_index(q.n, a_idx)} is not directly measurable")
    s = 1 if s_t > 0 else -1
    values = lam.base_value(a_idx) * translation_signs(q.n, a_idx)
    p = (1 + s * _signed_sum(q.q, values)) / 2
    if p < MIN_PROB:
        raise ImpossibleOutcomeError(
            f"outcome {s:+d} of {BitString2n.from_index(q.n, a_idx)} has probability {p:.3g}"
        )
    shifted = q.q[np.arange(4 ** q.n) ^ a_idx]
    new = np.where(values == s, (q.q + shifted) / (2 * p), 0.0)
    new /= new.sum()  # absorb rounding; exact value is already 1
    return p, HVMDistribution(q.n, new)


# --- trajectory sampling -------------------------------------------------

@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    label: str
    outcome: int
    model_p: float | None


def _random_state(rng: np.random.Generator, n: int) -> int:
    nbytes = (2 * n + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & ((1 << (2 * n)) - 1)


class HVMSampler:
    """Single-trajectory random walk over internal states."""

    def __init__(self, lam: ValueAssignment, rng: np.random.Generator,
                 q: HVMDistribution | None = None, nu: int | None = None):
        self.n = lam.n
        self.assignment = lam
        self.rng = rng
        if nu is not None:
            self.nu = _index(nu)
        elif q is not None:
            self.nu = int(rng.choice(4 ** q.n, p=q.q))
        else:
            self.nu = _random_state(rng, self.n)

    def step(self, a_t) -> int:
        """Emit ``lambda_nu(a_t)``, then move to ``nu + a_t`` with probability 1/2."""
        a_idx = _index(a_t)
        out = assignment_value(self.assignment, self.nu, a_idx)
        if self.rng.integers(2):
            self.nu ^= a_idx
        return out


def sample_step(sampler: HVMSampler, a_t) -> int:
    return sampler.step(a_t)


def thread_count() -> int:
    env = os.environ.get("QCSI_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-style stream keyed by ``(seed, block)``; independent of run order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _sample_block(lam, labels, n, count, rng, q):
    if q is not None:
        nu = rng.choice(4 ** n, size=count, p=q.q).astype(np.uint64)
    else:
        nu = rng.integers(0, 1 << (2 * n), size=count, dtype=np.uint64, endpoint=False)
    mask = np.uint64((1 << n) - 1)
    out = np.empty((count, len(labels)), dtype=np.int8)
    for t, a in enumerate(labels):
        az, ax = np.uint64(a & int(mask)), np.uint64(a >> n)
        par = np.bitwise_count(((nu >> np.uint64(n)) & az) ^ ((nu & mask) & ax)) & 1
        out[:, t] = lam.base_value(a) * (1 - 2 * par.astype(np.int8))
        flip = rng.integers(0, 2, size=count, dtype=np.uint64)
        nu ^= flip * np.uint64(a)
    return out


def sample_trajectories(lam: ValueAssignment, labels, shots: int, seed: int,
                        q: HVMDistribution | None = None, threads: int | None = None) -> np.ndarray:
    """Outcomes of ``shots`` independent walks; array of shape (shots, len(labels)).

    Shots are cut into fixed blocks of ``BLOCK_SHOTS``, each with its own
    stream, so the result does not depend on the worker count.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = lam.n
    if 2 * n > 62:
        raise ValueError("vectorized sampler packs states into 64 bits (n <= 31); use HVMSampler")
    idx = [_index(a) for a in labels]
    for a in idx:
        if not lam.is_measurable(a):
            raise DomainError(f"{BitString2n.from_index(n, a)} is not directly measurable")
    nblocks = -(-shots // BLOCK_SHOTS)
    sizes = [min(BLOCK_SHOTS, shots - b * BLOCK_SHOTS) for b in range(nblocks)]

    def run(b):
        return _sample_block(lam, idx, n, sizes[b], block_rng(seed, b), q)

    workers = min(threads or thread_count(), nblocks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(nblocks)))
    else:
        parts = [run(b) for b in range(nblocks)]
    return np.concatenate(parts, axis=0)


# --- circuits ------------------------------------------------------------

@dataclass(frozen=True)
class Measurement:
    """A measurement as written, and the observable it reads in the input frame."""

    written: PauliObservable
    effective: PauliObservable

    @property
    def label(self) -> int:
        return self.effective.label.index

    @property
    def sign(self) -> int:
        return self.effective.sign


def parse_circuit(text: str) -> list:
    """Line tokens ``gate H 0`` / ``gate CZ 0 1`` / ``measure +ZI``; ``#`` comments."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        try:
            if head == "gate":
                ops.append(Gate.parse(rest))
            elif head == "measure":
                ops.append(parse_pauli(rest))
            else:
                raise CircuitError(f"unknown op {head!r}")
        except ValueError as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    return ops


def compile_circuit(spec: SchemeSpec, circuit) -> list[Measurement]:
    """Propagate free gates out of the circuit by conjugation."""
    gates: list[Gate] = []
    out = []
    labels = spec.measurable_labels
    for op in circuit:
        if isinstance(op, Gate):
            if not op.is_clifford or not check_free_gate(spec, op):
                raise CircuitError(f"gate {op} is not free for this scheme")
            gates.append(op)
        else:
            if op.n != spec.n:
                raise CircuitError(f"measurement {format_pauli(op)} has wrong length")
            if op.label.index not in labels:
                raise CircuitError(f"measurement {format_pauli(op)} is not in O")
            out.append(Measurement(op, pull_back(op, gates)))
    return out


def exact_chain(q: HVMDistribution, lam: ValueAssignment, measurements: list[Measurement], outcomes):
    """Per-step model probabilities of a given outcome string; returns ``(ps, q_final)``."""
    ps = []
    for m, o in zip(measurements, outcomes, strict=True):
        p, q = exact_measure_update(q, lam, m.label, m.sign * o)
        ps.append(p)
    return ps, q


def exact_joint_distribution(q: HVMDistribution, lam: ValueAssignment, measurements) -> dict[tuple, float]:
    """Probability of every outcome string, by branching on each measurement."""
    dist: dict[tuple, float] = {}

    def rec(q, t, prefix, prob):
        if t == len(measurements):
            dist[prefix] = prob
            return
        m = measurements[t]
        for o in (1, -1):
            try:
                p, q2 = exact_measure_update(q, lam, m.label, m.sign * o)
            except ImpossibleOutcomeError:
                continue
            rec(q2, t + 1, prefix + (o,), prob * p)

    rec(q, 0, (), 1.0)
    return dist


@dataclass
class SimulationResult:
    labels: list[str]
    shots: int
    seed: int
    counts: dict[str, int]
    means: list[float]
    outcomes: np.ndarray | None = field(default=None, repr=False)

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}


def outcome_key(row) -> str:
    return "".join("+" if o > 0 else "-" for o in row)


def simulate_circuit_hvm(model: tuple[HVMDistribution | None, ValueAssignment], spec: SchemeSpec,
                         circuit, shots: int, seed: int, threads: int | None = None) -> SimulationResult:
    """Sample the circuit's measurement record with the random-walk model."""
    q, lam = model
    ms = compile_circuit(spec, circuit)
    if not ms:
        return SimulationResult([], shots, seed, {}, [], np.zeros((shots, 0), dtype=np.int8))
    raw = sample_trajectories(lam, [m.label for m in ms], shots, seed, q=q, threads=threads)
    signs = np.array([m.sign for m in ms], dtype=np.int8)
    out = raw * signs
    counts = Counter(outcome_key(r) for r in out)
    return SimulationResult(
        labels=[format_pauli(m.written) for m in ms],
        shots=shots,
        seed=seed,
        counts=dict(sorted(counts.items())),
        means=[float(v) for v in out.mean(axis=0)],
        outcomes=out,
    )


def exact_records(q: HVMDistribution, lam: ValueAssignment, spec: SchemeSpec, circuit, outcomes) -> list[TrajectoryRecord]:
    ms = compile_circuit(spec, circuit)
    if len(outcomes) != len(ms):
        raise CircuitError(f"{len(outcomes)} outcomes given for {len(ms)} measurements")
    ps, _ = exact_chain(q, lam, ms, outcomes)
    return [
        TrajectoryRecord(t, format_pauli(m.written), o, p)
        for t, (m, o, p) in enumerate(zip(ms, outcomes, ps))
    ]


def parse_outcomes(text: str) -> list[int]:
    """``"+-+"`` or ``"1,-1,1"`` or ``"010"`` (0 -> +1, 1 -> -1)."""
    s = text.strip()
    if "," in s:
        vals = [int(v) for v in s.split(",")]
        if any(v not in (1, -1) for v in vals):
            raise ValueError("outcomes must be +1 or -1")
        return vals
    table = {"+": 1, "-": -1, "0": 1, "1": -1}
    try:
        return [table[c] for c in s]
    except KeyError as exc:
        raise ValueError(f"bad outcome character {exc.args[0]!r}") from None
