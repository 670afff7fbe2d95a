"""
Measurement-based gates on a cluster state with T-rotated ("red") sites,
driven by single-qubit Pauli measurements only.

Byproduct rules (logical state on the current wire qubit is
``X^bx Z^bz |ideal>``, bits start at 0):

============================  ==============================================
step                          effect
============================  ==============================================
Z on off-route vertex v,      Z^c on every neighbour of v; recorded as a
outcome bit c                 pending flip ``z[w] ^= c``
X on wire vertex, raw bit s   ``s' = s ^ z[v]``; ``(bx, bz) <- (s' ^ bz, bx)``;
                              ideal advances by ``H``
red vertex, target angle t    measure X if the effective angle
                              ``(-1)^bx * t`` is -pi/4, Y if it is +pi/4;
                              same frame update; ideal advances by ``H R(t)``
output vertex                 ``bz ^= z[out]``
============================  ==============================================

``R(t) = diag(1, e^{-it})``. X on a red site reads ``(X - Y)/sqrt2`` of the
unrotated cluster (t = -pi/4), Y reads ``(X + Y)/sqrt2`` (t = +pi/4).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import oracle
from .gates import SINGLE_QUBIT, Gate
from .oracle import DenseState
from .pauli import PauliObservable

T_ANGLE = -np.pi / 4  # red-site target: R(-pi/4) ~ e^{-i pi/8 Z}
RED_X_ANGLE = -np.pi / 4
RED_Y_ANGLE = np.pi / 4
ALLOWED_BASES = {"X", "Y", "Z"}

H = SINGLE_QUBIT["H"]
X = SINGLE_QUBIT["X"]
Y = SINGLE_QUBIT["Y"]
Z = SINGLE_QUBIT["Z"]
T = SINGLE_QUBIT["T"]


class PatternError(ValueError):
    pass


class ImpossibleBranch(PatternError):
    pass


def rotation(angle: float) -> np.ndarray:
    return np.diag([1, np.exp(-1j * angle)])


def equatorial(angle: float) -> np.ndarray:
    """``cos(t) X + sin(t) Y``."""
    return np.cos(angle) * X + np.sin(angle) * Y


@dataclass(frozen=True)
class ClusterGraph:
    vertices: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]
    red_sites: frozenset[int]
    input: int
    output: int
    name: str = ""

    def __post_init__(self):
        nv = len(self.vertices)
        for i, j in self.edges:
            if i == j or not (0 <= i < nv and 0 <= j < nv):
                raise PatternError(f"bad edge ({i}, {j})")
        if not self.red_sites <= set(range(nv)):
            raise PatternError("red sites must be vertices")
        if not (0 <= self.input < nv and 0 <= self.output < nv) or self.input == self.output:
            raise PatternError("need distinct input and output vertices")

    @property
    def size(self) -> int:
        return len(self.vertices)

    def neighbours(self, v: int) -> list[int]:
        return sorted({j for i, j in self.edges if i == v} | {i for i, j in self.edges if j == v})

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges or (j, i) in self.edges

    def without_red(self) -> ClusterGraph:
        return ClusterGraph(self.vertices, self.edges, frozenset(), self.input, self.output, self.name)


def wire_graph(length: int, red: tuple[int, ...] = ()) -> ClusterGraph:
    """Linear cluster ``0 - 1 - ... - (length-1)``; input 0, output last."""
    verts = tuple((0, c) for c in range(length))
    edges = tuple((c, c + 1) for c in range(length - 1))
    return ClusterGraph(verts, edges, frozenset(red), 0, length - 1, f"wire{length}")


@dataclass(frozen=True)
class Step:
    vertex: int
    basis: str  # "X" | "Y" | "Z" | "adaptive" (X or Y chosen from the frame)
    rule: str  # "cut" | "wire" | "red"
    target: float = 0.0


@dataclass(frozen=True)
class MeasurementPattern:
    steps: tuple[Step, ...]
    output: int
    route: tuple[int, ...] = ()

    def logical_unitary(self) -> np.ndarray:
        """Ideal logical map: product of ``H R(t)`` along the route."""
        u = np.eye(2, dtype=complex)
        for s in self.steps:
            if s.rule != "cut":
                u = H @ rotation(s.target) @ u
        return u


def route_pattern(graph: ClusterGraph, route, red_target: float = T_ANGLE) -> MeasurementPattern:
    """Cut every off-route vertex with Z, then drive the route with X (adaptive X/Y on red sites)."""
    route = tuple(route)
    if route[0] != graph.input or route[-1] != graph.output:
        raise PatternError("route must run from the input to the output vertex")
    if len(set(route)) != len(route):
        raise PatternError("route revisits a vertex")
    on_route = set(route)
    for k in range(len(route)):
        for m in range(k + 1, len(route)):
            adjacent = graph.has_edge(route[k], route[m])
            if adjacent != (m == k + 1):
                raise PatternError(f"route is not an induced path at ({route[k]}, {route[m]})")
    steps = [Step(v, "Z", "cut") for v in range(graph.size) if v not in on_route]
    for v in route[:-1]:
        if v in graph.red_sites:
            steps.append(Step(v, "adaptive", "red", red_target))
        else:
            steps.append(Step(v, "X", "wire", 0.0))
    pattern = MeasurementPattern(tuple(steps), graph.output, route)
    validate_pattern(graph, pattern)
    return pattern


def validate_pattern(graph: ClusterGraph, pattern: MeasurementPattern) -> None:
    seen = set()
    cuts_done = True
    for s in pattern.steps:
        if s.basis not in ALLOWED_BASES and s.basis != "adaptive":
            raise PatternError(f"non-Pauli basis {s.basis!r} at vertex {s.vertex}")
        if s.basis == "adaptive" and s.rule != "red":
            raise PatternError("only red sites take adaptive X/Y measurements")
        if s.rule == "red":
            if s.vertex not in graph.red_sites:
                raise PatternError(f"vertex {s.vertex} is not a red site")
            if not np.isclose(abs(s.target), np.pi / 4):
                raise PatternError("red sites only realize target angles +-pi/4")
        if s.rule == "cut":
            if not cuts_done:
                raise PatternError("Z cuts must precede wire measurements")
        else:
            cuts_done = False
        if s.vertex in seen:
            raise PatternError(f"vertex {s.vertex} measured twice")
        if not 0 <= s.vertex < graph.size:
            raise PatternError(f"vertex {s.vertex} not in graph")
        seen.add(s.vertex)
    expected = set(range(graph.size)) - {pattern.output}
    if seen != expected or pattern.output != graph.output:
        raise PatternError("every non-output vertex must be measured exactly once")


def build_modified_cluster(graph: ClusterGraph, input_state: DenseState) -> DenseState:
    """Input vertex holds ``input_state``, others ``|+>``; CZ on edges; T on red sites."""
    n = graph.size
    if n > oracle.MAX_PURE_QUBITS:
        raise oracle.OracleError(f"{n} qubits exceed the dense bound {oracle.MAX_PURE_QUBITS}")
    if input_state.n != 1 or not input_state.is_pure:
        raise PatternError("input must be a pure single-qubit state")
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    psi = np.ones(1, dtype=complex)
    for v in reversed(range(n)):  # qubit 0 ends up fastest
        psi = np.kron(psi, input_state.data if v == graph.input else plus)
    state = DenseState(n, psi)
    for i, j in graph.edges:
        state = oracle.apply_gate(state, Gate("CZ", (i, j)))
    for v in sorted(graph.red_sites):
        state = oracle.apply_gate(state, Gate("T", (v,)))
    return state


@dataclass
class PatternRun:
    output: DenseState  # 1-qubit density matrix of the output vertex
    log: list[tuple[int, str, int]]  # (vertex, basis measured, outcome +-1)
    byproduct: tuple[int, int]  # (bx, bz): output = X^bx Z^bz U |in>
    probability: float


class _Frame:
    def __init__(self, graph: ClusterGraph):
        self.graph = graph
        self.pending = [0] * graph.size
        self.bx = 0
        self.bz = 0

    def basis_for(self, step: Step) -> str:
        if step.rule != "red":
            return step.basis
        effective = step.target * (-1) ** self.bx
        return "X" if np.isclose(effective, RED_X_ANGLE) else "Y"

    def record(self, step: Step, outcome: int) -> None:
        bit = 0 if outcome > 0 else 1
        if step.rule == "cut":
            for w in self.graph.neighbours(step.vertex):
                self.pending[w] ^= bit
            return
        s = bit ^ self.pending[step.vertex]
        self.bx, self.bz = s ^ self.bz, self.bx

    def finish(self, output: int) -> tuple[int, int]:
        return self.bx, self.bz ^ self.pending[output]


def run_pattern(state: DenseState, graph: ClusterGraph, pattern: MeasurementPattern,
                rng: np.random.Generator | None = None, outcomes=None) -> PatternRun:
    """Execute the pattern; ``outcomes`` forces each result (branch enumeration), else sample with ``rng``."""
    validate_pattern(graph, pattern)
    frame = _Frame(graph)
    log = []
    prob = 1.0
    n = state.n
    for k, step in enumerate(pattern.steps):
        basis = frame.basis_for(step)
        obs = PauliObservable.single(n, step.vertex, basis)
        if outcomes is not None:
            o = outcomes[k]
            p, post = oracle.project_pauli(state, obs, o)
            if post is None or p < 1e-12:
                raise ImpossibleBranch(f"forced outcome {o:+d} at step {k} has probability 0")
        else:
            o, post, p = oracle.measure_pauli(state, obs, rng)
        state = post
        prob *= p
        log.append((step.vertex, basis, o))
        frame.record(step, o)
    rho = oracle.reduced_qubit(state, pattern.output)
    return PatternRun(DenseState(1, rho, "mixed"), log, frame.finish(pattern.output), prob)


def byproduct_matrix(bx: int, bz: int) -> np.ndarray:
    return np.linalg.matrix_power(X, bx) @ np.linalg.matrix_power(Z, bz)


def corrected_fidelity(run: PatternRun, reference: np.ndarray, psi_in: np.ndarray) -> float:
    """Fidelity of the byproduct-corrected output with ``reference @ psi_in``."""
    b = byproduct_matrix(*run.byproduct)
    rho = b.conj().T @ run.output.data @ b
    target = reference @ psi_in
    return float(np.real(np.vdot(target, rho @ target)))


def enumerate_branches(state: DenseState, graph: ClusterGraph, pattern: MeasurementPattern):
    """Yield a :class:`PatternRun` for every nonzero-probability outcome string."""
    for outcomes in itertools.product((1, -1), repeat=len(pattern.steps)):
        try:
            run = run_pattern(state, graph, pattern, outcomes=outcomes)
        except ImpossibleBranch:
            continue
        yield run


def random_qubit_state(rng: np.random.Generator) -> DenseState:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return DenseState(1, v / np.linalg.norm(v))


@dataclass
class GateVerification:
    min_fidelity: float
    branches: int
    trials: int
    logical_phase_ok: bool
    fidelities: list[float] = field(default_factory=list, repr=False)


def verify_logical_gate(graph: ClusterGraph, pattern: MeasurementPattern, reference: np.ndarray,
                        trials: int, rng: np.random.Generator, max_enumerated: int = 10) -> GateVerification:
    """Minimum corrected-output fidelity with ``reference @ input`` over random inputs.

    All outcome branches are enumerated when the pattern has at most
    ``max_enumerated`` measurements; otherwise one sampled branch per trial.
    """
    fids = []
    branches = 0
    for _ in range(trials):
        psi = random_qubit_state(rng)
        state = build_modified_cluster(graph, psi)
        if len(pattern.steps) <= max_enumerated:
            runs = enumerate_branches(state, graph, pattern)
        else:
            runs = [run_pattern(state, graph, pattern, rng=rng)]
        for run in runs:
            fids.append(corrected_fidelity(run, reference, psi.data))
            branches += 1
    u = pattern.logical_unitary()
    overlap = abs(np.trace(reference.conj().T @ u)) / 2
    return GateVerification(min(fids), branches, trials, bool(np.isclose(overlap, 1.0)), fids)


def red_site_equivalence(graph: ClusterGraph, pattern: MeasurementPattern, input_state: DenseState) -> float:
    """Largest probability mismatch, over every branch and red step, between
    X/Y on the rotated cluster and ``(X -+ Y)/sqrt2`` on the plain cluster."""
    rotated = build_modified_cluster(graph, input_state)
    plain = build_modified_cluster(graph.without_red(), input_state)
    n = rotated.n
    steps = pattern.steps
    worst = 0.0

    def rec(rot, pla, k, forced):
        nonlocal worst
        if k == len(steps):
            return
        frame = _Frame(graph)
        for s, o in zip(steps[:k], forced):
            frame.record(s, o)
        step = steps[k]
        basis = frame.basis_for(step)
        if step.rule == "red":
            for b, angle in (("X", RED_X_ANGLE), ("Y", RED_Y_ANGLE)):
                op = equatorial(angle)
                for o in (1, -1):
                    p_rot, _ = oracle.project_pauli(rot, PauliObservable.single(n, step.vertex, b), o)
                    p_pla, _ = oracle.project_single(pla, op, step.vertex, o)
                    worst = max(worst, abs(p_rot - p_pla))
        for o in (1, -1):
            p_rot, rot2 = oracle.project_pauli(rot, PauliObservable.single(n, step.vertex, basis), o)
            if step.rule == "red":
                angle = RED_X_ANGLE if basis == "X" else RED_Y_ANGLE
                p_pla, pla2 = oracle.project_single(pla, equatorial(angle), step.vertex, o)
            else:
                p_pla, pla2 = oracle.project_pauli(pla, PauliObservable.single(n, step.vertex, basis), o)
            worst = max(worst, abs(p_rot - p_pla))
            if rot2 is None or pla2 is None or p_rot < 1e-12:
                continue
            rec(rot2, pla2, k + 1, forced + [o])

    rec(rotated, plain, 0, [])
    return worst


# --- fixtures ------------------------------------------------------------

def load_cell(name_or_path: str) -> tuple[ClusterGraph, MeasurementPattern, np.ndarray]:
    """Load a cell fixture: graph, route pattern and the expected logical gate."""
    path = Path(name_or_path)
    if path.exists():
        text = path.read_text()
    else:
        text = resources.files("qcsi_lab.data").joinpath(f"cell_{name_or_path}.json").read_text()
    data = json.loads(text)
    graph = ClusterGraph(
        vertices=tuple(tuple(v) for v in data["vertices"]),
        edges=tuple(tuple(e) for e in data["edges"]),
        red_sites=frozenset(data["red_sites"]),
        input=data["input"],
        output=data["output"],
        name=data.get("name", ""),
    )
    pattern = route_pattern(graph, data["route"])
    gate = data["logical_gate"]
    reference = {"I": np.eye(2, dtype=complex), "T": T}[gate]
    return graph, pattern, reference
