"""
QCSI schemes: measurable set, free gates, inferable closure and the
C1 (no state-independent contextuality) / C2 (tomographic completeness) checks.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from . import gf2
from .gates import Gate, GateError, conjugate
from .pauli import (
    BitString2n,
    PauliObservable,
    PauliParseError,
    format_pauli,
    multiply,
    parse_pauli,
    symplectic_form,
)

MAX_OBSERVABLES = 24
MAX_QUBITS = 5


class SchemeParseError(ValueError):
    def __init__(self, msg: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


class EnumerationBoundError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeSpec:
    n: int
    observables: tuple[PauliObservable, ...]
    gates: tuple[Gate, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(self, "gates", tuple(self.gates))
        for p in self.observables:
            if p.n != self.n:
                raise ValueError(f"observable {format_pauli(p)} acts on {p.n} qubits, scheme has {self.n}")
            if not p.is_hermitian:
                raise ValueError(f"observable {format_pauli(p)} is not Hermitian")
        for g in self.gates:
            g.check_range(self.n)

    @property
    def measurable_labels(self) -> frozenset[int]:
        return frozenset(p.label.index for p in self.observables)

    def is_local(self) -> bool:
        """True iff the measurable labels are exactly all single-qubit Paulis."""
        want = {
            PauliObservable.single(self.n, q, k).label.index
            for q in range(self.n)
            for k in "XYZ"
        }
        return self.measurable_labels == want

    def has_complementary_bases(self) -> bool:
        """Every qubit can be measured in at least two anticommuting local bases."""
        labels = [p.label for p in self.observables if p.label.weight == 1]
        for q in range(self.n):
            on_q = [a for a in labels if ((a.z | a.x) >> q) & 1]
            if not any(symplectic_form(a, b) for a, b in itertools.combinations(on_q, 2)):
                return False
        return True


def local_scheme(n: int) -> SchemeSpec:
    """All single-qubit Pauli measurements; single-qubit Clifford generators."""
    obs = [PauliObservable.single(n, q, k) for q in range(n) for k in "XZY"]
    gates = [Gate(g, (q,)) for q in range(n) for g in ("H", "S")]
    return SchemeSpec(n, tuple(obs), tuple(gates), name=f"local{n}")


# --- scheme file ---------------------------------------------------------

_KEY = re.compile(r"^\s*([A-Za-z_]+)\s*[:=]\s*(.*)$")


def parse_scheme(text: str, name: str = "") -> SchemeSpec:
    """Parse the line-oriented scheme format.

    ::

        # comment
        n: 2
        observables: +XI, +IX, -ZI, IZ
        gates: H 0, S 1, CZ 0 1

    Lists are comma-separated and may continue on following lines that start
    with whitespace.
    """
    fields: dict[str, tuple[str, int, int]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _KEY.match(line)
        if m and not raw[:1].isspace():
            key = m.group(1).lower()
            if key not in ("n", "observables", "gates", "name"):
                raise SchemeParseError(f"unknown field {key!r}", lineno, 1)
            if key in fields:
                raise SchemeParseError(f"duplicate field {key!r}", lineno, 1)
            fields[key] = (m.group(2), lineno, m.start(2) + 1)
            current = key
        elif raw[:1].isspace() and current is not None:
            val, ln, col = fields[current]
            sep = "," if val.strip() and not val.rstrip().endswith(",") else ""
            fields[current] = (val + sep + line, ln, col)
        else:
            raise SchemeParseError("expected 'key: value'", lineno, 1)

    if "n" not in fields:
        raise SchemeParseError("missing field 'n'", 1, 1)
    nval, nline, ncol = fields["n"]
    try:
        n = int(nval.strip())
    except ValueError:
        raise SchemeParseError(f"n must be an integer, got {nval.strip()!r}", nline, ncol) from None
    if n < 1:
        raise SchemeParseError("n must be >= 1", nline, ncol)

    def items(key):
        if key not in fields:
            return []
        val, ln, col = fields[key]
        out = []
        offset = 0
        for tok in val.split(","):
            stripped = tok.strip()
            if stripped:
                out.append((stripped, ln, col + offset + tok.index(stripped)))
            offset += len(tok) + 1
        return out

    obs = []
    for tok, ln, col in items("observables"):
        try:
            p = parse_pauli(tok)
        except PauliParseError as exc:
            raise SchemeParseError(str(exc), ln, col) from None
        if p.n != n:
            raise SchemeParseError(f"observable {tok!r} has length {p.n}, expected {n}", ln, col)
        obs.append(p)
    gates = []
    for tok, ln, col in items("gates"):
        try:
            g = Gate.parse(tok)
            g.check_range(n)
        except GateError as exc:
            raise SchemeParseError(str(exc), ln, col) from None
        gates.append(g)
    label = fields["name"][0].strip() if "name" in fields else name
    return SchemeSpec(n, tuple(obs), tuple(gates), name=label)


def load_scheme(path: str | Path) -> SchemeSpec:
    path = Path(path)
    return parse_scheme(path.read_text(), name=path.stem)


def format_scheme(spec: SchemeSpec) -> str:
    lines = []
    if spec.name:
        lines.append(f"name: {spec.name}")
    lines.append(f"n: {spec.n}")
    lines.append("observables: " + ", ".join(format_pauli(p) for p in spec.observables))
    if spec.gates:
        lines.append("gates: " + ", ".join(str(g) for g in spec.gates))
    return "\n".join(lines) + "\n"


# --- closure -------------------------------------------------------------

@dataclass(frozen=True)
class Context:
    """A maximal commuting subset of O and every product of its elements."""

    generators: tuple[int, ...]  # indices into SchemeSpec.observables
    members: dict[int, PauliObservable] = field(hash=False, compare=False)

    def __contains__(self, label: int) -> bool:
        return label in self.members


@dataclass(frozen=True)
class InferabilityClosure:
    n: int
    spec: SchemeSpec
    contexts: tuple[Context, ...]
    inferable: dict[int, PauliObservable] | None  # None: every label (analytic local scheme)
    provenance: dict[int, tuple[int, ...]] | None
    analytic: bool = False

    def __contains__(self, label) -> bool:
        idx = label.index if isinstance(label, BitString2n) else label
        if self.inferable is None:
            return 0 <= idx < 4 ** self.n
        return idx in self.inferable

    @property
    def size(self) -> int:
        return 4 ** self.n if self.inferable is None else len(self.inferable)

    @property
    def context_count(self) -> int:
        return 3 ** self.n if self.analytic else len(self.contexts)

    def labels(self) -> list[int]:
        if self.inferable is None:
            return list(range(4 ** self.n))
        return sorted(self.inferable)


def maximal_commuting_subsets(observables, bound: int = MAX_OBSERVABLES) -> list[tuple[int, ...]]:
    """Indices of every inclusion-maximal pairwise-commuting subset, sorted."""
    obs = list(observables)
    if len(obs) > bound:
        raise EnumerationBoundError(
            f"{len(obs)} observables exceed the enumeration bound {bound}; "
            "use the analytic local-scheme path for large single-qubit schemes"
        )
    if not obs:
        return []
    g = nx.Graph()
    g.add_nodes_from(range(len(obs)))
    for i, j in itertools.combinations(range(len(obs)), 2):
        if symplectic_form(obs[i].label, obs[j].label) == 0:
            g.add_edge(i, j)
    return sorted(tuple(sorted(c)) for c in nx.find_cliques(g))


def _products(obs: list[PauliObservable], gens: tuple[int, ...]):
    """Yield (subset, product) in (size, lexicographic) order."""
    n = obs[0].n
    for r in range(len(gens) + 1):
        for subset in itertools.combinations(gens, r):
            prod = PauliObservable.identity(n)
            for k in subset:
                prod = multiply(prod, obs[k])
            yield subset, prod


def closure(spec: SchemeSpec, fast_path: bool = True) -> InferabilityClosure:
    """One-round inference: every product of a commuting subset of O."""
    if fast_path and spec.is_local():
        return InferabilityClosure(spec.n, spec, (), None, None, analytic=True)
    if spec.n > MAX_QUBITS:
        raise EnumerationBoundError(f"n={spec.n} exceeds generic closure bound n <= {MAX_QUBITS}")
    obs = list(spec.observables)
    contexts = []
    inferable: dict[int, PauliObservable] = {0: PauliObservable.identity(spec.n)}
    provenance: dict[int, tuple[int, ...]] = {0: ()}
    for gens in maximal_commuting_subsets(obs):
        members: dict[int, PauliObservable] = {}
        for subset, prod in _products(obs, gens):
            idx = prod.label.index
            members.setdefault(idx, prod)
            key = (len(subset), subset)
            old = provenance.get(idx)
            if old is None or key < (len(old), old):
                provenance[idx] = subset
                inferable[idx] = prod
        contexts.append(Context(gens, members))
    return InferabilityClosure(spec.n, spec, tuple(contexts), inferable, provenance)


def check_tomographic_completeness(cl: InferabilityClosure) -> bool:
    """Condition C2: every one of the 4^n Pauli labels is inferable."""
    return cl.size == 4 ** cl.n


def check_free_gate(spec: SchemeSpec, gate: Gate) -> bool:
    """True iff conjugation by ``gate`` maps O into O up to sign."""
    gate.check_range(spec.n)
    labels = spec.measurable_labels
    return all(conjugate(p, gate).label.index in labels for p in spec.observables)


# --- condition C1 --------------------------------------------------------

@dataclass(frozen=True)
class Triple:
    a: int
    b: int
    c: int  # a ^ b
    beta: int  # T_a T_b = (-1)^beta T_c
    context: int


@dataclass
class ValueAssignmentResult:
    """Outcome of the C1 check: a consistent sign table or a certificate."""

    n: int
    signs: dict[int, int] | None  # lambda_0 over inferable labels, or None
    triples: list[Triple]
    certificate: list[Triple] | None
    analytic: bool = False

    @property
    def consistent(self) -> bool:
        return self.certificate is None

    def value(self, label: int) -> int:
        if self.analytic:
            return 1
        return self.signs[label]


def context_triples(cl: InferabilityClosure) -> list[Triple]:
    """One equation per distinct unordered triple {a, b, a+b} inside a context."""
    n = cl.n
    seen: dict[tuple[int, int, int], Triple] = {}
    for ci, ctx in enumerate(cl.contexts):
        labels = sorted(ctx.members)
        for i, a in enumerate(labels):
            if a == 0:
                continue
            for b in labels[i + 1:]:
                c = a ^ b
                if c < b:
                    continue  # each unordered triple once, via its two smallest labels
                prod = multiply(
                    PauliObservable(BitString2n.from_index(n, a)),
                    PauliObservable(BitString2n.from_index(n, b)),
                )
                assert prod.is_hermitian, "context members must commute"
                beta = prod.phase_exp // 2
                key = (a, b, c)
                if key in seen:
                    assert seen[key].beta == beta
                    continue
                seen[key] = Triple(a, b, c, beta, ci)
    return list(seen.values())


def check_absence_of_sic(cl: InferabilityClosure) -> ValueAssignmentResult:
    """Condition C1 via a GF(2) linear system over the value bits s(a).

    ``s(a) + s(b) + s(a+b) = beta(a, b)`` for every context triple, and
    ``s(0) = 0``. The system is solved in terms of the realized (signed)
    observables so that free choices give the realized O elements value +1.
    """
    if cl.analytic:
        return ValueAssignmentResult(cl.n, None, [], None, analytic=True)
    labels = cl.labels()
    col = {lab: k for k, lab in enumerate(labels)}
    sigma = {lab: cl.inferable[lab].phase_exp // 2 for lab in labels}
    triples = context_triples(cl)
    eqs = [gf2.Equation(1 << col[0], 0)]
    for t in triples:
        mask = (1 << col[t.a]) | (1 << col[t.b]) | (1 << col[t.c])
        eqs.append(gf2.Equation(mask, t.beta ^ sigma[t.a] ^ sigma[t.b] ^ sigma[t.c]))
    res = gf2.solve(eqs, len(labels))
    if not res.feasible:
        cert = [triples[k - 1] for k in res.certificate if k > 0]
        return ValueAssignmentResult(cl.n, None, triples, cert)
    signs = {lab: -1 if res.solution[col[lab]] ^ sigma[lab] else 1 for lab in labels}
    return ValueAssignmentResult(cl.n, signs, triples, None)


def certificate_is_valid(cert: list[Triple]) -> bool:
    """The certificate's equations sum to ``0 = 1`` over GF(2)."""
    counts: dict[int, int] = {}
    rhs = 0
    for t in cert:
        for lab in (t.a, t.b, t.c):
            counts[lab] = counts.get(lab, 0) ^ 1
        rhs ^= t.beta
    return not any(counts.values()) and rhs == 1


def normalize_convention(cl: InferabilityClosure, base: ValueAssignmentResult) -> dict[int, int]:
    """Signs ``s(a)`` so that ``T'_a = s(a) T_a`` satisfies ``T'_a T'_b = T'_{a+b}``.

    Every context triple is checked with :func:`multiply`; a failure raises
    :class:`NormalizationError` naming the triple.
    """
    if not base.consistent:
        raise NormalizationError("value assignment is inconsistent; no convention exists")
    n = cl.n
    table = {lab: base.value(lab) for lab in cl.labels()}
    triples = base.triples if not base.analytic else []
    for t in triples:
        ta = PauliObservable(BitString2n.from_index(n, t.a), 0 if table[t.a] > 0 else 2)
        tb = PauliObservable(BitString2n.from_index(n, t.b), 0 if table[t.b] > 0 else 2)
        tc = PauliObservable(BitString2n.from_index(n, t.c), 0 if table[t.c] > 0 else 2)
        if multiply(ta, tb) != tc:
            raise NormalizationError(
                f"T'_aT'_b != T'_(a+b) for triple ({format_pauli(ta)}, {format_pauli(tb)}, {format_pauli(tc)})"
            )
    return table


@dataclass
class SchemeReport:
    c1: bool
    c2: bool
    inferable: int
    contexts: int
    certificate: list[dict] | None
    free_gates: dict[str, bool]
    complementary_bases: bool

    def as_record(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "inferable": self.inferable,
            "contexts": self.contexts,
            "certificate": self.certificate,
            "free_gates": self.free_gates,
            "complementary_bases": self.complementary_bases,
        }


def triple_record(n: int, t: Triple) -> dict:
    lab = lambda i: BitString2n.from_index(n, i).to_string()  # noqa: E731
    return {"labels": [lab(t.a), lab(t.b), lab(t.c)], "rhs": t.beta, "context": t.context}


def check_scheme(spec: SchemeSpec, fast_path: bool = True) -> SchemeReport:
    cl = closure(spec, fast_path=fast_path)
    va = check_absence_of_sic(cl)
    cert = None
    if not va.consistent:
        cert = [triple_record(spec.n, t) for t in va.certificate]
    return SchemeReport(
        c1=va.consistent,
        c2=check_tomographic_completeness(cl),
        inferable=cl.size,
        contexts=cl.context_count,
        certificate=cert,
        free_gates={str(g): check_free_gate(spec, g) for g in spec.gates},
        complementary_bases=spec.has_complementary_bases(),
    )
