"""
Bit-packed Gaussian elimination over GF(2) with infeasibility certificates.

Each equation is an integer bitmask over unknowns plus a right-hand-side bit.
Rows carry a second bitmask recording which input equations were summed to
produce them, so a ``0 = 1`` row is directly a certificate.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Equation:
    mask: int
    rhs: int


@dataclass
class GF2Result:
    solution: list[int] | None
    certificate: list[int] | None  # indices into the equation list
    rank: int

    @property
    def feasible(self) -> bool:
        return self.solution is not None


def _eliminate(equations: list[Equation], track: bool):
    pivots: dict[int, tuple[int, int, int]] = {}  # pivot bit -> (mask, rhs, history)
    for k, eq in enumerate(equations):
        mask, rhs, hist = eq.mask, eq.rhs & 1, (1 << k) if track else 0
        while mask:
            top = mask.bit_length() - 1
            row = pivots.get(top)
            if row is None:
                break
            mask ^= row[0]
            rhs ^= row[1]
            hist ^= row[2]
        if mask:
            pivots[mask.bit_length() - 1] = (mask, rhs, hist)
        elif rhs:
            return pivots, hist
    return pivots, None


def solve(equations: list[Equation], nvars: int) -> GF2Result:
    """Solve ``A s = b``; free variables are fixed to 0.

    On infeasibility returns an inclusion-minimal subset of equations whose
    GF(2) sum reads ``0 = 1``.
    """
    pivots, bad = _eliminate(equations, track=True)
    if bad is not None:
        cert = [k for k in range(len(equations)) if (bad >> k) & 1]
        return GF2Result(None, minimize_certificate(equations, cert), len(pivots))
    # back-substitute from low pivots to high; each row's other bits are lower
    sol = [0] * nvars
    for top in sorted(pivots):
        mask, rhs, _ = pivots[top]
        rest = mask & ~(1 << top)
        val = rhs
        while rest:
            low = rest & -rest
            val ^= sol[low.bit_length() - 1]
            rest ^= low
        sol[top] = val
    return GF2Result(sol, None, len(pivots))


def is_feasible(equations: list[Equation]) -> bool:
    return _eliminate(equations, track=False)[1] is None


def minimize_certificate(equations: list[Equation], cert: list[int]) -> list[int]:
    """Greedy deletion down to an inclusion-minimal infeasible subset."""
    keep = list(cert)
    i = 0
    while i < len(keep):
        trial = keep[:i] + keep[i + 1:]
        if not is_feasible([equations[k] for k in trial]):
            keep = trial
        else:
            i += 1
    return keep


def check_certificate(equations: list[Equation], cert: list[int]) -> bool:
    """True iff the listed equations sum to ``0 = 1``."""
    mask = rhs = 0
    for k in cert:
        mask ^= equations[k].mask
        rhs ^= equations[k].rhs
    return mask == 0 and rhs == 1


def satisfies(equations: list[Equation], sol: list[int]) -> bool:
    bits = sum(b << i for i, b in enumerate(sol))
    return all(((e.mask & bits).bit_count() & 1) == (e.rhs & 1) for e in equations)
