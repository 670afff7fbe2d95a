"""Hidden-variable simulation and contextuality analysis for qubit state-injection schemes."""
from .pauli import BitString2n, PauliObservable, commutes, multiply, parse_pauli, symplectic_form
from .scheme import SchemeSpec, check_scheme, closure, local_scheme, parse_scheme

__all__ = [
    "BitString2n",
    "PauliObservable",
    "SchemeSpec",
    "check_scheme",
    "closure",
    "commutes",
    "local_scheme",
    "multiply",
    "parse_pauli",
    "parse_scheme",
    "symplectic_form",
]
__version__ = "0.1.0"
