"""Hamiltonians as explicit hermitian matrices or generator polynomials."""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from sucs.core.errors import DimensionMismatchError, HermiticityError
from sucs.services.algebra import (
    RepresentationSpec,
    build_generators,
    hermiticity_residue,
    spin_label_operator,
)

HERMITICITY_TOLERANCE = 1e-10
MAX_DEGREE = 2

_SPIN_LABELS = frozenset({"I", "Sx", "Sy", "Sz", "Sp", "Sm", "S+", "S-"})


@dataclass(frozen=True)
class HamiltonianTerm:
    """coeff * ops[0] @ ops[1] @ ..."""

    coeff: float
    ops: Tuple[str, ...]

    def __post_init__(self):
        if not np.isfinite(self.coeff):
            raise HermiticityError(f"Non-finite coefficient in term {self.ops}")
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "ops", tuple(self.ops))
        if len(self.ops) > MAX_DEGREE:
            raise DimensionMismatchError(f"Monomial {self.ops} exceeds degree {MAX_DEGREE}")

    @property
    def degree(self) -> int:
        return sum(1 for op in self.ops if op != "I")


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Hermitian operator on the n-dimensional space of ``rep``.

    Exactly one of ``matrix`` and ``terms`` is given; the assembled matrix is
    checked for hermiticity once, at construction.
    """

    rep: RepresentationSpec
    matrix: Optional[np.ndarray] = None
    terms: Tuple[HamiltonianTerm, ...] = ()

    def __post_init__(self):
        if self.matrix is not None and self.terms:
            raise DimensionMismatchError("HamiltonianSpec takes a matrix or terms, not both")
        n = self.rep.n
        if self.matrix is not None:
            assembled = np.array(self.matrix, dtype=np.complex128)
            if assembled.shape != (n, n):
                raise DimensionMismatchError(f"Hamiltonian matrix has shape {assembled.shape}, expected {(n, n)}")
        else:
            gen = build_generators(self.rep)
            assembled = np.zeros((n, n), dtype=np.complex128)
            for term in self.terms:
                product = np.eye(n, dtype=np.complex128)
                for label in term.ops:
                    product = product @ spin_label_operator(gen, label)
                assembled += term.coeff * product
        if not np.all(np.isfinite(assembled)):
            raise HermiticityError("Hamiltonian has non-finite entries")
        residue = hermiticity_residue(assembled)
        if residue > HERMITICITY_TOLERANCE:
            raise HermiticityError(f"Hamiltonian is not hermitian (residue {residue:.3e})")
        assembled = 0.5 * (assembled + assembled.conj().T)
        assembled.setflags(write=False)
        object.__setattr__(self, "_assembled", assembled)

    @classmethod
    def from_matrix(cls, rep: RepresentationSpec, matrix) -> "HamiltonianSpec":
        return cls(rep=rep, matrix=np.array(matrix, dtype=np.complex128))

    @classmethod
    def from_terms(cls, rep: RepresentationSpec, terms: Iterable[Tuple[float, Sequence[str]]]) -> "HamiltonianSpec":
        return cls(rep=rep, terms=tuple(HamiltonianTerm(coeff, tuple(ops)) for coeff, ops in terms))

    @classmethod
    def linear(cls, rep: RepresentationSpec, coefficients: Sequence[float]) -> "HamiltonianSpec":
        """sum_k c_k T_k over the generalized Gell-Mann generators."""
        return cls.from_terms(rep, [(float(c), (f"T{k + 1}",)) for k, c in enumerate(coefficients)])

    @classmethod
    def zero(cls, rep: RepresentationSpec) -> "HamiltonianSpec":
        return cls.from_matrix(rep, np.zeros((rep.n, rep.n)))

    def as_matrix(self) -> np.ndarray:
        return self._assembled

    @property
    def n(self) -> int:
        return self.rep.n

    @property
    def degree(self) -> Optional[int]:
        """Polynomial degree; None for an explicit matrix."""
        if self.matrix is not None:
            return None
        return max((term.degree for term in self.terms), default=0)

    def is_linear(self, spin_mode: bool = False) -> bool:
        """Degree <= 1 in the generators of the group the state lives in.

        In the fundamental representation every hermitian matrix is a real
        combination of the identity and the n^2-1 generators, whatever form
        it was given in. In spin-J mode the group is SU(2): only the spin
        operators count, except for n = 2 where both notions coincide.
        """
        if not spin_mode or self.rep.n == 2:
            return True
        if self.matrix is not None:
            return False
        return all(term.degree <= 1 and set(term.ops) <= _SPIN_LABELS for term in self.terms)


def as_operator(h, n: Optional[int] = None) -> np.ndarray:
    """Matrix of a HamiltonianSpec or array-like, optionally checking dimension."""
    matrix = h.as_matrix() if isinstance(h, HamiltonianSpec) else np.asarray(h, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"Operator must be square, got shape {matrix.shape}")
    if n is not None and matrix.shape[0] != n:
        raise DimensionMismatchError(f"Operator has dimension {matrix.shape[0]}, state has {n}")
    return matrix
