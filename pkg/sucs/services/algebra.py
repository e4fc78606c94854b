"""Generator bases of su(n), spin ladder operators and Casimir checks.

Hilbert-space ordering: index 0 is the lowest-weight state |S, -S>, the
following indices ascend in S^z eigenvalue. The generalized Gell-Mann
generators are dimensionless with tr(T_a T_b) = 2 delta_ab; the spin triple
carries hbar.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from sucs.core.errors import DimensionMismatchError, RepresentationError

logger = logging.getLogger(__name__)

NORMALIZATION = 2.0
SPIN_LABELS = ("Sx", "Sy", "Sz")
QUADRUPOLE_LABELS = ("Qx2-y2", "Q3z2-r2", "Qxy", "Qyz", "Qzx")
_LADDER_ALIASES = {"Sp": "Sp", "S+": "Sp", "Sm": "Sm", "S-": "Sm"}


@dataclass(frozen=True)
class RepresentationSpec:
    """Fundamental representation of SU(n), read as spin S = (n-1)/2."""

    n: int
    hbar: float = 1.0

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise RepresentationError(f"Group dimension must be an integer >= 2, got {self.n!r}")
        if not np.isfinite(self.hbar) or self.hbar <= 0:
            raise RepresentationError(f"hbar must be a positive finite number, got {self.hbar!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def spin(self) -> Fraction:
        return Fraction(self.n - 1, 2)

    @property
    def casimir_value(self) -> float:
        s = float(self.spin)
        return s * (s + 1) * self.hbar ** 2

    @classmethod
    def from_spin(cls, spin, hbar: float = 1.0) -> "RepresentationSpec":
        two_s = Fraction(spin) * 2
        if two_s.denominator != 1 or two_s < 1:
            raise RepresentationError(f"Spin must be a positive half-integer, got {spin!r}")
        return cls(n=int(two_s) + 1, hbar=hbar)


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """The n^2-1 generators of su(n) plus the spin-S ladder triple."""

    rep: RepresentationSpec
    pairs: Tuple[Tuple[int, int], ...]
    off_diag_sym: Tuple[np.ndarray, ...]
    off_diag_antisym: Tuple[np.ndarray, ...]
    diagonal: Tuple[np.ndarray, ...]
    s_z: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    _stack: np.ndarray = field(repr=False, default=None)

    def basis_unit(self, h: int, j: int) -> np.ndarray:
        return basis_unit(self.rep.n, h, j)

    @property
    def s_x(self) -> np.ndarray:
        return 0.5 * (self.s_plus + self.s_minus)

    @property
    def s_y(self) -> np.ndarray:
        return -0.5j * (self.s_plus - self.s_minus)

    @property
    def spin_triple(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.s_x, self.s_y, self.s_z

    @property
    def count(self) -> int:
        return len(self.off_diag_sym) + len(self.off_diag_antisym) + len(self.diagonal)

    @property
    def labels(self) -> List[str]:
        return [f"T{k + 1}" for k in range(self.count)]

    def all(self) -> np.ndarray:
        """Stack (n^2-1, n, n): symmetric, antisymmetric, then diagonal."""
        return self._stack

    def raising_from_reference(self, i: int) -> np.ndarray:
        """|i><0| assembled as (Theta - i beta)/2 on the (0, i) plane."""
        if not 1 <= i < self.rep.n:
            raise DimensionMismatchError(f"State index {i} out of range for n={self.rep.n}")
        k = self.pairs.index((1, i + 1))
        return 0.5 * (self.off_diag_sym[k] - 1j * self.off_diag_antisym[k])


def basis_unit(n: int, h: int, j: int) -> np.ndarray:
    """e_j^h: a single 1 in row h, column j (1-based)."""
    if not (1 <= h <= n and 1 <= j <= n):
        raise DimensionMismatchError(f"Basis unit ({h}, {j}) out of range for n={n}")
    e = np.zeros((n, n), dtype=np.complex128)
    e[h - 1, j - 1] = 1.0
    return e


def spin_ladder(rep: RepresentationSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(s_z, s_+, s_-) for spin S = (n-1)/2 in the lowest-weight-first basis."""
    n = rep.n
    s = float(rep.spin)
    m = -s + np.arange(n)
    s_z = np.diag(m).astype(np.complex128) * rep.hbar
    k = np.arange(n - 1)
    ladder = np.sqrt((2 * s - k) * (k + 1))
    s_plus = np.diag(ladder, -1).astype(np.complex128) * rep.hbar
    return s_z, s_plus, s_plus.conj().T.copy()


def build_generators(rep: RepresentationSpec) -> GeneratorSet:
    """Generalized Gell-Mann set plus the spin triple for ``rep``."""
    return _build_generators_cached(rep.n, rep.hbar)


@lru_cache(maxsize=64)
def _build_generators_cached(n: int, hbar: float) -> GeneratorSet:
    rep = RepresentationSpec(n=n, hbar=hbar)
    pairs: List[Tuple[int, int]] = []
    sym: List[np.ndarray] = []
    antisym: List[np.ndarray] = []
    for h in range(1, n + 1):
        for j in range(h + 1, n + 1):
            pairs.append((h, j))
            e_hj = basis_unit(n, h, j)
            e_jh = basis_unit(n, j, h)
            sym.append(e_hj + e_jh)
            antisym.append(-1j * (e_hj - e_jh))

    diagonal: List[np.ndarray] = []
    for m in range(1, n):
        entries = np.zeros(n)
        entries[:m] = 1.0
        entries[m] = -m
        diagonal.append(np.sqrt(2.0 / (m * (m + 1))) * np.diag(entries).astype(np.complex128))

    s_z, s_plus, s_minus = spin_ladder(rep)
    stack = np.array(sym + antisym + diagonal, dtype=np.complex128)
    for matrix in (s_z, s_plus, s_minus, stack):
        matrix.setflags(write=False)
    logger.debug(f"Built {len(stack)} generators for su({n})")
    return GeneratorSet(
        rep=rep,
        pairs=tuple(pairs),
        off_diag_sym=tuple(sym),
        off_diag_antisym=tuple(antisym),
        diagonal=tuple(diagonal),
        s_z=s_z,
        s_plus=s_plus,
        s_minus=s_minus,
        _stack=stack,
    )


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionMismatchError(f"Commutator needs equal square matrices, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def hermiticity_residue(matrix: np.ndarray) -> float:
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


@dataclass(frozen=True, eq=False)
class CasimirReport:
    matrix: np.ndarray
    eigenvalue: float
    is_scalar: bool
    expected: float

    @property
    def error(self) -> float:
        return abs(self.eigenvalue - self.expected)


def casimir(gen: GeneratorSet) -> CasimirReport:
    """C2 = s_z^2 + (s_+ s_- + s_- s_+)/2."""
    c2 = gen.s_z @ gen.s_z + 0.5 * (gen.s_plus @ gen.s_minus + gen.s_minus @ gen.s_plus)
    eigenvalue = float(np.real(np.trace(c2))) / gen.rep.n
    residual = float(np.max(np.abs(c2 - eigenvalue * np.eye(gen.rep.n))))
    return CasimirReport(
        matrix=c2,
        eigenvalue=eigenvalue,
        is_scalar=residual < 1e-10,
        expected=gen.rep.casimir_value,
    )


def _real_vectors(matrices: np.ndarray) -> np.ndarray:
    """Columns are the matrices flattened to real vectors (Re, Im)."""
    flat = matrices.reshape(len(matrices), -1)
    return np.concatenate([flat.real, flat.imag], axis=1).T


def structure_constants(gen: GeneratorSet, method: str = "trace") -> np.ndarray:
    """f_abc with [T_a, T_b] = 2i sum_c f_abc T_c.

    ``trace`` uses f_abc = tr([T_a, T_b] T_c) / 4i; ``solve`` expands each
    commutator in the generator basis by least squares.
    """
    t = gen.all()
    if method == "trace":
        triple = np.einsum("aij,bjk,cki->abc", t, t, t, optimize=True)
        return np.real((triple - triple.transpose(1, 0, 2)) / 4j)
    if method == "solve":
        k = len(t)
        comm = np.einsum("aij,bjk->abik", t, t) - np.einsum("bij,ajk->abik", t, t)
        targets = _real_vectors((comm / 2j).reshape(k * k, gen.rep.n, gen.rep.n))
        coeffs, *_ = np.linalg.lstsq(_real_vectors(t), targets, rcond=None)
        return coeffs.T.reshape(k, k, k)
    raise ValueError(f"Unknown structure-constant method: {method}")


def span_residual(basis: Sequence[np.ndarray], targets: Sequence[np.ndarray]) -> float:
    """Largest distance of a target from the real span of ``basis``."""
    a = _real_vectors(np.asarray(basis, dtype=np.complex128))
    b = _real_vectors(np.asarray(targets, dtype=np.complex128))
    coeffs, *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(np.max(np.abs(a @ coeffs - b)))


def spin_label_operator(gen: GeneratorSet, label: str) -> np.ndarray:
    """Resolve "Sx", "Sy", "Sz", "Sp"/"S+", "Sm"/"S-", "I" or "T<k>"."""
    if label == "Sx":
        return gen.s_x
    if label == "Sy":
        return gen.s_y
    if label == "Sz":
        return gen.s_z
    if label in _LADDER_ALIASES:
        return gen.s_plus if _LADDER_ALIASES[label] == "Sp" else gen.s_minus
    if label == "I":
        return np.eye(gen.rep.n, dtype=np.complex128)
    if label.startswith("T") and label[1:].isdigit():
        k = int(label[1:])
        if 1 <= k <= gen.count:
            return gen.all()[k - 1]
    raise DimensionMismatchError(f"Unknown operator label {label!r} for n={gen.rep.n}")


def quadrupole_operators(gen: GeneratorSet) -> Dict[str, np.ndarray]:
    """Rank-2 spin tensors; they vanish identically for S = 1/2."""
    sx, sy, sz = gen.spin_triple
    s = float(gen.rep.spin)
    identity = np.eye(gen.rep.n)
    return {
        "Qx2-y2": sx @ sx - sy @ sy,
        "Q3z2-r2": (3 * sz @ sz - s * (s + 1) * gen.rep.hbar ** 2 * identity) / np.sqrt(3.0),
        "Qxy": sx @ sy + sy @ sx,
        "Qyz": sy @ sz + sz @ sy,
        "Qzx": sz @ sx + sx @ sz,
    }


@dataclass(frozen=True, eq=False)
class MultipoleBasis:
    """Orthonormal (tr = 2) multipole operators: dipole block first."""

    labels: Tuple[str, ...]
    operators: np.ndarray
    dipole_count: int = 3

    @property
    def higher_labels(self) -> Tuple[str, ...]:
        return self.labels[self.dipole_count:]

    def purity_target(self) -> float:
        """sum_mu <T_mu>^2 for any pure state."""
        n = self.operators.shape[1]
        return NORMALIZATION * (n - 1) / n


def multipole_basis(gen: GeneratorSet) -> MultipoleBasis:
    return _multipole_basis_cached(gen.rep.n, gen.rep.hbar)


@lru_cache(maxsize=32)
def _multipole_basis_cached(n: int, hbar: float) -> MultipoleBasis:
    gen = build_generators(RepresentationSpec(n=n, hbar=hbar))
    candidates: List[Tuple[str, np.ndarray]] = list(zip(SPIN_LABELS, gen.spin_triple))
    if n >= 3:
        candidates.extend(quadrupole_operators(gen).items())
    candidates.extend(zip((f"M{k + 1}" for k in range(gen.count)), gen.all()))

    labels: List[str] = []
    accepted: List[np.ndarray] = []
    extra = 0
    for label, op in candidates:
        residual = op.astype(np.complex128)
        for q in accepted:
            residual = residual - np.real(np.trace(q @ residual)) / NORMALIZATION * q
        norm2 = np.real(np.trace(residual @ residual))
        if norm2 < 1e-10:
            continue
        accepted.append(residual * np.sqrt(NORMALIZATION / norm2))
        if label.startswith("M"):
            extra += 1
            label = f"M{extra}"
        labels.append(label)
        if len(accepted) == gen.count:
            break
    return MultipoleBasis(labels=tuple(labels), operators=np.array(accepted))


def algebra_checks(gen: GeneratorSet, rng: np.random.Generator, triples: int = 100) -> List[Dict[str, object]]:
    """The invariant suite for one representation, as pass/fail records."""
    t = gen.all()
    n = gen.rep.n
    hbar = gen.rep.hbar
    checks: List[Dict[str, object]] = []

    def record(name: str, value: float, threshold: float, passed=None):
        checks.append({
            "name": name,
            "value": float(value),
            "threshold": float(threshold),
            "passed": bool(value < threshold) if passed is None else bool(passed),
        })

    record("generator_count", abs(len(t) - (n * n - 1)), 0.5)
    record("hermitian", max(hermiticity_residue(m) for m in t), 1e-12)
    record("traceless", float(np.max(np.abs(np.trace(t, axis1=1, axis2=2)))), 1e-12)
    gram = np.real(np.einsum("aij,bji->ab", t, t))
    record("trace_orthonormal", float(np.max(np.abs(gram - NORMALIZATION * np.eye(len(t))))), 1e-12)
    record("sz_splus", float(np.max(np.abs(commutator(gen.s_z, gen.s_plus) - hbar * gen.s_plus))), 1e-12)
    record("sz_sminus", float(np.max(np.abs(commutator(gen.s_z, gen.s_minus) + hbar * gen.s_minus))), 1e-12)
    record("splus_sminus", float(np.max(np.abs(commutator(gen.s_plus, gen.s_minus) - 2 * hbar * gen.s_z))), 1e-12)

    report = casimir(gen)
    record("casimir_scalar", float(np.max(np.abs(report.matrix - report.eigenvalue * np.eye(n)))), 1e-10)
    record("casimir_value", report.error, 1e-10)

    worst = 0.0
    for _ in range(triples):
        a, b, c = (t[k] for k in rng.integers(0, len(t), size=3))
        jacobi = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
        worst = max(worst, float(np.max(np.abs(jacobi))))
    record("jacobi", worst, 1e-10)

    # the rank-3 tensors grow as n^6; the cross-check is kept to desk-scale n
    if n <= 6:
        f_trace = structure_constants(gen, "trace")
        f_solve = structure_constants(gen, "solve")
        record("structure_constants_agree", float(np.max(np.abs(f_trace - f_solve))), 1e-10)
        antisym = max(
            float(np.max(np.abs(f_trace + f_trace.transpose(1, 0, 2)))),
            float(np.max(np.abs(f_trace + f_trace.transpose(0, 2, 1)))),
        )
        record("structure_constants_antisymmetric", antisym, 1e-10)
    return checks
