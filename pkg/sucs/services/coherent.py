"""SU(n) coherent states in stereographic coordinates.

Fundamental mode: |psi> = (1 + sum|psi_i|^2)^(-1/2) (|0> + sum psi_i |i>) on
C^n. SU(2) spin-J mode: |xi> = (1 + |xi|^2)^(-J) exp(xi s_+)|J, -J> on
C^(2J+1), with a single coordinate. States are compared up to global phase.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, pi
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import comb
from scipy.stats import norm

from sucs.core.errors import DimensionMismatchError, DomainError, HermiticityError, SamplingError
from sucs.services import sampling
from sucs.services.algebra import (
    GeneratorSet,
    RepresentationSpec,
    build_generators,
    hermiticity_residue,
    spin_label_operator,
)
from sucs.services.hamiltonian import HERMITICITY_TOLERANCE, as_operator

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-12
MIN_COMPLETENESS_SAMPLES = 10_000
LADDER_PRODUCTS = ("Qzz", "Q+-", "Q-+")


def spin_j_rep(spin_J, hbar: float = 1.0) -> RepresentationSpec:
    """Hilbert space of the SU(2) spin-J coherent states."""
    return RepresentationSpec.from_spin(spin_J, hbar=hbar)


def _as_spin(spin_J) -> Optional[Fraction]:
    if spin_J is None:
        return None
    value = Fraction(spin_J).limit_denominator(2)
    if (2 * value).denominator != 1 or value <= 0:
        raise DomainError(f"spin_J must be a positive half-integer, got {spin_J!r}")
    return value


def chart_dim(rep: RepresentationSpec, spin_J=None) -> int:
    """Number of complex coordinates: n-1, or 1 in spin-J mode."""
    return 1 if spin_J is not None else rep.n - 1


def _check_spin_rep(rep: RepresentationSpec, spin_J: Optional[Fraction]) -> None:
    if spin_J is not None and rep.n != int(2 * spin_J) + 1:
        raise DimensionMismatchError(f"spin_J={spin_J} needs n={int(2 * spin_J) + 1}, got n={rep.n}")


@dataclass(frozen=True)
class Chart:
    """Which basis state plays the reference |0> for the coordinates.

    Fundamental mode swaps 0 and ``reference``; spin-J mode only allows the
    lowest (0) and highest (2J) weight, the latter by reversing the basis.
    Both permutations are involutions.
    """

    dim: int
    reference: int = 0
    spin_mode: bool = False

    def __post_init__(self):
        if not 0 <= self.reference < self.dim:
            raise DomainError(f"Chart reference {self.reference} out of range for dimension {self.dim}")
        if self.spin_mode and self.reference not in (0, self.dim - 1):
            raise DomainError("Spin-J charts are based at the lowest or highest weight only")

    @property
    def perm(self) -> np.ndarray:
        if self.spin_mode:
            return np.arange(self.dim)[::-1].copy() if self.reference else np.arange(self.dim)
        perm = np.arange(self.dim)
        perm[0], perm[self.reference] = self.reference, 0
        return perm

    def to_frame(self, op: np.ndarray) -> np.ndarray:
        if self.reference == 0:
            return op
        p = self.perm
        return op[np.ix_(p, p)]

    def vector_to_frame(self, vector: np.ndarray) -> np.ndarray:
        return vector if self.reference == 0 else vector[self.perm]

    vector_from_frame = vector_to_frame


@dataclass(frozen=True)
class CoherentParams:
    """Group-displacement parameters xi (alpha for SU(2))."""

    xi: np.ndarray
    rep: RepresentationSpec
    spin_J: Optional[Fraction] = None

    def __post_init__(self):
        spin = _as_spin(self.spin_J)
        object.__setattr__(self, "spin_J", spin)
        _check_spin_rep(self.rep, spin)
        xi = np.atleast_1d(np.asarray(self.xi, dtype=np.complex128))
        if xi.shape != (chart_dim(self.rep, spin),):
            raise DimensionMismatchError(f"xi must have length {chart_dim(self.rep, spin)}, got {xi.shape}")
        if not np.all(np.isfinite(xi)):
            raise DomainError("xi has non-finite entries")
        if spin is not None and np.linalg.norm(xi) > pi / 2 + SINGULAR_TOLERANCE:
            raise DomainError(f"|alpha| must not exceed pi/2, got {np.linalg.norm(xi):.6g}")
        object.__setattr__(self, "xi", xi)

    @property
    def modulus(self) -> float:
        return float(np.linalg.norm(self.xi))


@dataclass(frozen=True, eq=False)
class CoherentState:
    """Normalized state with its coordinates in the given chart."""

    psi: np.ndarray
    vector: np.ndarray
    rep: RepresentationSpec
    spin_J: Optional[Fraction] = None
    chart: int = 0

    @property
    def spin_mode(self) -> bool:
        return self.spin_J is not None

    @property
    def dim(self) -> int:
        return self.rep.n

    @property
    def hbar(self) -> float:
        return self.rep.hbar

    @property
    def frame(self) -> Chart:
        return Chart(self.dim, self.chart, self.spin_mode)

    @property
    def chart_norm(self) -> float:
        """1 + sum |psi_i|^2 in the state's own chart."""
        return 1.0 + float(np.real(np.vdot(self.psi, self.psi)))

    @property
    def kinetic_weight(self) -> float:
        """2J: 1 in fundamental mode."""
        return float(2 * self.spin_J) if self.spin_mode else 1.0


def psi_from_xi(params: CoherentParams) -> np.ndarray:
    """psi_i = (xi_i/|xi|) tan|xi|."""
    r = params.modulus
    if abs(r - pi / 2) < SINGULAR_TOLERANCE:
        raise DomainError("|xi| = pi/2 maps to the antipodal point, which the chart does not cover")
    if r < 1e-8:
        return params.xi * (1.0 + r * r / 3.0)
    return params.xi * (np.tan(r) / r)


def frame_vector(psi: np.ndarray, spin_J: Optional[Fraction]) -> Tuple[np.ndarray, float]:
    """Unnormalized frame vector and its squared norm."""
    if spin_J is None:
        v = np.concatenate(([1.0 + 0j], psi))
        return v, 1.0 + float(np.real(np.vdot(psi, psi)))
    two_j = int(2 * spin_J)
    k = np.arange(two_j + 1)
    xi = psi[0]
    v = np.sqrt(comb(two_j, k)) * xi ** k
    return v.astype(np.complex128), (1.0 + abs(xi) ** 2) ** two_j


def state_in_chart(psi, rep: RepresentationSpec, chart: int = 0, spin_J=None) -> CoherentState:
    """Coherent state from coordinates in the chart based at ``chart``."""
    spin = _as_spin(spin_J)
    _check_spin_rep(rep, spin)
    psi = np.atleast_1d(np.asarray(psi, dtype=np.complex128)).copy()
    if psi.shape != (chart_dim(rep, spin),):
        raise DimensionMismatchError(f"psi must have length {chart_dim(rep, spin)}, got {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise DomainError("psi has non-finite entries")
    v, norm2 = frame_vector(psi, spin)
    vector = Chart(rep.n, chart, spin is not None).vector_from_frame(v / np.sqrt(norm2))
    psi.setflags(write=False)
    vector.setflags(write=False)
    return CoherentState(psi=psi, vector=vector, rep=rep, spin_J=spin, chart=chart)


def state_from_psi(psi, rep: RepresentationSpec, spin_J=None) -> CoherentState:
    return state_in_chart(psi, rep, 0, spin_J)


def state_from_spin_j(xi: complex, spin_J, hbar: float = 1.0) -> CoherentState:
    """(1 + |xi|^2)^(-J) exp(xi s_+/hbar)|J, -J> on C^(2J+1)."""
    return state_in_chart([xi], spin_j_rep(spin_J, hbar), 0, spin_J)


def coordinates(vector: np.ndarray, chart: Chart) -> np.ndarray:
    """Chart coordinates of a normalized vector lying on the coherent-state orbit."""
    u = chart.vector_to_frame(np.asarray(vector, dtype=np.complex128))
    if abs(u[0]) < 1e-300:
        raise DomainError(f"State is not covered by the chart based at {chart.reference}")
    if chart.spin_mode:
        return np.array([u[1] / (u[0] * np.sqrt(chart.dim - 1))]) if chart.dim > 1 else np.zeros(1, complex)
    return u[1:] / u[0]


def best_chart(state: CoherentState) -> int:
    """Chart in which the state has the smallest coordinates."""
    if state.spin_mode:
        return 0 if abs(state.vector[0]) >= abs(state.vector[-1]) else state.dim - 1
    return int(np.argmax(np.abs(state.vector)))


def rechart(state: CoherentState, chart: Optional[int] = None) -> CoherentState:
    """Same point, coordinates re-expressed in ``chart`` (default: the best one)."""
    target = best_chart(state) if chart is None else chart
    if target == state.chart:
        return state
    psi = coordinates(state.vector, Chart(state.dim, target, state.spin_mode))
    return state_in_chart(psi, state.rep, target, state.spin_J)


def state_from_exponential(params: CoherentParams) -> CoherentState:
    """exp(sum_i xi_i T_i^+ - conj(xi_i) T_i^-)|0> by dense matrix exponential.

    T_i^+ = |i><0| in fundamental mode, s_+/hbar in spin-J mode.
    """
    rep = params.rep
    gen = build_generators(rep)
    if params.spin_J is not None:
        raising = gen.s_plus / rep.hbar
        a = params.xi[0] * raising
    else:
        a = np.zeros((rep.n, rep.n), dtype=np.complex128)
        for i, xi in enumerate(params.xi, start=1):
            a += xi * gen.raising_from_reference(i)
    generator = a - a.conj().T
    vector = expm(generator)[:, 0]
    vector = vector / np.linalg.norm(vector)
    if abs(vector[0]) < SINGULAR_TOLERANCE:
        raise DomainError("|xi| = pi/2 maps to the antipodal point, which the chart does not cover")
    psi = coordinates(vector, Chart(rep.n, 0, params.spin_J is not None))
    vector.setflags(write=False)
    psi.setflags(write=False)
    return CoherentState(psi=psi, vector=vector, rep=rep, spin_J=params.spin_J)


def _check_same_space(a: CoherentState, b: CoherentState) -> None:
    if a.rep != b.rep or a.spin_J != b.spin_J:
        raise DimensionMismatchError(f"States live in different spaces: {a.rep}/{a.spin_J} vs {b.rep}/{b.spin_J}")


def overlap(a: CoherentState, b: CoherentState) -> complex:
    _check_same_space(a, b)
    return complex(np.vdot(a.vector, b.vector))


def fidelity(a: CoherentState, b: CoherentState) -> float:
    return abs(overlap(a, b)) ** 2


def expectation(state: CoherentState, h) -> float:
    """<psi|H|psi> for hermitian H."""
    matrix = as_operator(h, state.dim)
    residue = hermiticity_residue(matrix)
    if residue > HERMITICITY_TOLERANCE:
        raise HermiticityError(f"Operator is not hermitian (residue {residue:.3e})")
    value = np.vdot(state.vector, matrix @ state.vector)
    scale = max(1.0, float(np.max(np.abs(matrix))) if matrix.size else 1.0)
    if abs(value.imag) > 1e-12 * scale:
        raise HermiticityError(f"Expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def raw_expectation(state: CoherentState, op: np.ndarray) -> complex:
    """<psi|O|psi> for any O (complex in general)."""
    return complex(np.vdot(state.vector, as_operator(op, state.dim) @ state.vector))


def observable_operator(gen: GeneratorSet, label: str) -> np.ndarray:
    """Operator for a generator label or one of Qzz, Q+-, Q-+."""
    if label == "Qzz":
        return gen.s_z @ gen.s_z
    if label == "Q+-":
        return gen.s_plus @ gen.s_minus
    if label == "Q-+":
        return gen.s_minus @ gen.s_plus
    return spin_label_operator(gen, label)


def label_expectation(state: CoherentState, label: str) -> float:
    return expectation(state, observable_operator(build_generators(state.rep), label))


def multipole_expectations(state: CoherentState) -> Dict[str, float]:
    """<T_a> for all generators, the dipole triple and the ladder quadratic forms."""
    gen = build_generators(state.rep)
    v = state.vector
    values: Dict[str, float] = {}
    t = gen.all()
    generator_values = np.real(np.einsum("i,aij,j->a", v.conj(), t, v))
    for label, value in zip(gen.labels, generator_values):
        values[label] = float(value)
    for label in ("Sx", "Sy", "Sz") + LADDER_PRODUCTS:
        values[label] = label_expectation(state, label)
    return values


@dataclass(frozen=True)
class Measure:
    """Rotation-invariant measure with int |psi><psi| dmu = I.

    Fundamental: n!/pi^(n-1) d^(2(n-1))psi / (1+|psi|^2)^n.
    Spin-J: (2J+1)/pi d^2 xi / (1+|xi|^2)^2.
    """

    rep: RepresentationSpec
    spin_J: Optional[Fraction] = None

    def __post_init__(self):
        spin = _as_spin(self.spin_J)
        object.__setattr__(self, "spin_J", spin)
        _check_spin_rep(self.rep, spin)

    @property
    def coordinate_dim(self) -> int:
        return chart_dim(self.rep, self.spin_J)

    @property
    def total_mass(self) -> float:
        """Hilbert-space dimension (trace of the identity)."""
        return float(self.rep.n)

    @property
    def power(self) -> int:
        return 2 if self.spin_J is not None else self.rep.n

    @property
    def constant(self) -> float:
        if self.spin_J is not None:
            return float(2 * self.spin_J + 1) / pi
        n = self.rep.n
        return factorial(n) / pi ** (n - 1)

    def density(self, psi) -> float:
        psi = np.atleast_1d(np.asarray(psi, dtype=np.complex128))
        return self.constant / (1.0 + float(np.real(np.vdot(psi, psi)))) ** self.power

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Exact draws from density/total_mass, shape (count, coordinate_dim).

        With r = |psi|^2/(1+|psi|^2) the radial law is r^(m-1) dr on [0, 1),
        so r = u^(1/m); the direction is uniform on the sphere in C^m.
        """
        m = self.coordinate_dim
        u = rng.random(count)
        r = u ** (1.0 / m)
        gauss = rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))
        direction = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
        with np.errstate(divide="ignore"):
            radius = np.sqrt(r / (1.0 - r))
        return direction * radius[:, None]

    def weight(self) -> float:
        """density / sampling density; constant for exact sampling."""
        return self.total_mass

    def vectors(self, psi: np.ndarray) -> np.ndarray:
        """Normalized state vectors for a batch of coordinates, shape (count, n)."""
        if self.spin_J is None:
            v = np.concatenate([np.ones((len(psi), 1), dtype=np.complex128), psi], axis=1)
            return v / np.linalg.norm(v, axis=1, keepdims=True)
        two_j = int(2 * self.spin_J)
        k = np.arange(two_j + 1)
        v = np.sqrt(comb(two_j, k))[None, :] * psi[:, :1] ** k[None, :]
        return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class ResolutionReport:
    """Monte Carlo estimate of int |psi><psi| dmu against the identity."""

    estimate: np.ndarray
    std_error: np.ndarray
    residual: float
    max_std_error: float
    trace: float
    z_max: float
    z_threshold: float
    samples: int

    @property
    def consistent(self) -> bool:
        return self.z_max <= self.z_threshold


def family_threshold(components: int, sigmas: float = 3.0) -> float:
    """Per-component z threshold keeping the family-wise rate of a single 3-sigma test."""
    tail = norm.sf(sigmas)
    return float(norm.isf(tail / max(components, 1)))


def z_scores(deviation: np.ndarray, std_error: np.ndarray) -> np.ndarray:
    """|deviation|/sigma; zero-variance components must match exactly."""
    z = np.zeros_like(deviation, dtype=float)
    live = std_error > 0
    z[live] = np.abs(deviation[live]) / std_error[live]
    z[~live & (np.abs(deviation) > 1e-12)] = np.inf
    return z


def verify_resolution_of_identity(
    rep: RepresentationSpec,
    samples: int,
    seed: int,
    spin_J=None,
    workers: Optional[int] = None,
) -> ResolutionReport:
    if samples < MIN_COMPLETENESS_SAMPLES:
        raise SamplingError(f"Completeness check needs at least {MIN_COMPLETENESS_SAMPLES} samples, got {samples}")
    measure = Measure(rep, spin_J)
    n = rep.n

    def kernel(rng: np.random.Generator, count: int) -> sampling.Moments:
        v = measure.vectors(measure.sample(rng, count))
        projector = v[:, :, None] * v.conj()[:, None, :]
        flat = projector.reshape(count, n * n)
        return sampling.Moments.of(np.concatenate([flat.real, flat.imag], axis=1))

    pooled = sampling.pool_moments(sampling.map_chunks(kernel, samples, seed, workers))
    w = measure.weight()
    mean = pooled.mean * w
    se = pooled.std_error * w
    estimate = (mean[: n * n] + 1j * mean[n * n:]).reshape(n, n)
    std_error = (se[: n * n] + 1j * se[n * n:]).reshape(n, n)

    identity = np.eye(n)
    deviation = np.concatenate([(estimate - identity).real.ravel(), (estimate - identity).imag.ravel()])
    sigma = np.concatenate([std_error.real.ravel(), std_error.imag.ravel()])
    z = z_scores(deviation, sigma)
    live = int(np.count_nonzero(sigma > 0))
    report = ResolutionReport(
        estimate=estimate,
        std_error=std_error,
        residual=float(np.max(np.abs(estimate - identity))),
        max_std_error=float(np.max(sigma)),
        trace=float(np.real(np.trace(estimate))),
        z_max=float(np.max(z)),
        z_threshold=family_threshold(live),
        samples=samples,
    )
    logger.info(
        f"Resolution of identity n={n}: residual={report.residual:.3e}, "
        f"max sigma={report.max_std_error:.3e}, z_max={report.z_max:.2f}"
    )
    return report
