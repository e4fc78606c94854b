"""Transition amplitudes and checks of the time-sliced path-integral structure."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from sucs.core.errors import DimensionMismatchError, DomainError, PathRegularityError, SamplingError
from sucs.services import sampling
from sucs.services.algebra import RepresentationSpec
from sucs.services.coherent import CoherentState, Measure, state_in_chart
from sucs.services.dynamics import evolution_operator, kinetic_term
from sucs.services.hamiltonian import as_operator

logger = logging.getLogger(__name__)

MIN_SEMIGROUP_SAMPLES = 100_000
SEMIGROUP_DIMENSIONS = (2, 3)
MAX_KINETIC_STEP = 1e-3
DERIVATIVE_STEP = 1e-6
RICHARDSON_BAND = (1.7, 2.3)
RICHARDSON_FLOOR = 1e-13


class PropagatorMethod(str, Enum):
    SEMIGROUP_MC = "semigroup_mc"
    SHORT_TIME_PRODUCT = "short_time_product"


@dataclass(frozen=True)
class PropagatorReport:
    """Exact amplitude against an approximation.

    ``approx`` is a single estimate for SEMIGROUP_MC and one value per slice
    count for SHORT_TIME_PRODUCT; ``abs_error`` refers to the last one.
    """

    exact: complex
    approx: object
    abs_error: float
    method: PropagatorMethod
    samples: Optional[int] = None
    slices: Optional[Tuple[int, ...]] = None
    std_error: Optional[float] = None
    errors: Optional[Tuple[float, ...]] = None

    @property
    def consistent(self) -> bool:
        """Within 3 combined standard errors (always true without one)."""
        if self.std_error is None:
            return True
        return self.abs_error <= 3.0 * self.std_error


def _same_space(a: CoherentState, b: CoherentState) -> None:
    if a.rep != b.rep or a.spin_J != b.spin_J:
        raise DimensionMismatchError("Endpoint states live in different spaces")


def exact_amplitude(a: CoherentState, b: CoherentState, h, t: float) -> complex:
    """<a| exp(-i H t / hbar) |b>."""
    _same_space(a, b)
    u = evolution_operator(h, t, a.hbar, a.dim)
    return complex(np.vdot(a.vector, u @ b.vector))


def semigroup_mc_check(
    a: CoherentState,
    b: CoherentState,
    h,
    t: float,
    samples: int,
    seed: int,
    workers: Optional[int] = None,
) -> PropagatorReport:
    """Monte Carlo over one completeness insertion at t/2.

    T(t) = int dmu(psi) <a|U(t/2)|psi><psi|U(t/2)|b>, with psi drawn exactly
    from the normalized measure.
    """
    _same_space(a, b)
    if a.dim not in SEMIGROUP_DIMENSIONS:
        raise SamplingError(f"Semigroup check supports n in {SEMIGROUP_DIMENSIONS}, got n={a.dim}")
    if samples < MIN_SEMIGROUP_SAMPLES:
        raise SamplingError(f"Semigroup check needs at least {MIN_SEMIGROUP_SAMPLES} samples, got {samples}")
    measure = Measure(a.rep, a.spin_J)
    half = evolution_operator(h, t / 2.0, a.hbar, a.dim)
    left = half.conj().T @ a.vector
    right = half @ b.vector

    def kernel(rng: np.random.Generator, count: int) -> sampling.Moments:
        v = measure.vectors(measure.sample(rng, count))
        values = (v @ left.conj()) * (v.conj() @ right)
        return sampling.Moments.of(np.column_stack([values.real, values.imag]))

    pooled = sampling.pool_moments(sampling.map_chunks(kernel, samples, seed, workers))
    w = measure.weight()
    mean = pooled.mean * w
    se = pooled.std_error * w
    estimate = complex(mean[0], mean[1])
    exact = exact_amplitude(a, b, h, t)
    report = PropagatorReport(
        exact=exact,
        approx=estimate,
        abs_error=abs(estimate - exact),
        method=PropagatorMethod.SEMIGROUP_MC,
        samples=samples,
        std_error=float(np.hypot(se[0], se[1])),
    )
    logger.info(
        f"Semigroup check n={a.dim}, {samples} samples: |error|={report.abs_error:.3e}, "
        f"sigma={report.std_error:.3e}"
    )
    return report


def convergence_table(
    a: CoherentState,
    b: CoherentState,
    h,
    t: float,
    sample_counts: Sequence[int],
    seed: int,
    workers: Optional[int] = None,
) -> List[PropagatorReport]:
    return [semigroup_mc_check(a, b, h, t, count, seed, workers) for count in sample_counts]


def short_time_product(a: CoherentState, b: CoherentState, h, t: float, slices: Sequence[int]) -> PropagatorReport:
    """<a|(1 - i H eps / hbar)^N|b> with eps = t/N, for each N in ``slices``."""
    _same_space(a, b)
    slices = tuple(int(k) for k in slices)
    if not slices or min(slices) < 1:
        raise DomainError(f"Slice counts must be positive, got {slices!r}")
    matrix = as_operator(h, a.dim)
    exact = exact_amplitude(a, b, h, t)
    approx = []
    for count in slices:
        step = np.eye(a.dim) - 1j * (t / count) / a.hbar * matrix
        approx.append(complex(np.vdot(a.vector, np.linalg.matrix_power(step, count) @ b.vector)))
    errors = tuple(abs(value - exact) for value in approx)
    return PropagatorReport(
        exact=exact,
        approx=tuple(approx),
        abs_error=errors[-1],
        method=PropagatorMethod.SHORT_TIME_PRODUCT,
        slices=slices,
        errors=errors,
    )


@dataclass(frozen=True)
class KineticCheckReport:
    """Log-overlap kinetic term against the continuum kinetic Lagrangian."""

    epsilon: float
    max_deviation: float
    half_step_deviation: float
    ratio: Optional[float]

    @property
    def constant(self) -> float:
        """C in max deviation <= C * epsilon."""
        return self.max_deviation / self.epsilon


PathFunction = Callable[[float], np.ndarray]


def _central_difference(path: PathFunction, t: float) -> np.ndarray:
    forward = np.asarray(path(t + DERIVATIVE_STEP), dtype=np.complex128)
    backward = np.asarray(path(t - DERIVATIVE_STEP), dtype=np.complex128)
    return (forward - backward) / (2.0 * DERIVATIVE_STEP)


def discrete_kinetic(a: CoherentState, b: CoherentState, epsilon: float) -> complex:
    """(i hbar / eps) log <a|b> for neighbouring slices."""
    return 1j * a.hbar / epsilon * np.log(complex(np.vdot(a.vector, b.vector)))


def short_time_kinetic_check(
    path: PathFunction,
    rep: RepresentationSpec,
    times: Sequence[float],
    epsilon: float = 1e-4,
    velocity: Optional[PathFunction] = None,
    spin_J=None,
) -> KineticCheckReport:
    """Richardson comparison of the log-overlap kinetic term at eps and eps/2.

    The deviation from the continuum term must halve with the step, as a
    first-order expansion does.
    """
    if not 0 < epsilon <= MAX_KINETIC_STEP:
        raise DomainError(f"Kinetic-check step must lie in (0, {MAX_KINETIC_STEP:g}], got {epsilon:g}")
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise DomainError("Kinetic check needs at least one sample time")

    def at(t: float) -> CoherentState:
        return state_in_chart(path(t), rep, 0, spin_J)

    def deviation(step: float) -> float:
        worst = 0.0
        for t in times:
            here = at(t)
            psi_dot = velocity(t) if velocity is not None else _central_difference(path, t)
            continuum = kinetic_term(here, psi_dot)
            worst = max(worst, abs(discrete_kinetic(here, at(t + step), step) - continuum))
        return worst

    full = deviation(epsilon)
    half = deviation(epsilon / 2.0)
    # rounding in the overlap is amplified by 1/eps; compare the undivided log
    ratio = None if full * epsilon < RICHARDSON_FLOOR else full / max(half, np.finfo(float).tiny)
    report = KineticCheckReport(epsilon=epsilon, max_deviation=full, half_step_deviation=half, ratio=ratio)
    logger.debug(f"Kinetic check: dev(eps)={full:.3e}, dev(eps/2)={half:.3e}, ratio={ratio}")
    if ratio is not None and not RICHARDSON_BAND[0] <= ratio <= RICHARDSON_BAND[1]:
        raise PathRegularityError(
            f"Richardson ratio {ratio:.3f} outside {RICHARDSON_BAND}: path is not smooth at this resolution"
        )
    return report


def action_along_path(
    times: Sequence[float],
    psi_series,
    h,
    rep: RepresentationSpec,
    spin_J=None,
) -> float:
    """Trapezoidal integral of the Lagrangian along a uniformly sampled path."""
    times = np.asarray(times, dtype=float)
    psi_series = np.asarray(psi_series, dtype=np.complex128)
    if psi_series.ndim == 1:
        psi_series = psi_series[:, None]
    if len(times) < 3 or len(times) != len(psi_series):
        raise DomainError("Action needs at least three samples matching the time grid")
    steps = np.diff(times)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise DomainError("Action integration needs a uniform, increasing time grid")
    matrix = as_operator(h, rep.n)
    velocities = np.gradient(psi_series, times, axis=0, edge_order=2)
    values = np.empty(len(times))
    for k, (psi, psi_dot) in enumerate(zip(psi_series, velocities)):
        state = state_in_chart(psi, rep, 0, spin_J)
        energy = float(np.real(np.vdot(state.vector, matrix @ state.vector)))
        values[k] = kinetic_term(state, psi_dot) - energy
    return float(trapezoid(values, times))
