"""Classical coherent-state dynamics and the exact quantum oracle.

The flow is integrated in real coordinates (Re psi, Im psi) with the
Dormand-Prince 5(4) stepper. Coordinates live in a chart (see
``coherent.Chart``); whenever |psi| exceeds CHART_LIMIT after an accepted
step the affected site is re-expressed in its best chart and the stepper is
restarted, which is recorded as a chart flip.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import RK45
from scipy.linalg import expm
from scipy.special import comb

from sucs.core.errors import DimensionMismatchError, DomainError, HermiticityError, IntegrationError, OracleCapacityError
from sucs.services.algebra import RepresentationSpec, build_generators, casimir
from sucs.services.coherent import (
    CoherentState,
    chart_dim,
    frame_vector,
    observable_operator,
    rechart,
    state_in_chart,
)
from sucs.services.hamiltonian import HamiltonianSpec, as_operator

logger = logging.getLogger(__name__)

__all__ = [
    "HamiltonianSpec",
    "EomMode",
    "IntegratorStats",
    "ChartFlip",
    "Trajectory",
    "kinetic_term",
    "lagrangian",
    "grad_expectation",
    "eom_rhs",
    "integrate",
    "integrate_batch",
    "evolution_operator",
    "quantum_oracle_evolve",
    "classical_vs_quantum",
]

CHART_LIMIT = 1e6
MIN_TOLERANCE = 1e-12
MAX_TOLERANCE = 1e-4
ORACLE_MAX_DIM = 64
CLASSICAL_LIMIT_POINTS = 101
CLASSICAL_LIMIT_TOLERANCE = 1e-12
# The step controller targets a fraction of the requested tolerance so that
# invariant drift over long spans stays below 100x tolerance.
RTOL_SHARE = 1e-1
ATOL_SHARE = 1e-2

# RK45 spends one evaluation on f(t0) and one on the initial step guess,
# then six per attempted step
_SETUP_EVALUATIONS = 2
_STAGES_PER_ATTEMPT = 6


class EomMode(str, Enum):
    """Inverse-metric factor of the equations of motion."""

    METRIC_CONSISTENT = "metric"
    PAPER_LITERAL = "paper"


@dataclass(frozen=True)
class IntegratorStats:
    tolerance: float
    accepted_steps: int
    rejected_steps: int
    evaluations: int
    restarts: int = 0
    method: str = "RK45"


@dataclass(frozen=True)
class ChartFlip:
    time: float
    site: int
    from_chart: int
    to_chart: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Classical solution curve with its monitored invariants.

    ``psi_series[k]`` holds the coordinates in chart ``charts[k]``;
    ``vectors[k]`` is the chart-independent normalized state.
    """

    times: np.ndarray
    psi_series: np.ndarray
    charts: np.ndarray
    vectors: np.ndarray
    energy_series: np.ndarray
    casimir_series: np.ndarray
    observables: Dict[str, np.ndarray]
    integrator_stats: IntegratorStats
    chart_flips: Tuple[ChartFlip, ...]
    mode: EomMode
    rep: RepresentationSpec
    spin_J: Optional[Fraction] = None

    def __len__(self) -> int:
        return len(self.times)

    def state_at(self, k: int) -> CoherentState:
        return state_in_chart(self.psi_series[k], self.rep, int(self.charts[k]), self.spin_J)

    @property
    def final_state(self) -> CoherentState:
        return self.state_at(len(self.times) - 1)

    @property
    def energy_drift(self) -> float:
        """max |E(t) - E(0)| / max(|E(0)|, 1)."""
        e0 = self.energy_series[0]
        return float(np.max(np.abs(self.energy_series - e0)) / max(abs(e0), 1.0))

    @property
    def casimir_drift(self) -> float:
        return float(np.max(np.abs(self.casimir_series - self.casimir_series[0])))

    @property
    def norm_error(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.vectors, axis=1) - 1.0)))


def _frame_matrix(state: CoherentState, h) -> np.ndarray:
    return state.frame.to_frame(as_operator(h, state.dim))


def _check_velocity(state: CoherentState, psi_dot) -> np.ndarray:
    psi_dot = np.atleast_1d(np.asarray(psi_dot, dtype=np.complex128))
    if psi_dot.shape != state.psi.shape:
        raise DimensionMismatchError(f"psi_dot has shape {psi_dot.shape}, state has {state.psi.shape}")
    return psi_dot


def kinetic_term(state: CoherentState, psi_dot) -> float:
    """i hbar k/(2(1+|psi|^2)) sum(conj(psi) psi_dot - psi conj(psi_dot)), k = 2J or 1."""
    psi_dot = _check_velocity(state, psi_dot)
    form = np.vdot(state.psi, psi_dot) - np.vdot(psi_dot, state.psi)
    value = 1j * state.hbar * state.kinetic_weight / (2.0 * state.chart_norm) * form
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise HermiticityError(f"Kinetic term has imaginary residue {value.imag:.3e}")
    return float(value.real)


def lagrangian(state: CoherentState, psi_dot, h) -> float:
    matrix = as_operator(h, state.dim)
    energy = float(np.real(np.vdot(state.vector, matrix @ state.vector)))
    return kinetic_term(state, psi_dot) - energy


def grad_expectation(state: CoherentState, h) -> np.ndarray:
    """Wirtinger derivative d<H>/d conj(psi) in the state's own chart."""
    matrix = _frame_matrix(state, h)
    v, norm2 = frame_vector(state.psi, state.spin_J)
    hv = matrix @ v
    energy = float(np.real(np.vdot(v, hv))) / norm2
    if not state.spin_mode:
        return hv[1:] / norm2 - energy * state.psi / norm2
    two_j = len(v) - 1
    xi = state.psi[0]
    k = np.arange(1, two_j + 1)
    # d v_k / d xi = k sqrt(C(2J, k)) xi^(k-1)
    w = np.zeros_like(v)
    w[1:] = k * np.sqrt(comb(two_j, k)) * xi ** (k - 1)
    grad = np.vdot(w, hv) / norm2 - two_j * energy * xi / (1.0 + abs(xi) ** 2)
    return np.array([grad])


def eom_rhs(state: CoherentState, h, mode: EomMode = EomMode.METRIC_CONSISTENT) -> np.ndarray:
    """psi_dot from the gradient: -i/hbar times the inverse kinetic form applied to it."""
    mode = EomMode(mode)
    g = grad_expectation(state, h)
    norm = state.chart_norm
    if state.spin_mode:
        return -1j * norm ** 2 / (state.kinetic_weight * state.hbar) * g
    if mode is EomMode.PAPER_LITERAL:
        return -1j / state.hbar * norm ** 2 * g
    return -1j / state.hbar * norm * (g + state.psi * np.vdot(state.psi, g))


@dataclass
class FlowResult:
    times: np.ndarray
    states: List[List[CoherentState]]
    stats: IntegratorStats
    flips: List[ChartFlip] = field(default_factory=list)


class _SiteLayout:
    """Packs per-site complex coordinates into one real vector."""

    def __init__(self, states: Sequence[CoherentState]):
        self.templates = list(states)
        self.dims = [chart_dim(s.rep, s.spin_J) for s in states]
        self.offsets = np.concatenate(([0], np.cumsum(self.dims)))

    def pack(self, values: Sequence[np.ndarray]) -> np.ndarray:
        flat = np.concatenate([np.asarray(v, dtype=np.complex128) for v in values])
        return np.concatenate([flat.real, flat.imag])

    def unpack(self, y: np.ndarray, charts: Sequence[int]) -> List[CoherentState]:
        total = self.offsets[-1]
        flat = y[:total] + 1j * y[total:]
        return [
            state_in_chart(flat[self.offsets[i]:self.offsets[i + 1]], s.rep, charts[i], s.spin_J)
            for i, s in enumerate(self.templates)
        ]


def validate_span(t_span: Sequence[float], tolerance: float) -> Tuple[float, float]:
    if not MIN_TOLERANCE <= tolerance <= MAX_TOLERANCE:
        raise DomainError(f"Tolerance must lie in [{MIN_TOLERANCE:g}, {MAX_TOLERANCE:g}], got {tolerance:g}")
    if len(t_span) != 2:
        raise DomainError(f"t_span must be (t0, t1), got {t_span!r}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise DomainError("t_span must be finite")
    if t1 < t0:
        raise DomainError(f"t_span must be increasing, got ({t0}, {t1})")
    return t0, t1


def _recharted(states: List[CoherentState], t: float, flips: List[ChartFlip]) -> Tuple[List[CoherentState], bool]:
    changed = False
    out = []
    for site, state in enumerate(states):
        if np.max(np.abs(state.psi), initial=0.0) > CHART_LIMIT:
            moved = rechart(state)
            if moved.chart != state.chart:
                flips.append(ChartFlip(time=t, site=site, from_chart=state.chart, to_chart=moved.chart))
                logger.debug(f"Chart flip at t={t:.6g}: site {site} {state.chart} -> {moved.chart}")
                changed = True
            state = moved
        out.append(state)
    return out, changed


def run_flow(
    initial: Sequence[CoherentState],
    velocity: Callable[[List[CoherentState]], List[np.ndarray]],
    t_span: Sequence[float],
    tolerance: float,
    t_eval: Optional[Sequence[float]] = None,
) -> FlowResult:
    """Integrate a product of coherent states under ``velocity``.

    Records at each accepted step, or at ``t_eval`` through the stepper's
    dense output when given.
    """
    t0, t1 = validate_span(t_span, tolerance)
    layout = _SiteLayout(initial)
    flips: List[ChartFlip] = []
    states, _ = _recharted(list(initial), t0, flips)
    charts = [s.chart for s in states]

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.ndim != 1 or np.any(np.diff(t_eval) <= 0) or t_eval[0] < t0 or t_eval[-1] > t1:
            raise DomainError("t_eval must be strictly increasing inside t_span")

    times: List[float] = []
    recorded: List[List[CoherentState]] = []

    def record(t: float, snapshot: List[CoherentState]):
        times.append(t)
        recorded.append(snapshot)

    if t_eval is None or t_eval[0] == t0:
        record(t0, states)
    pending = 0 if t_eval is None else int(t_eval[0] == t0)

    stats = dict(accepted=0, rejected=0, evaluations=0, restarts=0)
    if t1 == t0:
        return FlowResult(np.array(times), recorded, IntegratorStats(tolerance, 0, 0, 0), flips)

    def fun(t, y):
        if not np.all(np.isfinite(y)):
            raise IntegrationError("State became non-finite", t)
        dots = velocity(layout.unpack(y, charts))
        out = layout.pack(dots)
        if not np.all(np.isfinite(out)):
            raise IntegrationError("Velocity became non-finite", t)
        return out

    def make_solver(t, current):
        return RK45(
            fun, t, layout.pack([s.psi for s in current]), t1,
            rtol=tolerance * RTOL_SHARE, atol=tolerance * ATOL_SHARE,
        )

    def close(solver, accepted_here):
        attempts = max(0, (solver.nfev - _SETUP_EVALUATIONS) // _STAGES_PER_ATTEMPT)
        stats["rejected"] += max(0, attempts - accepted_here)
        stats["evaluations"] += solver.nfev

    solver = make_solver(t0, states)
    accepted_here = 0
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            close(solver, accepted_here)
            raise IntegrationError(f"Step size underflow: {message}", solver.t)
        accepted_here += 1
        stats["accepted"] += 1

        if t_eval is not None and pending < len(t_eval) and t_eval[pending] <= solver.t:
            dense = solver.dense_output()
            while pending < len(t_eval) and t_eval[pending] <= solver.t:
                t_k = float(t_eval[pending])
                y_k = dense(t_k) if t_k != solver.t else solver.y
                record(t_k, layout.unpack(y_k, charts))
                pending += 1

        states = layout.unpack(solver.y, charts)
        states, changed = _recharted(states, solver.t, flips)
        if t_eval is None:
            record(float(solver.t), states)
        if changed and solver.status == "running":
            close(solver, accepted_here)
            charts = [s.chart for s in states]
            solver = make_solver(solver.t, states)
            accepted_here = 0
            stats["restarts"] += 1
    close(solver, accepted_here)

    result_stats = IntegratorStats(
        tolerance=tolerance,
        accepted_steps=stats["accepted"],
        rejected_steps=stats["rejected"],
        evaluations=stats["evaluations"],
        restarts=stats["restarts"],
    )
    logger.debug(
        f"Flow finished: {result_stats.accepted_steps} steps, {result_stats.rejected_steps} rejected, "
        f"{len(flips)} chart flips"
    )
    return FlowResult(np.array(times), recorded, result_stats, flips)


def integrate(
    initial: CoherentState,
    h,
    t_span: Sequence[float],
    tolerance: float = 1e-8,
    mode: EomMode = EomMode.METRIC_CONSISTENT,
    observables: Sequence[str] = (),
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    mode = EomMode(mode)
    matrix = as_operator(h, initial.dim)
    gen = build_generators(initial.rep)
    c2 = casimir(gen).matrix
    observable_ops = {label: observable_operator(gen, label) for label in observables}

    flow = run_flow([initial], lambda states: [eom_rhs(states[0], matrix, mode)], t_span, tolerance, t_eval)

    sites = [snapshot[0] for snapshot in flow.states]
    vectors = np.array([s.vector for s in sites])

    def series(op: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("ti,ij,tj->t", vectors.conj(), op, vectors))

    trajectory = Trajectory(
        times=flow.times,
        psi_series=np.array([s.psi for s in sites]),
        charts=np.array([s.chart for s in sites], dtype=int),
        vectors=vectors,
        energy_series=series(matrix),
        casimir_series=series(c2),
        observables={label: series(op) for label, op in observable_ops.items()},
        integrator_stats=flow.stats,
        chart_flips=tuple(flow.flips),
        mode=mode,
        rep=initial.rep,
        spin_J=initial.spin_J,
    )
    logger.info(
        f"Integrated n={initial.dim} mode={mode.value} over {tuple(t_span)}: "
        f"{len(trajectory)} points, energy drift {trajectory.energy_drift:.3e}"
    )
    return trajectory


def integrate_batch(
    initials: Sequence[CoherentState],
    h,
    t_span: Sequence[float],
    tolerance: float = 1e-8,
    mode: EomMode = EomMode.METRIC_CONSISTENT,
    workers: Optional[int] = None,
) -> List[Trajectory]:
    """One trajectory per initial state; output order follows input order."""
    workers = max(1, min(workers or 1, len(initials) or 1))

    def run(state: CoherentState) -> Trajectory:
        return integrate(state, h, t_span, tolerance, mode)

    if workers == 1:
        return [run(state) for state in initials]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, initials))


def evolution_operator(h, t: float, hbar: float = 1.0, n: Optional[int] = None) -> np.ndarray:
    """exp(-i H t / hbar) by dense matrix exponential."""
    matrix = as_operator(h, n)
    if matrix.shape[0] > ORACLE_MAX_DIM:
        raise OracleCapacityError(f"Dense oracle is capped at dimension {ORACLE_MAX_DIM}, got {matrix.shape[0]}")
    return expm(-1j * float(t) / hbar * matrix)


def quantum_oracle_evolve(initial: CoherentState, h, t: float) -> np.ndarray:
    return evolution_operator(h, t, initial.hbar, initial.dim) @ initial.vector


def classical_vs_quantum(
    initial: CoherentState,
    h_linear: HamiltonianSpec,
    t_span: Sequence[float],
    mode: EomMode = EomMode.METRIC_CONSISTENT,
    points: int = CLASSICAL_LIMIT_POINTS,
) -> float:
    """max over sampled times of 1 - |<classical(t)|quantum(t)>|^2."""
    mode = EomMode(mode)
    if not isinstance(h_linear, HamiltonianSpec):
        h_linear = HamiltonianSpec.from_matrix(initial.rep, h_linear)
    if not h_linear.is_linear(initial.spin_mode):
        raise DomainError("Classical-limit exactness only holds for Hamiltonians linear in the generators")
    t0, t1 = validate_span(t_span, CLASSICAL_LIMIT_TOLERANCE)
    t_eval = np.linspace(t0, t1, points) if t1 > t0 else None
    trajectory = integrate(initial, h_linear, (t0, t1), CLASSICAL_LIMIT_TOLERANCE, mode, t_eval=t_eval)

    worst = 0.0
    for t, classical in zip(trajectory.times, trajectory.vectors):
        exact = quantum_oracle_evolve(initial, h_linear, t - t0)
        worst = max(worst, 1.0 - abs(np.vdot(classical, exact)) ** 2)
    worst = max(0.0, worst)
    if mode is EomMode.PAPER_LITERAL:
        logger.warning(f"Classical vs quantum in paper-literal mode: max fidelity error {worst:.3e}")
    else:
        logger.info(f"Classical vs quantum: max fidelity error {worst:.3e}")
    return worst


def symplectic_pairing(state: CoherentState, d1, d2) -> float:
    """k hbar Im(conj(d1) d2) / (1+|psi|^2)^2 for tangent vectors at an SU(2) state."""
    if chart_dim(state.rep, state.spin_J) != 1:
        raise DimensionMismatchError("Symplectic pairing is defined here for single-coordinate states")
    d1 = complex(np.atleast_1d(d1)[0])
    d2 = complex(np.atleast_1d(d2)[0])
    return state.kinetic_weight * state.hbar * (np.conj(d1) * d2).imag / state.chart_norm ** 2
