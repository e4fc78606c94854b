"""Mean-field product coherent-state dynamics on spin chains.

Each site carries an SU(2S+1) coherent state; the chain state is their
tensor product. A bond contributes J <S_a>.<S_b> (bilinear) or
J sum_{mu,nu} <S_mu S_nu>_a <S_mu S_nu>_b (biquadratic, the product-state value
of (S_a.S_b)^2). Each site follows the single-site flow of its effective
operator, with the other sites held at their current expectations.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from sucs.core.errors import DimensionMismatchError, DomainError, HermiticityError, OracleCapacityError
from sucs.services.algebra import (
    GeneratorSet,
    RepresentationSpec,
    build_generators,
    hermiticity_residue,
    multipole_basis,
    quadrupole_operators,
)
from sucs.services.coherent import CoherentState, state_from_psi
from sucs.services.dynamics import ChartFlip, EomMode, IntegratorStats, eom_rhs, run_flow
from sucs.services.hamiltonian import HERMITICITY_TOLERANCE, as_operator

logger = logging.getLogger(__name__)

EXACT_CHAIN_MAX_DIM = 4096


class CouplingType(str, Enum):
    BILINEAR = "bilinear"
    BIQUADRATIC = "biquadratic"


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    kind: CouplingType
    strength: float

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingType(self.kind))
        if not np.isfinite(self.strength):
            raise DomainError(f"Bond ({self.i}, {self.j}) has a non-finite strength")
        object.__setattr__(self, "strength", float(self.strength))
        if self.i == self.j:
            raise DimensionMismatchError(f"Bond joins site {self.i} to itself")


@dataclass(frozen=True, eq=False)
class ChainModel:
    sites: int
    rep: RepresentationSpec
    bonds: Tuple[Bond, ...] = ()
    field: Tuple[Optional[np.ndarray], ...] = ()
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if isinstance(self.sites, bool) or int(self.sites) != self.sites or self.sites < 1:
            raise DimensionMismatchError(f"A chain needs at least one site, got {self.sites!r}")
        object.__setattr__(self, "sites", int(self.sites))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        for bond in self.bonds:
            if not (0 <= bond.i < self.sites and 0 <= bond.j < self.sites):
                raise DimensionMismatchError(f"Bond ({bond.i}, {bond.j}) out of range for {self.sites} sites")
        field = tuple(self.field)
        if len(field) == 1 and self.sites > 1:
            field = field * self.sites
        if field and len(field) != self.sites:
            raise DimensionMismatchError(f"Field has {len(field)} site terms for {self.sites} sites")
        checked = []
        for term in field or (None,) * self.sites:
            if term is None:
                checked.append(None)
                continue
            matrix = np.array(as_operator(term, self.rep.n))
            residue = hermiticity_residue(matrix)
            if residue > HERMITICITY_TOLERANCE:
                raise HermiticityError(f"Local field is not hermitian (residue {residue:.3e})")
            matrix.setflags(write=False)
            checked.append(matrix)
        object.__setattr__(self, "field", tuple(checked))

    @classmethod
    def uniform(
        cls,
        sites: int,
        rep: RepresentationSpec,
        bilinear: float = 0.0,
        biquadratic: float = 0.0,
        field=None,
        boundary: Boundary = Boundary.OPEN,
    ) -> "ChainModel":
        """Nearest-neighbour chain; periodic chains close with (N-1, 0) from N = 3 on."""
        boundary = Boundary(boundary)
        pairs = [(a, a + 1) for a in range(sites - 1)]
        if boundary is Boundary.PERIODIC and sites >= 3:
            pairs.append((sites - 1, 0))
        bonds = []
        for i, j in pairs:
            if bilinear:
                bonds.append(Bond(i, j, CouplingType.BILINEAR, bilinear))
            if biquadratic:
                bonds.append(Bond(i, j, CouplingType.BIQUADRATIC, biquadratic))
        return cls(
            sites=sites,
            rep=rep,
            bonds=tuple(bonds),
            field=() if field is None else (field,),
            boundary=boundary,
        )

    @property
    def variables_per_site(self) -> int:
        """Real dynamical variables per site, 2(n-1) = 4S."""
        return 2 * (self.rep.n - 1)


@dataclass(frozen=True, eq=False)
class ChainState:
    psis: Tuple[np.ndarray, ...]
    rep: RepresentationSpec

    def __post_init__(self):
        psis = tuple(np.atleast_1d(np.asarray(p, dtype=np.complex128)) for p in self.psis)
        for p in psis:
            if p.shape != (self.rep.n - 1,):
                raise DimensionMismatchError(f"Site coordinates must have length {self.rep.n - 1}, got {p.shape}")
        object.__setattr__(self, "psis", psis)

    @property
    def sites(self) -> int:
        return len(self.psis)

    def states(self) -> List[CoherentState]:
        return [state_from_psi(p, self.rep) for p in self.psis]

    @classmethod
    def uniform(cls, sites: int, psi, rep: RepresentationSpec) -> "ChainState":
        return cls(psis=tuple(np.array(psi, dtype=np.complex128) for _ in range(sites)), rep=rep)


class _SiteMoments:
    """<S_mu> and <S_mu S_nu> for every site of a product state."""

    def __init__(self, gen: GeneratorSet, states: Sequence[CoherentState]):
        vectors = np.array([s.vector for s in states])
        triple = np.array(gen.spin_triple)
        self.dipoles = np.real(np.einsum("ai,mij,aj->am", vectors.conj(), triple, vectors))
        products = np.einsum("mij,njk->mnik", triple, triple)
        self.products = products
        self.quadratic = np.einsum("ai,mnij,aj->amn", vectors.conj(), products, vectors)
        self.triple = triple
        self.vectors = vectors


def _check_chain(states: Sequence[CoherentState], model: ChainModel) -> None:
    if len(states) != model.sites:
        raise DimensionMismatchError(f"State has {len(states)} sites, model has {model.sites}")
    for s in states:
        if s.rep != model.rep:
            raise DimensionMismatchError(f"Site representation {s.rep} does not match model {model.rep}")


def _energy(moments: _SiteMoments, model: ChainModel) -> float:
    energy = 0.0
    for bond in model.bonds:
        if bond.kind is CouplingType.BILINEAR:
            energy += bond.strength * float(moments.dipoles[bond.i] @ moments.dipoles[bond.j])
        else:
            energy += bond.strength * float(np.real(np.sum(moments.quadratic[bond.i] * moments.quadratic[bond.j])))
    for a, term in enumerate(model.field):
        if term is not None:
            energy += float(np.real(np.vdot(moments.vectors[a], term @ moments.vectors[a])))
    return energy


def chain_energy(state: ChainState, model: ChainModel) -> float:
    """Product-state expectation of the chain Hamiltonian."""
    if state.rep != model.rep:
        raise DimensionMismatchError(f"State representation {state.rep} does not match model {model.rep}")
    states = state.states()
    _check_chain(states, model)
    return _energy(_SiteMoments(build_generators(model.rep), states), model)


def effective_operators(states: Sequence[CoherentState], model: ChainModel) -> List[np.ndarray]:
    """Per-site hermitian operators whose gradients drive the mean-field flow."""
    moments = _SiteMoments(build_generators(model.rep), states)
    n = model.rep.n
    ops = [np.zeros((n, n), dtype=np.complex128) if term is None else term.astype(np.complex128)
           for term in model.field]
    for bond in model.bonds:
        for here, there in ((bond.i, bond.j), (bond.j, bond.i)):
            if bond.kind is CouplingType.BILINEAR:
                ops[here] = ops[here] + bond.strength * np.einsum("m,mij->ij", moments.dipoles[there], moments.triple)
            else:
                ops[here] = ops[here] + bond.strength * np.einsum(
                    "mn,mnij->ij", moments.quadratic[there], moments.products
                )
    return ops


@dataclass(frozen=True, eq=False)
class ChainTrajectory:
    times: np.ndarray
    psi_series: np.ndarray
    charts: np.ndarray
    vectors: np.ndarray
    energy_series: np.ndarray
    total_sz_series: np.ndarray
    dipole_series: np.ndarray
    quadrupole_series: np.ndarray
    integrator_stats: IntegratorStats
    chart_flips: Tuple[ChartFlip, ...]
    model: ChainModel

    def __len__(self) -> int:
        return len(self.times)

    @property
    def sites(self) -> int:
        return self.model.sites

    @property
    def energy_drift(self) -> float:
        e0 = self.energy_series[0]
        return float(np.max(np.abs(self.energy_series - e0)) / max(abs(e0), 1.0))

    @property
    def sz_drift(self) -> float:
        return float(np.max(np.abs(self.total_sz_series - self.total_sz_series[0])))

    @property
    def variables_per_site(self) -> int:
        return 2 * self.psi_series.shape[2]

    @property
    def quadrupole_labels(self) -> Tuple[str, ...]:
        return tuple(quadrupole_operators(build_generators(self.model.rep))) if self.model.rep.n >= 3 else ()


def chain_evolve(
    initial: ChainState,
    model: ChainModel,
    t_span: Sequence[float],
    tolerance: float = 1e-8,
    t_eval: Optional[Sequence[float]] = None,
) -> ChainTrajectory:
    if initial.rep != model.rep:
        raise DimensionMismatchError(f"State representation {initial.rep} does not match model {model.rep}")
    states = initial.states()
    _check_chain(states, model)
    gen = build_generators(model.rep)

    def velocity(current: List[CoherentState]) -> List[np.ndarray]:
        ops = effective_operators(current, model)
        return [eom_rhs(s, op, EomMode.METRIC_CONSISTENT) for s, op in zip(current, ops)]

    flow = run_flow(states, velocity, t_span, tolerance, t_eval)

    quads = list(quadrupole_operators(gen).values()) if model.rep.n >= 3 else []
    energies, total_sz, dipoles, quadrupoles = [], [], [], []
    for snapshot in flow.states:
        moments = _SiteMoments(gen, snapshot)
        energies.append(_energy(moments, model))
        total_sz.append(float(np.sum(moments.dipoles[:, 2])))
        dipoles.append(moments.dipoles)
        quadrupoles.append(np.array([
            [np.real(np.vdot(v, q @ v)) for q in quads] for v in moments.vectors
        ]).reshape(model.sites, len(quads)))

    trajectory = ChainTrajectory(
        times=flow.times,
        psi_series=np.array([[s.psi for s in snapshot] for snapshot in flow.states]),
        charts=np.array([[s.chart for s in snapshot] for snapshot in flow.states], dtype=int),
        vectors=np.array([[s.vector for s in snapshot] for snapshot in flow.states]),
        energy_series=np.array(energies),
        total_sz_series=np.array(total_sz),
        dipole_series=np.array(dipoles),
        quadrupole_series=np.array(quadrupoles),
        integrator_stats=flow.stats,
        chart_flips=tuple(flow.flips),
        model=model,
    )
    logger.info(
        f"Chain of {model.sites} sites (n={model.rep.n}): {len(trajectory)} points, "
        f"energy drift {trajectory.energy_drift:.3e}, Sz drift {trajectory.sz_drift:.3e}"
    )
    return trajectory


@dataclass(frozen=True, eq=False)
class MultipoleSeries:
    """<T_mu> per time and site in the orthonormal multipole basis."""

    labels: Tuple[str, ...]
    dipole: np.ndarray
    higher: np.ndarray
    purity_target: float

    @property
    def components_per_site(self) -> int:
        return self.dipole.shape[2] + self.higher.shape[2]

    @property
    def purity_residual(self) -> float:
        """max |sum_mu <T_mu>^2 - 2(n-1)/n| over times and sites."""
        total = np.sum(self.dipole ** 2, axis=2) + np.sum(self.higher ** 2, axis=2)
        return float(np.max(np.abs(total - self.purity_target)))


def multipole_series(trajectory: ChainTrajectory) -> MultipoleSeries:
    basis = multipole_basis(build_generators(trajectory.model.rep))
    v = trajectory.vectors
    values = np.real(np.einsum("tai,mij,taj->tam", v.conj(), basis.operators, v))
    return MultipoleSeries(
        labels=basis.labels,
        dipole=values[:, :, : basis.dipole_count],
        higher=values[:, :, basis.dipole_count:],
        purity_target=basis.purity_target(),
    )


def _site_operator(op: np.ndarray, site: int, sites: int, n: int) -> sparse.csr_matrix:
    left = sparse.identity(n ** site, format="csr")
    right = sparse.identity(n ** (sites - site - 1), format="csr")
    return sparse.kron(sparse.kron(left, sparse.csr_matrix(op)), right, format="csr")


def chain_hamiltonian(model: ChainModel) -> sparse.csr_matrix:
    """Full many-body Hamiltonian on the n^N product space."""
    n = model.rep.n
    dim = n ** model.sites
    if dim > EXACT_CHAIN_MAX_DIM:
        raise OracleCapacityError(f"Exact chain oracle is capped at dimension {EXACT_CHAIN_MAX_DIM}, got {dim}")
    gen = build_generators(model.rep)
    spins = [[_site_operator(s, a, model.sites, n) for s in gen.spin_triple] for a in range(model.sites)]
    total = sparse.csr_matrix((dim, dim), dtype=np.complex128)
    for bond in model.bonds:
        exchange = sum(si @ sj for si, sj in zip(spins[bond.i], spins[bond.j]))
        if bond.kind is CouplingType.BIQUADRATIC:
            exchange = exchange @ exchange
        total = total + bond.strength * exchange
    for a, term in enumerate(model.field):
        if term is not None:
            total = total + _site_operator(term, a, model.sites, n)
    return total.tocsr()


def chain_quantum_deviation(initial: ChainState, model: ChainModel, times: Sequence[float]) -> float:
    """max over times and sites of |<S>_mean-field - <S>_exact|; reported, never asserted."""
    times = np.asarray(times, dtype=float)
    hamiltonian = chain_hamiltonian(model)
    n = model.rep.n
    vector = np.array([1.0 + 0j])
    for s in initial.states():
        vector = np.kron(vector, s.vector)

    t0 = float(times[0])
    mean_field = chain_evolve(initial, model, (t0, float(times[-1])), tolerance=1e-10, t_eval=times)
    gen = build_generators(model.rep)
    spins = [[_site_operator(s, a, model.sites, n) for s in gen.spin_triple] for a in range(model.sites)]
    generator = -1j / model.rep.hbar * hamiltonian

    worst = 0.0
    for k, t in enumerate(times):
        exact = expm_multiply(generator * (t - t0), vector) if t > t0 else vector
        for a in range(model.sites):
            exact_dipole = np.array([np.real(np.vdot(exact, op @ exact)) for op in spins[a]])
            worst = max(worst, float(np.max(np.abs(exact_dipole - mean_field.dipole_series[k, a]))))
    logger.warning(f"Mean-field vs exact chain: max dipole deviation {worst:.3e}")
    return worst


def site_observables(trajectory: ChainTrajectory) -> Dict[str, np.ndarray]:
    """Wide per-site columns keyed "<label>_<site>"."""
    columns: Dict[str, np.ndarray] = {}
    for a in range(trajectory.sites):
        for m, label in enumerate(("Sx", "Sy", "Sz")):
            columns[f"{label}_{a}"] = trajectory.dipole_series[:, a, m]
        for m, label in enumerate(trajectory.quadrupole_labels):
            columns[f"{label}_{a}"] = trajectory.quadrupole_series[:, a, m]
    return columns
