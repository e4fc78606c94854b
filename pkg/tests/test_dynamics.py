"""Unit tests for the classical equations of motion, the integrator and the quantum oracle."""

import logging
from fractions import Fraction

import numpy as np
import pytest

from sucs.core.errors import DimensionMismatchError, DomainError, IntegrationError, OracleCapacityError
from sucs.services.algebra import RepresentationSpec, build_generators
from sucs.services.coherent import expectation, spin_j_rep, state_from_psi, state_from_spin_j, state_in_chart
from sucs.services.dynamics import (
    EomMode,
    HamiltonianSpec,
    classical_vs_quantum,
    eom_rhs,
    evolution_operator,
    grad_expectation,
    integrate,
    integrate_batch,
    kinetic_term,
    lagrangian,
    quantum_oracle_evolve,
    run_flow,
    symplectic_pairing,
)
from tests.helpers import random_hermitian, random_psi

FD_STEP = 1e-6


def wirtinger_fd(energy, psi):
    """d energy / d conj(psi) by central differences in Re and Im."""
    grad = np.zeros(len(psi), dtype=complex)
    for i in range(len(psi)):
        e = np.zeros(len(psi), dtype=complex)
        e[i] = FD_STEP
        d_re = (energy(psi + e) - energy(psi - e)) / (2 * FD_STEP)
        d_im = (energy(psi + 1j * e) - energy(psi - 1j * e)) / (2 * FD_STEP)
        grad[i] = 0.5 * (d_re + 1j * d_im)
    return grad


class TestKineticTerm:
    """Tests for the Berry-phase part of the Lagrangian."""

    def test_static_path(self, su3):
        """Test a motionless path has no kinetic term."""
        state = state_from_psi([0.3, -0.2j], su3)
        assert kinetic_term(state, [0, 0]) == 0.0

    def test_equator_counterclockwise(self, su2):
        """Test the sign of the kinetic term on the su(2) equator."""
        assert kinetic_term(state_from_psi([1.0], su2), [1j]) == pytest.approx(-0.5)

    def test_antisymmetric_in_velocity(self, rng, su3):
        """Test reversing the velocity flips the kinetic term."""
        state = state_from_psi(random_psi(rng, 3), su3)
        v = random_psi(rng, 3)
        assert kinetic_term(state, -v) == pytest.approx(-kinetic_term(state, v))

    def test_spin_j_weight(self):
        """Test spin-J states carry the 2J weight."""
        state = state_from_spin_j(1.0, 1)
        assert kinetic_term(state, [1j]) == pytest.approx(-1.0)

    def test_scales_with_hbar(self):
        """Test the kinetic term scales with hbar."""
        state = state_from_psi([1.0], RepresentationSpec(n=2, hbar=2.0))
        assert kinetic_term(state, [1j]) == pytest.approx(-1.0)

    def test_velocity_shape(self, su3):
        """Test a velocity of the wrong length is rejected."""
        with pytest.raises(DimensionMismatchError):
            kinetic_term(state_from_psi([0, 0], su3), [1.0])

    def test_lagrangian_subtracts_energy(self, gen2, su2):
        """Test the Lagrangian is kinetic term minus energy."""
        state = state_from_psi([0.0], su2)
        assert lagrangian(state, [0.0], gen2.s_z) == pytest.approx(0.5)


class TestGradient:
    """Analytic Wirtinger gradients against finite differences."""

    def test_constant_operator(self, rng, su3):
        """Test a multiple of the identity has zero gradient."""
        state = state_from_psi(random_psi(rng, 3), su3)
        np.testing.assert_allclose(grad_expectation(state, 2.5 * np.eye(3)), 0.0, atol=1e-14)

    def test_su2_sz_closed_form(self, gen2, su2):
        """Test the su(2) Sz gradient against its closed form."""
        psi = 0.4 + 0.2j
        omega = 1.3
        grad = grad_expectation(state_from_psi([psi], su2), omega * gen2.s_z)
        expected = omega * psi / (1 + abs(psi) ** 2) ** 2
        assert grad[0] == pytest.approx(expected, abs=1e-14)

    def test_random_hamiltonians(self, rng):
        """Test Wirtinger gradients against central differences on random cases."""
        for case in range(100):
            n = 2 + case % 4
            rep = RepresentationSpec(n=n)
            h = random_hermitian(rng, n)
            psi = random_psi(rng, n)
            analytic = grad_expectation(state_from_psi(psi, rep), h)
            numeric = wirtinger_fd(lambda p: expectation(state_from_psi(p, rep), h), psi)
            scale = max(np.linalg.norm(analytic), 1e-2)
            assert np.linalg.norm(analytic - numeric) / scale < 1e-6

    def test_shifted_chart(self, rng, su3):
        """Test the gradient in a non-reference chart."""
        h = random_hermitian(rng, 3)
        psi = random_psi(rng, 3)
        analytic = grad_expectation(state_in_chart(psi, su3, 2), h)
        numeric = wirtinger_fd(lambda p: expectation(state_in_chart(p, su3, 2), h), psi)
        assert np.linalg.norm(analytic - numeric) < 1e-7

    @pytest.mark.parametrize("spin", [Fraction(1, 2), 1, Fraction(3, 2)])
    def test_spin_j(self, spin, rng):
        """Test the spin-J gradient against central differences."""
        rep = spin_j_rep(spin)
        h = random_hermitian(rng, rep.n)
        xi = np.array([0.3 - 0.4j])
        analytic = grad_expectation(state_from_spin_j(xi[0], spin), h)
        numeric = wirtinger_fd(lambda p: expectation(state_from_spin_j(p[0], spin), h), xi)
        assert np.linalg.norm(analytic - numeric) < 1e-7


class TestEquationsOfMotion:
    """Right-hand sides in both metric modes."""

    def test_constant_hamiltonian_is_stationary(self, rng, su3):
        """Test a multiple of the identity generates no motion."""
        state = state_from_psi(random_psi(rng, 3), su3)
        np.testing.assert_allclose(eom_rhs(state, 3.0 * np.eye(3)), 0.0, atol=1e-14)

    @pytest.mark.parametrize("mode", list(EomMode))
    def test_su2_precession(self, mode, gen2, su2):
        """Test precession under Sz in both modes."""
        psi = 0.7 - 0.1j
        rhs = eom_rhs(state_from_psi([psi], su2), 1.0 * gen2.s_z, mode)
        assert rhs[0] == pytest.approx(-1j * psi, abs=1e-14)

    def test_modes_agree_for_su2(self, rng, su2):
        """Test metric and paper modes coincide for n = 2."""
        h = random_hermitian(rng, 2)
        state = state_from_psi(random_psi(rng, 2), su2)
        np.testing.assert_allclose(
            eom_rhs(state, h, EomMode.METRIC_CONSISTENT), eom_rhs(state, h, EomMode.PAPER_LITERAL), atol=1e-14
        )

    def test_modes_agree_at_origin(self, rng, su3):
        """Test metric and paper modes coincide at psi = 0."""
        h = random_hermitian(rng, 3)
        state = state_from_psi([0, 0], su3)
        np.testing.assert_allclose(eom_rhs(state, h, "metric"), eom_rhs(state, h, "paper"), atol=1e-14)

    def test_modes_differ_for_generic_su3(self, rng, su3):
        """Test metric and paper modes differ away from the origin for n = 3."""
        h = random_hermitian(rng, 3)
        state = state_from_psi([0.5, 0.5], su3)
        assert np.linalg.norm(eom_rhs(state, h, "metric") - eom_rhs(state, h, "paper")) > 1e-6

    def test_single_component_agrees_in_that_component(self, rng, su3):
        """Test the modes agree in the only nonzero component."""
        h = random_hermitian(rng, 3)
        state = state_from_psi([0.4 + 0.1j, 0.0], su3)
        metric = eom_rhs(state, h, "metric")
        paper = eom_rhs(state, h, "paper")
        assert metric[0] == pytest.approx(paper[0], abs=1e-14)

    def test_spin_j_precession(self):
        """Test spin-J precession under Sz."""
        spin = 1
        gen = build_generators(spin_j_rep(spin))
        rhs = eom_rhs(state_from_spin_j(0.6 + 0.2j, spin), 2.0 * gen.s_z)
        assert rhs[0] == pytest.approx(-2j * (0.6 + 0.2j), abs=1e-13)

    def test_unknown_mode(self, su2):
        """Test an unknown mode name is rejected."""
        with pytest.raises(ValueError):
            eom_rhs(state_from_psi([0.1], su2), np.eye(2), "exact")


class TestIntegrate:
    """Adaptive integration of single-site trajectories."""

    def test_precession_closed_form(self, gen2, su2):
        """Test precession matches exp(-it) psi0 and returns after one period."""
        times = np.linspace(0.0, 2 * np.pi, 100)
        trajectory = integrate(state_from_psi([1.0], su2), gen2.s_z, (0.0, 2 * np.pi), 1e-10, t_eval=times)
        np.testing.assert_allclose(trajectory.times, times)
        np.testing.assert_allclose(trajectory.psi_series[:, 0], np.exp(-1j * times), atol=1e-8)
        assert abs(trajectory.final_state.psi[0] - 1.0) < 1e-8
        assert trajectory.chart_flips == ()

    def test_constant_hamiltonian(self, su3):
        """Test a constant Hamiltonian leaves psi unchanged."""
        psi = np.array([0.2 + 0.3j, -0.5])
        trajectory = integrate(state_from_psi(psi, su3), 1.7 * np.eye(3), (0.0, 5.0))
        np.testing.assert_allclose(trajectory.psi_series, np.tile(psi, (len(trajectory), 1)), atol=1e-12)

    def test_conserves_energy_and_casimir(self, su3):
        """Test energy, Casimir and norm are conserved over t = 100."""
        h = HamiltonianSpec.from_terms(su3, [(1.0, ("Sz", "Sz"))])
        trajectory = integrate(state_from_psi([0.5 + 0.5j, -0.3], su3), h, (0.0, 100.0), 1e-10)
        assert trajectory.energy_drift < 1e-8
        assert trajectory.casimir_drift < 1e-10
        assert trajectory.norm_error < 1e-12

    def test_energy_drift_scales_with_tolerance(self, su3):
        """Test energy drift stays within 100x tolerance and falls linearly as it tightens."""
        h = HamiltonianSpec.from_terms(su3, [(1.0, ("Sz", "Sz")), (0.4, ("Sx",))])
        initial = state_from_psi([0.5 + 0.5j, -0.3], su3)
        drifts = []
        for tolerance in (1e-6, 1e-8, 1e-10):
            drift = integrate(initial, h, (0.0, 100.0), tolerance).energy_drift
            assert drift <= 100 * tolerance
            drifts.append(drift)
        for coarse, fine in zip(drifts, drifts[1:]):
            assert 10.0 < coarse / fine < 1000.0

    def test_records_observables(self, gen2, su2):
        """Test requested observables are recorded along the trajectory."""
        trajectory = integrate(state_from_psi([1.0], su2), gen2.s_z, (0.0, 1.0), observables=("Sx", "Sz"))
        np.testing.assert_allclose(trajectory.observables["Sz"], 0.0, atol=1e-8)
        assert trajectory.observables["Sx"][0] == pytest.approx(0.5)

    def test_zero_length_span(self, su2):
        """Test an empty span returns the initial state only."""
        trajectory = integrate(state_from_psi([0.3], su2), np.eye(2), (1.0, 1.0))
        assert len(trajectory) == 1
        assert trajectory.psi_series[0, 0] == 0.3
        assert trajectory.integrator_stats.accepted_steps == 0

    @pytest.mark.parametrize("tolerance", [1e-3, 1e-13])
    def test_tolerance_bounds(self, tolerance, su2):
        """Test tolerances outside [1e-12, 1e-4] are rejected."""
        with pytest.raises(DomainError):
            integrate(state_from_psi([0.3], su2), np.eye(2), (0.0, 1.0), tolerance)

    def test_decreasing_span(self, su2):
        """Test a decreasing span is rejected."""
        with pytest.raises(DomainError):
            integrate(state_from_psi([0.3], su2), np.eye(2), (1.0, 0.0))

    def test_t_eval_outside_span(self, su2):
        """Test output times outside the span are rejected."""
        with pytest.raises(DomainError):
            integrate(state_from_psi([0.3], su2), np.eye(2), (0.0, 1.0), t_eval=[0.5, 2.0])

    def test_stats_are_consistent(self, gen2, su2):
        """Test integrator statistics are consistent."""
        stats = integrate(state_from_psi([0.3], su2), gen2.s_x, (0.0, 3.0)).integrator_stats
        assert stats.method == "RK45"
        assert stats.accepted_steps > 0
        assert stats.rejected_steps >= 0
        assert stats.evaluations >= 6 * stats.accepted_steps

    def test_chart_flip_through_pole(self, gen2, su2):
        """Test the integrator changes chart through the pole and stays exact."""
        # psi(t) = -i tan(t/2) diverges at t = pi
        initial = state_from_psi([0.0], su2)
        trajectory = integrate(initial, gen2.s_x, (0.0, 4.0), 1e-10)
        assert len(trajectory.chart_flips) >= 1
        assert trajectory.chart_flips[0].to_chart == 1
        assert trajectory.integrator_stats.restarts >= 1
        for t, v in zip(trajectory.times, trajectory.vectors):
            exact = quantum_oracle_evolve(initial, gen2.s_x, t)
            assert 1 - abs(np.vdot(v, exact)) ** 2 < 1e-8

    def test_spin_j_trajectory(self):
        """Test a spin-3/2 trajectory against its closed form."""
        spin = Fraction(3, 2)
        gen = build_generators(spin_j_rep(spin))
        times = np.linspace(0.0, 3.0, 31)
        trajectory = integrate(state_from_spin_j(0.8, spin), gen.s_z, (0.0, 3.0), 1e-10, t_eval=times)
        np.testing.assert_allclose(trajectory.psi_series[:, 0], 0.8 * np.exp(-1j * times), atol=1e-8)
        assert trajectory.spin_J == spin

    def test_non_finite_velocity(self, su2):
        """Test a non-finite velocity stops the run with its time."""
        with pytest.raises(IntegrationError) as excinfo:
            run_flow([state_from_psi([0.1], su2)], lambda states: [np.array([np.nan])], (0.0, 1.0), 1e-8)
        assert excinfo.value.time == 0.0
        assert excinfo.value.exit_code == 1


class TestIntegrateBatch:
    """Parallel integration keeps input order."""

    def test_matches_serial(self, rng, gen3, su3):
        """Test batch results match serial integration in order."""
        initials = [state_from_psi(random_psi(rng, 3), su3) for _ in range(4)]
        batch = integrate_batch(initials, gen3.s_x, (0.0, 2.0), workers=3)
        for state, trajectory in zip(initials, batch):
            single = integrate(state, gen3.s_x, (0.0, 2.0))
            np.testing.assert_array_equal(trajectory.psi_series, single.psi_series)


class TestQuantumOracle:
    """Dense matrix-exponential evolution."""

    def test_identity_at_zero_time(self, rng, su3):
        """Test zero time leaves the state unchanged."""
        state = state_from_psi(random_psi(rng, 3), su3)
        np.testing.assert_allclose(quantum_oracle_evolve(state, random_hermitian(rng, 3), 0.0), state.vector)

    def test_su2_phases(self, gen2):
        """Test the su(2) Sz phases."""
        u = evolution_operator(gen2.s_z, 0.8)
        np.testing.assert_allclose(np.diag(u), [np.exp(0.4j), np.exp(-0.4j)], atol=1e-15)

    def test_unitary(self, rng):
        """Test the evolution operator is unitary."""
        u = evolution_operator(random_hermitian(rng, 5), 1.3, hbar=0.5)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-12)

    def test_capacity(self):
        """Test the dense oracle refuses large dimensions."""
        with pytest.raises(OracleCapacityError):
            evolution_operator(np.zeros((65, 65)), 1.0)


class TestClassicalLimit:
    """Linear Hamiltonians move coherent states exactly."""

    def test_su2_field(self, su2):
        """Test a su(2) field moves the state exactly."""
        h = HamiltonianSpec.from_terms(su2, [(0.8, ("Sx",)), (0.3, ("Sz",))])
        assert classical_vs_quantum(state_from_psi([0.2 + 0.1j], su2), h, (0.0, 10.0)) < 1e-10

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("seed", range(5))
    def test_random_linear_generators(self, n, seed):
        """Test random degree-1 Hamiltonians against the exact evolution over t in [0, 10]."""
        rng = np.random.default_rng(seed)
        rep = RepresentationSpec(n=n)
        h = HamiltonianSpec.linear(rep, rng.normal(size=n * n - 1))
        assert classical_vs_quantum(state_from_psi(random_psi(rng, n), rep), h, (0.0, 10.0)) < 1e-8

    def test_zero_hamiltonian(self, su3):
        """Test the zero Hamiltonian leaves both evolutions at rest."""
        assert classical_vs_quantum(state_from_psi([0.3, 0.1j], su3), HamiltonianSpec.zero(su3), (0.0, 10.0)) < 1e-14

    def test_spin_j_rotation(self):
        """Test a spin-1 rotation moves the state exactly."""
        rep = spin_j_rep(1)
        h = HamiltonianSpec.from_terms(rep, [(1.0, ("Sx",)), (0.5, ("Sz",))])
        assert classical_vs_quantum(state_from_spin_j(0.3, 1), h, (0.0, 10.0)) < 1e-8

    def test_quadratic_terms_are_linear_in_fundamental_mode(self, su3):
        """Test a squared spin operator in the fundamental representation moves states exactly."""
        h = HamiltonianSpec.from_terms(su3, [(1.0, ("Sz", "Sz")), (0.4, ("Sx",))])
        assert classical_vs_quantum(state_from_psi([0.1, 0.1], su3), h, (0.0, 5.0)) < 1e-8

    def test_rejects_quadratic_in_spin_mode(self):
        """Test spin-J states refuse Hamiltonians quadratic in the spin operators."""
        h = HamiltonianSpec.from_terms(spin_j_rep(1), [(1.0, ("Sz", "Sz"))])
        with pytest.raises(DomainError):
            classical_vs_quantum(state_from_spin_j(0.3, 1), h, (0.0, 1.0))

    def test_paper_mode_logs_warning(self, rng, su3, caplog):
        """Test paper mode reports its deviation with a warning."""
        h = HamiltonianSpec.linear(su3, rng.normal(size=8))
        with caplog.at_level(logging.WARNING, logger="sucs.services.dynamics"):
            error = classical_vs_quantum(state_from_psi([0.5, 0.5], su3), h, (0.0, 2.0), mode=EomMode.PAPER_LITERAL)
        assert error >= 0.0
        assert any("paper-literal" in record.getMessage() for record in caplog.records)


class TestSymplecticPairing:
    """The flow of a spin-1/2 preserves the Kahler two-form."""

    def test_pairing_preserved(self, su2):
        """Test the flow preserves the symplectic pairing of two tangent vectors."""
        h = HamiltonianSpec.from_terms(su2, [(1.0, ("Sx",)), (0.3, ("Sz",))])
        psi0 = 0.3 + 0.1j
        eps = 1e-4
        t_end = 0.5

        def flow(p):
            trajectory = integrate(state_from_psi([p], su2), h, (0.0, t_end), 1e-12)
            assert trajectory.charts[-1] == 0
            return trajectory.psi_series[-1, 0]

        d1 = (flow(psi0 + eps) - flow(psi0 - eps)) / (2 * eps)
        d2 = (flow(psi0 + 1j * eps) - flow(psi0 - 1j * eps)) / (2 * eps)
        before = symplectic_pairing(state_from_psi([psi0], su2), 1.0, 1j)
        after = symplectic_pairing(state_from_psi([flow(psi0)], su2), d1, d2)
        assert after == pytest.approx(before, rel=1e-6)

    def test_requires_single_coordinate(self, su3):
        """Test the pairing needs a single-coordinate state."""
        with pytest.raises(DimensionMismatchError):
            symplectic_pairing(state_from_psi([0, 0], su3), 1.0, 1j)
