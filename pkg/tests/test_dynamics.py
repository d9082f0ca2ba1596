import math

import numpy as np
import pytest

from qestctl import dynamics
from qestctl.qmodel import (
    DOWN, UP, DomainError, ModelParams, PiecewisePulse, PulseSegment, QubitState, bloch_from_state,
)

from conftest import random_density, random_pulse


def z_of(state) -> float:
    return bloch_from_state(state).z


class TestLindbladRhs:
    def test_up_is_steady(self):
        out = dynamics.lindblad_rhs(UP.density(), ModelParams(delta=0.3, gamma=0.05), 0.0, 0.0)
        assert np.allclose(out, 0, atol=1e-15)

    def test_down_pumped_toward_up(self):
        g = 0.05
        out = dynamics.lindblad_rhs(DOWN.density(), ModelParams(delta=0.3, gamma=g), 0.0, 0.0)
        assert np.allclose(out, g * np.diag([1, -1]), atol=1e-15)

    def test_hermitian_traceless(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            rho = QubitState(random_density(rng))
            p = ModelParams(delta=rng.uniform(-1, 1), gamma=rng.uniform(0, 0.2))
            out = dynamics.lindblad_rhs(rho, p, rng.uniform(0, 1), rng.uniform(-3, 3))
            assert abs(np.trace(out)) < 1e-12
            assert np.max(np.abs(out - out.conj().T)) < 1e-12

    def test_unitary_flow_conserves_purity(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            rho = random_density(rng)
            out = dynamics.lindblad_rhs(QubitState(rho), ModelParams(delta=0.4), 0.8, 0.3)
            # d Tr(rho^2)/dt = 2 Tr(rho rhs)
            assert abs(np.trace(rho @ out)) < 1e-12


class TestPropagateSegment:
    def test_relaxation_closed_form(self):
        g = 0.05
        p = ModelParams(delta=0.2, gamma=g)
        for t in (0.5, 3.0, 10.0, 40.0):
            out = dynamics.propagate_segment(DOWN.density(), p, PulseSegment(t, 0.0))
            assert z_of(out) == pytest.approx(1 - 2 * math.exp(-g * t), abs=1e-12)
            assert abs(out.matrix[0, 1]) < 1e-14

    def test_rabi_pi_rotation(self):
        out = dynamics.propagate_segment(UP.density(), ModelParams(delta=0.0), PulseSegment(2 * math.pi, 1.0))
        assert np.allclose(out.matrix, DOWN.density().matrix, atol=1e-10)

    def test_tiny_duration_is_identity(self):
        rho = QubitState(random_density(np.random.default_rng(3)))
        out = dynamics.propagate_segment(rho, ModelParams(gamma=0.1), PulseSegment(1e-300, 1.0, 0.3))
        assert np.allclose(out.matrix, rho.matrix, atol=1e-12)


class TestPropagatePulse:
    def test_single_segment_one_sample(self):
        traj = dynamics.propagate_pulse(UP, ModelParams(), PiecewisePulse.from_lists([1.5], [0.5]), 1)
        assert list(traj.times) == [0.0, 1.5]

    def test_matches_sequential_segments(self):
        rng = np.random.default_rng(4)
        p = ModelParams(delta=0.3, gamma=0.04)
        pulse = random_pulse(rng)
        state = UP.density()
        for seg in pulse.segments:
            state = dynamics.propagate_segment(state, p, seg)
        traj = dynamics.propagate_pulse(UP, p, pulse, 7)
        assert np.max(np.abs(traj.final.matrix - state.matrix)) < 1e-12

    def test_semigroup_split(self):
        p = ModelParams(delta=0.3, gamma=0.04)
        whole = dynamics.propagate_pulse(UP, p, PiecewisePulse.from_lists([2.0], [0.7], [0.4]), 1).final
        halves = dynamics.propagate_pulse(UP, p, PiecewisePulse.from_lists([1.0, 1.0], [0.7, 0.7], [0.4, 0.4]), 1).final
        assert np.max(np.abs(whole.matrix - halves.matrix)) < 1e-12

    def test_selective_pulse_stays_pure(self, selective_pulse, params0):
        traj = dynamics.propagate_pulse(UP, params0, selective_pulse)
        assert all(abs(s.purity() - 1) < 1e-10 for s in traj.states)

    def test_sampling_density_does_not_change_samples(self):
        rng = np.random.default_rng(5)
        p = ModelParams(delta=-0.1, gamma=0.03)
        pulse = random_pulse(rng, 3)
        coarse = dynamics.propagate_pulse(UP, p, pulse, 8)
        fine = dynamics.propagate_pulse(UP, p, pulse, 16)
        for i, t in enumerate(coarse.times):
            j = int(np.argmin(np.abs(fine.times - t)))
            assert fine.times[j] == pytest.approx(t, abs=1e-13)
            assert np.max(np.abs(fine.states[j].matrix - coarse.states[i].matrix)) < 1e-12

    def test_trace_and_positivity_random(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            p = ModelParams(delta=rng.uniform(-1, 1), alpha=rng.uniform(0, 2), gamma=rng.uniform(0, 0.3))
            traj = dynamics.propagate_pulse(QubitState(random_density(rng)), p, random_pulse(rng, 3), 4)
            for s in traj.states:
                assert abs(np.trace(s.matrix) - 1) < 1e-12
                assert np.linalg.eigvalsh(s.matrix).min() >= -1e-10

    def test_relaxation_monotone(self):
        p = ModelParams(delta=0.5, gamma=0.1)
        rho = QubitState(np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]]))
        traj = dynamics.propagate_pulse(rho, p, PiecewisePulse.from_lists([20.0], [0.0]), 64)
        z = [z_of(s) for s in traj.states]
        assert np.all(np.diff(z) > 0)

    def test_bad_samples(self):
        with pytest.raises(DomainError):
            dynamics.propagate_pulse(UP, ModelParams(), PiecewisePulse.from_lists([1.0], [1.0]), 0)


class TestUnitaryPropagator:
    def test_zero_time(self):
        u = dynamics.unitary_propagator(ModelParams(), PiecewisePulse.from_lists([1.0], [1.0]), 0.0)
        assert np.allclose(u.matrix, np.eye(2))

    def test_free_evolution(self):
        d, t = 0.3, 2.5
        u = dynamics.unitary_propagator(ModelParams(delta=d), PiecewisePulse.from_lists([t], [0.0]), t)
        assert np.allclose(u.matrix, np.diag([np.exp(0.5j * d * t), np.exp(-0.5j * d * t)]), atol=1e-14)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            dynamics.unitary_propagator(ModelParams(), PiecewisePulse.from_lists([1.0], [1.0]), 1.5)

    def test_cross_oracle_with_lindblad(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = ModelParams(delta=rng.uniform(-1, 1), alpha=rng.uniform(0, 2))
            pulse = random_pulse(rng, 4)
            t = rng.uniform(0, pulse.total_duration)
            rho = random_density(rng)
            u = dynamics.unitary_propagator(p, pulse, t).matrix
            assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-10
            sub = pulse.truncated(t)
            lind = dynamics.propagate_pulse(QubitState(rho), p, sub, 1).final.matrix
            assert np.max(np.abs(u @ rho @ u.conj().T - lind)) < 1e-10


class TestDerivatives:
    @pytest.mark.parametrize("which", ["Delta", "Alpha", "Gamma"])
    def test_exact_derivative_vs_central_difference(self, which):
        rng = np.random.default_rng(8)
        p = ModelParams(delta=0.2, gamma=0.05)
        pulse = random_pulse(rng, 4)
        rho0 = random_density(rng)
        _, drho = dynamics.evolve_density_derivative(rho0, p, pulse, which)
        h = 1e-5
        x = p.get(which)
        fd = (dynamics.evolve_density(rho0, p.with_value(which, x + h), pulse)
              - dynamics.evolve_density(rho0, p.with_value(which, x - h), pulse)) / (2 * h)
        assert np.max(np.abs(drho - fd)) < 1e-8

    def test_unitary_derivative(self):
        rng = np.random.default_rng(9)
        p = ModelParams(delta=0.3, alpha=0.9)
        pulse = random_pulse(rng)
        for which in ("Delta", "Alpha"):
            _, du = dynamics.pulse_unitary_derivative(p, pulse, which)
            h = 1e-6
            x = p.get(which)
            fd = (dynamics.pulse_unitary(p.with_value(which, x + h), pulse)
                  - dynamics.pulse_unitary(p.with_value(which, x - h), pulse)) / (2 * h)
            assert np.max(np.abs(du - fd)) < 1e-8
