import numpy as np
import pytest

import ampsim.dynamics as dynamics
from ampsim import (ConvergenceError, EvolutionConfig, ModelSpec, SimulationError,
                    TimeSeries, build_hamiltonian, closed_form_branch,
                    closed_form_overlap, evolve, initial_state, make_product_state,
                    sample_trajectory, time_average)
from ampsim.observables import pointer_expectation
from ampsim.states import basis_index
from conftest import random_state
from oracles import expm_evolve, kron_hamiltonian, quadrature_overlap_average

KRYLOV = EvolutionConfig("iterative_krylov")
DENSE = EvolutionConfig("dense_eigen")


class TestEvolve:
    def test_time_zero_is_identity(self):
        spec = ModelSpec.disordered(5, seed=1)
        h = build_hamiltonian(spec)
        s = random_state(5, seed=2)
        for cfg in (KRYLOV, DENSE):
            np.testing.assert_allclose(evolve(h, s, 0.0, cfg).amplitudes,
                                       s.amplitudes, atol=1e-12)

    def test_undetectable_branch_is_frozen(self):
        # eps=0: H annihilates the psi0 branch, so not even a phase accumulates
        spec = ModelSpec.disordered(6, seed=3, alpha=0.4)
        h = build_hamiltonian(spec)
        s = initial_state(spec, 1.0, 0.0)
        out = evolve(h, s, 7.3, KRYLOV)
        np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-12)

    def test_detectable_branch_matches_closed_form(self):
        spec = ModelSpec.disordered(6, seed=4)
        h = build_hamiltonian(spec)
        state = initial_state(spec, 0.0, 1.0)
        worst = 0.0
        prev = 0.0
        for t in np.linspace(0.0, 50.0, 26):
            state = evolve(h, state, t - prev, KRYLOV)
            prev = t
            oracle = make_product_state(closed_form_branch(spec, t))
            worst = max(worst, np.linalg.norm(state.amplitudes - oracle.amplitudes))
        assert worst < 1e-8

    def test_agrees_with_generic_expm_oracle(self):
        spec = ModelSpec.disordered(4, seed=5, alpha=0.9, eps=0.15)
        h = build_hamiltonian(spec)
        hd = kron_hamiltonian(spec.couplings, alpha=0.9, eps=0.15)
        s = random_state(4, seed=6)
        for t in (0.4, 3.7):
            want = expm_evolve(hd, s.amplitudes, t)
            got = evolve(h, s, t, KRYLOV).amplitudes
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_dense_and_krylov_agree(self):
        spec = ModelSpec.disordered(6, seed=7, eps=0.1)
        h = build_hamiltonian(spec)
        s = random_state(6, seed=8)
        for t in (0.9, 14.2):
            a = evolve(h, s, t, DENSE).amplitudes
            b = evolve(h, s, t, KRYLOV).amplitudes
            assert np.linalg.norm(a - b) < 1e-9

    def test_composition(self):
        spec = ModelSpec.disordered(5, seed=9)
        h = build_hamiltonian(spec)
        s = random_state(5, seed=10)
        once = evolve(h, evolve(h, s, 2.2, KRYLOV), 3.9, KRYLOV)
        direct = evolve(h, s, 6.1, KRYLOV)
        assert np.linalg.norm(once.amplitudes - direct.amplitudes) < 10 * KRYLOV.tolerance

    def test_reversibility(self):
        spec = ModelSpec.disordered(6, seed=11)
        h = build_hamiltonian(spec)
        s = initial_state(spec, 0.6, 0.8)
        back = evolve(h, evolve(h, s, 40.0, KRYLOV), -40.0, KRYLOV)
        assert np.linalg.norm(back.amplitudes - s.amplitudes) < 1e-8

    def test_unitarity_along_trajectory(self):
        spec = ModelSpec.disordered(6, seed=12)
        h = build_hamiltonian(spec)
        times = np.arange(0.0, 60.0, 0.5)
        series = sample_trajectory(h, initial_state(spec, 0.6, 0.8), times,
                                   [lambda s: s.norm_error()], KRYLOV)
        assert series.values.max() < 1e-9

    def test_energy_conservation(self):
        spec = ModelSpec.disordered(5, seed=13, eps=0.2)
        h = build_hamiltonian(spec)
        energy = lambda s: np.vdot(s.amplitudes, h.apply(s.amplitudes)).real
        times = np.arange(0.0, 50.0, 0.5)
        series = sample_trajectory(h, initial_state(spec, 0.6, 0.8), times, [energy], KRYLOV)
        assert np.abs(series.values - series.values[0]).max() < 1e-9

    def test_linearity_of_the_flow(self):
        spec = ModelSpec.disordered(6, seed=14)
        h = build_hamiltonian(spec)
        c0, c1 = 0.48 + 0.36j, 0.8
        states = [initial_state(spec, c0, c1),
                  initial_state(spec, 1.0, 0.0),
                  initial_state(spec, 0.0, 1.0)]
        prev = 0.0
        for t in np.linspace(1.0, 20.0, 20):
            states = [evolve(h, s, t - prev, KRYLOV) for s in states]
            prev = t
            combo = c0 * states[1].amplitudes + c1 * states[2].amplitudes
            assert np.linalg.norm(states[0].amplitudes - combo) < 1e-9

    def test_dense_rejected_above_cap(self):
        spec = ModelSpec.uniform(13, 1.0)
        h = build_hamiltonian(spec)
        with pytest.raises(SimulationError, match="n <= 12"):
            evolve(h, initial_state(spec, 1.0, 0.0), 1.0, DENSE)

    def test_krylov_reports_achieved_residual(self, monkeypatch):
        monkeypatch.setattr(dynamics, "_MAX_HALVINGS", 0)
        spec = ModelSpec.uniform(4, 1.0)
        h = build_hamiltonian(spec)
        s = initial_state(spec, 0.0, 1.0)
        cfg = EvolutionConfig("iterative_krylov", krylov_dim=4, tolerance=1e-14)
        with pytest.raises(ConvergenceError, match="residual"):
            evolve(h, s, 30.0, cfg)


class TestSampleTrajectory:
    def test_constant_observable(self):
        spec = ModelSpec.disordered(4, seed=15)
        h = build_hamiltonian(spec)
        times = np.arange(0.0, 20.0, 0.25)
        norm2 = lambda s: float(np.vdot(s.amplitudes, s.amplitudes).real)
        series = sample_trajectory(h, initial_state(spec, 0.6, 0.8), times, [norm2], KRYLOV)
        np.testing.assert_allclose(series.values, 1.0, atol=1e-10)
        assert series.tail_variation[0] < 1e-10

    def test_pointer_on_cascading_branch_is_rabi(self):
        g = 1.2
        spec = ModelSpec.uniform(3, g)
        h = build_hamiltonian(spec)
        times = np.arange(0.0, 15.0, 0.1)
        series = sample_trajectory(h, initial_state(spec, 0.0, 1.0), times,
                                   [pointer_expectation], KRYLOV)
        want = np.sin(g * times / 2) ** 2
        np.testing.assert_allclose(series.values[:, 0], want, atol=1e-9)

    def test_superposition_trajectory_is_weighted_branch_sum(self):
        spec = ModelSpec.uniform(4, 1.0)
        h = build_hamiltonian(spec)
        c1sq = 0.37
        times = np.arange(0.0, 25.0, 0.5)
        sup = sample_trajectory(h, initial_state(spec, np.sqrt(1 - c1sq), np.sqrt(c1sq)),
                                times, [pointer_expectation], KRYLOV)
        want = c1sq * np.sin(times / 2) ** 2
        np.testing.assert_allclose(sup.values[:, 0], want, atol=1e-9)

    def test_rejects_bad_times(self):
        spec = ModelSpec.uniform(2, 1.0)
        h = build_hamiltonian(spec)
        s = initial_state(spec, 1.0, 0.0)
        with pytest.raises(ValueError, match="increase"):
            sample_trajectory(h, s, [0.0, 0.5, 0.5], [pointer_expectation])
        with pytest.raises(ValueError, match="empty"):
            sample_trajectory(h, s, [], [pointer_expectation])


class TestTimeAverage:
    def test_constant_series(self):
        series = TimeSeries.from_samples(np.linspace(0, 10, 50), np.full(50, 3.25))
        mean, tail = time_average(series)
        assert mean == pytest.approx(3.25, abs=1e-12)
        assert tail < 1e-12

    def test_rabi_average_is_half(self):
        g, horizon = 1.0, 120.0
        spec = ModelSpec.uniform(1, g)
        h = build_hamiltonian(spec)
        times = np.arange(0.0, horizon, 0.05)
        series = sample_trajectory(h, initial_state(spec, 0.0, 1.0), times,
                                   [pointer_expectation], KRYLOV)
        mean, tail = time_average(series)
        assert abs(mean - 0.5) < 2 / (g * horizon)
        assert tail < 0.02

    @pytest.mark.parametrize("n", [4, 6, 8, 10])
    def test_overlap_average_approaches_binary_limit(self, n):
        # long-horizon mean of |prod cos| is (2/pi)^n within 20 percent
        spec = ModelSpec.disordered(n, seed=7)
        times = np.arange(0.0, 2000.0, 0.05)
        series = TimeSeries.from_samples(times, np.abs(closed_form_overlap(spec, times)))
        mean, _ = time_average(series)
        limit = (2 / np.pi) ** n
        assert abs(mean - limit) < 0.2 * limit
        oracle = quadrature_overlap_average(spec.couplings, 2000.0, dt=0.01)
        assert abs(mean - oracle) < 1e-3 * max(oracle, 1e-12)

    def test_warns_on_short_span(self):
        series = TimeSeries.from_samples(np.linspace(0, 5, 20), np.ones(20))
        with pytest.warns(UserWarning, match="10 characteristic periods"):
            time_average(series, 0, characteristic_period=1.0)

    def test_single_sample(self):
        series = TimeSeries.from_samples([0.0], [2.0])
        assert time_average(series) == (2.0, 0.0)
