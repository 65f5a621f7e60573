import numpy as np
import pytest

from ampsim import (EvolutionConfig, ModelSpec, PointerObservable, ProductFactors,
                    StateVector, SubstitutionTest, is_macroscopic, make_product_state,
                    pointer_expectation, pointer_family, single_unit_family,
                    substitution_invariance, threshold_probability)
from ampsim.observables import constant_family, default_macro_base, random_unit_factor
from ampsim.states import basis_index
from conftest import random_state

CFG = EvolutionConfig(dt=0.25)


def basis_product(n, bits):
    units = np.zeros((n, 2), dtype=complex)
    units[np.arange(n), bits] = 1.0
    return make_product_state(ProductFactors([1.0, 0.0], units))


class TestPointerExpectation:
    def test_all_excited_reads_zero(self):
        assert pointer_expectation(basis_product(5, [1] * 5)) == 0.0

    def test_full_cascade_reads_one(self):
        assert pointer_expectation(basis_product(5, [0] * 5)) == 1.0

    def test_counts_deexcited_fraction(self):
        s = basis_product(4, [0, 1, 0, 1])
        assert pointer_expectation(s) == pytest.approx(0.5, abs=1e-15)

    def test_spectrum_is_the_fraction_ladder(self):
        w = PointerObservable(4).weights
        assert set(np.round(np.unique(w) * 4).astype(int)) == {0, 1, 2, 3, 4}

    def test_closed_form_value_on_cascading_branch(self):
        from ampsim import build_hamiltonian, evolve, initial_state
        g, t = 1.1, 2.7
        spec = ModelSpec.uniform(5, g)
        h = build_hamiltonian(spec)
        s = evolve(h, initial_state(spec, 0.0, 1.0), t)
        assert abs(pointer_expectation(s) - np.sin(g * t / 2) ** 2) < 1e-10


class TestThresholdProbability:
    def test_all_excited_gives_zero_for_any_threshold(self):
        s = basis_product(4, [1] * 4)
        for theta in (0.1, 0.5, 0.9):
            assert threshold_probability(s, theta) == 0.0

    def test_cascade_completion_crosses_half(self):
        from ampsim import build_hamiltonian, evolve, initial_state
        g = 1.0
        spec = ModelSpec.uniform(5, g)
        h = build_hamiltonian(spec)
        s = evolve(h, initial_state(spec, 0.0, 1.0), np.pi / g)
        assert threshold_probability(s, 0.5) == pytest.approx(1.0, abs=1e-9)

    def test_monotone_nonincreasing_in_theta(self):
        s = random_state(6, seed=5)
        thetas = np.linspace(0.05, 0.95, 19)
        values = [threshold_probability(s, th) for th in thetas]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_threshold_includes_exact_eigenvalue(self):
        # m/n >= theta keeps the boundary state: 3 of 12 at theta = 1/4
        s = basis_product(12, [0, 0, 0] + [1] * 9)
        assert threshold_probability(s, 0.25) == 1.0
        assert threshold_probability(s, 0.25 + 1e-12) == 0.0

    def test_projector_is_idempotent(self):
        mask = PointerObservable(6, 0.3).threshold_mask
        np.testing.assert_array_equal(mask & mask, mask)

    def test_layer_cake_identity(self):
        # <M> equals (1/n) sum_m <Pi at (2m-1)/(2n)>, the discrete layer cake
        s = random_state(6, seed=9)
        n = 6
        total = sum(threshold_probability(s, (2 * m - 1) / (2 * n)) for m in range(1, n + 1))
        assert abs(total / n - pointer_expectation(s)) < 1e-10

    def test_rejects_theta_outside_open_interval(self):
        s = basis_product(3, [1, 1, 1])
        for theta in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError, match="theta"):
                threshold_probability(s, theta)


class TestStaticSubstitutionBound:
    def test_exhaustive_on_basis_states(self):
        # |f(v) - f(v')| <= k/n for every pair of basis products, n <= 6
        for n in (2, 4, 6):
            values = PointerObservable(n).weights
            for a in range(2 ** n):
                fa = values[a]
                for b in range(2 ** n):
                    k = int(bin(a ^ b).count("1"))
                    assert abs(fa - values[b]) <= k / n + 1e-15

    def test_random_product_states(self, rng):
        n, trials = 9, 100
        for _ in range(trials):
            base = default_macro_base(n)
            k = int(rng.integers(1, n))
            positions = rng.choice(n, size=k, replace=False)
            new = [random_unit_factor(rng) for _ in positions]
            other = base.substitute(positions, new)
            delta = abs(pointer_expectation(make_product_state(base))
                        - pointer_expectation(make_product_state(other)))
            assert delta <= k / n + 1e-12


class TestSubstitutionInvariance:
    def test_zero_substitutions_give_zero_deviation(self):
        spec = ModelSpec.disordered(4, seed=1)
        test = SubstitutionTest(default_macro_base(4), k=0, trials=2)
        times = np.arange(0.0, 40.0, 0.25)
        result = substitution_invariance(pointer_family, test, spec, times, CFG)
        assert result.max_deviation == 0.0

    def test_pointer_obeys_k_over_n(self):
        spec = ModelSpec.disordered(8, seed=2)
        test = SubstitutionTest(default_macro_base(8), k=1, trials=4, seed=3)
        times = np.arange(0.0, 100.0, 0.25)
        result = substitution_invariance(pointer_family, test, spec, times, CFG)
        assert result.max_deviation <= 1 / 8 + result.tail_variation

    def test_single_unit_observable_is_order_one(self):
        spec = ModelSpec.disordered(8, seed=4)
        test = SubstitutionTest(default_macro_base(8), k=1, trials=6, seed=5)
        times = np.arange(0.0, 100.0, 0.25)
        result = substitution_invariance(single_unit_family(0), test, spec, times, CFG)
        # the frozen branch remembers unit 0 forever: deviations stay O(1)
        assert result.max_deviation > 0.1

    def test_rejects_k_not_less_than_n(self):
        with pytest.raises(ValueError, match="k"):
            SubstitutionTest(default_macro_base(4), k=4)


class TestIsMacroscopic:
    make_spec = staticmethod(lambda n: ModelSpec.disordered(n, seed=17))

    def test_pointer_family_passes(self):
        verdict = is_macroscopic(pointer_family, [4, 6, 8], self.make_spec,
                                 k=1, trials=3, horizon=120.0, cfg=CFG)
        assert verdict.passed
        devs = [dev for (_, dev, _) in verdict.per_n]
        bounds = [b for (_, _, b) in verdict.per_n]
        assert all(d <= b for d, b in zip(devs, bounds))

    def test_single_unit_family_fails(self):
        verdict = is_macroscopic(single_unit_family(0), [4, 6, 8], self.make_spec,
                                 k=1, trials=3, horizon=120.0, cfg=CFG)
        assert not verdict.passed

    def test_constant_family_passes_with_zero_deviation(self):
        verdict = is_macroscopic(constant_family(0.7), [4, 6, 8], self.make_spec,
                                 k=1, trials=2, horizon=40.0, cfg=CFG)
        assert verdict.passed
        assert all(dev == 0.0 for (_, dev, _) in verdict.per_n)

    def test_requires_three_sizes(self):
        with pytest.raises(ValueError, match="3"):
            is_macroscopic(pointer_family, [4, 6], self.make_spec)

    def test_evidence_rows_schema(self):
        verdict = is_macroscopic(constant_family(), [4, 5, 6], self.make_spec,
                                 k=1, trials=2, horizon=30.0, cfg=CFG)
        header, *rows = verdict.evidence_rows()
        assert header == ("n", "k", "trial", "deviation")
        assert len(rows) == 6
