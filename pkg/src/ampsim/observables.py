"""Macroscopic observables: the pointer variable and the substitution test.

A family of observables f_n is treated as macroscopic when its trajectory
time averages are insensitive to replacing finitely many of the initial
product factors: substituting k of n unit factors may move the average by at
most k/n plus the convergence error of the average itself.  The pointer
variable (fraction of de-excited units) satisfies the bound; an observable
that watches a single unit does not, and is the canonical counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import EvolutionConfig, sample_trajectory, time_average
from .model import ModelSpec, build_hamiltonian
from .states import ProductFactors, StateVector, make_product_state


@lru_cache(maxsize=32)
def _pointer_weights(n: int) -> np.ndarray:
    """De-excited fraction m/n per apparatus basis state (m = n - popcount)."""
    idx = np.arange(2 ** n, dtype=np.uint32)
    excited = np.bitwise_count(idx).astype(np.float64)
    w = (n - excited) / n
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class PointerObservable:
    """The diagonal pointer variable M_n and its threshold projector.

    Eigenvalues are exactly {0, 1/n, ..., 1}; the projector Pi_theta keeps
    basis states whose de-excited fraction is >= theta.  Both act as the
    identity on the particle factor.
    """

    n: int
    theta: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError("threshold theta must lie strictly inside (0, 1)")

    @property
    def weights(self) -> np.ndarray:
        return _pointer_weights(self.n)

    @property
    def threshold_mask(self) -> np.ndarray:
        return self.weights >= self.theta

    def expectation(self, s: StateVector) -> float:
        probs = np.abs(s.particle_block()) ** 2
        return float((probs.sum(axis=0) * self.weights).sum())

    def threshold_probability(self, s: StateVector) -> float:
        probs = np.abs(s.particle_block()) ** 2
        return float(probs.sum(axis=0)[self.threshold_mask].sum())


def pointer_expectation(s: StateVector) -> float:
    """<M_n> = sum_b |amp(b)|^2 * (de-excited fraction of b), in [0, 1]."""
    return PointerObservable(s.n).expectation(s)


def threshold_probability(s: StateVector, theta: float) -> float:
    """<Pi_theta>, the probability of pointer reading >= theta."""
    return PointerObservable(s.n, theta).threshold_probability(s)


def pointer_family(n: int):
    """Observable family f_n = pointer expectation (passes the macro test)."""
    return pointer_expectation


def single_unit_family(unit: int = 0):
    """Counterexample family: de-excitation probability of one fixed unit.

    Sensitive to a single factor substitution by O(1), independent of n.
    """

    def make(n: int):
        if unit >= n:
            raise ValueError(f"unit {unit} does not exist for n={n}")

        def observe(s: StateVector) -> float:
            probs = np.abs(s.amplitudes) ** 2
            idx = np.arange(2 ** (n + 1))
            deexcited = (idx >> unit) & 1 == 0
            return float(probs[deexcited].sum())

        return observe

    return make


def constant_family(value: float = 1.0):
    def make(n: int):
        return lambda s: value

    return make


def random_unit_factor(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class SubstitutionTest:
    """One substitution experiment: k replaced factors, several random trials."""

    base: ProductFactors
    k: int
    trials: int = 8
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.k < self.base.n):
            raise ValueError(f"substitution count k={self.k} must satisfy 0 <= k < n={self.base.n}")
        if self.trials < 1:
            raise ValueError("at least one trial is required")


@dataclass(frozen=True)
class SubstitutionResult:
    n: int
    k: int
    deviations: np.ndarray        # per trial |time-avg(f, substituted) - time-avg(f, base)|
    base_average: float
    tail_variation: float         # worst convergence error across all runs

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max()) if self.deviations.size else 0.0

    @property
    def bound(self) -> float:
        """k/n plus the time-average convergence error."""
        return self.k / self.n + self.tail_variation


def _trajectory_average(spec: ModelSpec, factors: ProductFactors, observable,
                        times, cfg: EvolutionConfig) -> tuple[float, float]:
    h = build_hamiltonian(spec)
    series = sample_trajectory(h, make_product_state(factors), times, [observable], cfg)
    return time_average(series, 0)


def substitution_invariance(family, test: SubstitutionTest, spec: ModelSpec,
                            times, cfg: EvolutionConfig | None = None) -> SubstitutionResult:
    """Measure how far k-factor substitutions move the trajectory time average.

    The observable family is a callable n -> (StateVector -> float).  The
    particle factor is never substituted; only the n unit factors are, since
    the invariance notion quantifies over the amplifier's product sequence.
    """
    cfg = cfg or EvolutionConfig()
    if spec.n != test.base.n:
        raise ValueError("spec and base factors disagree on the unit count")
    observable = family(spec.n)
    base_avg, base_tail = _trajectory_average(spec, test.base, observable, times, cfg)
    rng = np.random.default_rng(test.seed)
    deviations = np.empty(test.trials)
    worst_tail = base_tail
    for trial in range(test.trials):
        if test.k == 0:
            deviations[trial] = 0.0
            continue
        # stratified positions: trial j always touches unit j mod n, so an
        # observable pinned to any single unit is guaranteed to be probed;
        # the remaining k-1 positions are drawn at random
        first = trial % spec.n
        rest = rng.choice([p for p in range(spec.n) if p != first],
                          size=test.k - 1, replace=False) if test.k > 1 else []
        positions = np.array([first, *rest])
        new = [random_unit_factor(rng) for _ in positions]
        avg, tail = _trajectory_average(spec, test.base.substitute(positions, new),
                                        observable, times, cfg)
        deviations[trial] = abs(avg - base_avg)
        worst_tail = max(worst_tail, tail)
    return SubstitutionResult(spec.n, test.k, deviations, base_avg, worst_tail)


@dataclass(frozen=True)
class MacroVerdict:
    passed: bool
    rows: tuple[tuple[int, int, int, float], ...]   # (n, k, trial, deviation)
    per_n: tuple[tuple[int, float, float], ...]      # (n, max deviation, bound)

    def evidence_rows(self):
        return [("n", "k", "trial", "deviation")] + [tuple(map(str, r)) for r in self.rows]


def default_macro_base(n: int) -> ProductFactors:
    """Equal particle superposition over a fully inverted amplifier.

    The superposition matters: it keeps a frozen branch in play, so an
    observable pinned to one unit visibly remembers that unit's initial
    factor and fails the test, as it should.
    """
    particle = np.array([1.0, 1.0], dtype=np.complex128) / np.sqrt(2)
    units = np.tile(np.array([0.0, 1.0], dtype=np.complex128), (n, 1))
    return ProductFactors(particle, units)


def is_macroscopic(family, n_list, make_spec, *, k: int = 1, trials: int = 4,
                   horizon: float = 150.0, cfg: EvolutionConfig | None = None,
                   base_for=default_macro_base, seed: int = 0) -> MacroVerdict:
    """Test a family against the k/n substitution schedule across n_list.

    make_spec is a callable n -> ModelSpec.  The verdict is pass iff for every
    n the worst deviation stays within k/n plus the observed time-average
    convergence error.
    """
    n_list = sorted(n_list)
    if len(n_list) < 3:
        raise ValueError("need at least 3 unit counts to judge the schedule")
    cfg = cfg or EvolutionConfig()
    rows = []
    per_n = []
    ok = True
    for n in n_list:
        spec = make_spec(n)
        times = np.arange(0.0, horizon + cfg.dt / 2, cfg.dt)
        test = SubstitutionTest(base_for(n), k=k, trials=trials, seed=seed + n)
        result = substitution_invariance(family, test, spec, times, cfg)
        for trial, dev in enumerate(result.deviations):
            rows.append((n, k, trial, float(dev)))
        per_n.append((n, result.max_deviation, result.bound))
        if result.max_deviation > result.bound:
            ok = False
    return MacroVerdict(ok, tuple(rows), tuple(per_n))
