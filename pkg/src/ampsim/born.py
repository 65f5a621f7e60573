"""Decoherence metrics, Born-rule estimators, and the pointer algebra.

The outcome probability is extracted as a long-time average of a projector
expectation on the fully entangled trajectory; there is no jump or collapse
anywhere in the computation.  Its distance to the two-point target mixture
(|c1|^2, |c0|^2) is the quantity whose decay with n the scaling module
tracks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import EvolutionConfig, TimeSeries, sample_trajectory, time_average
from .model import HamiltonianOperator, ModelSpec, build_hamiltonian, initial_state, measured_basis
from .observables import PointerObservable
from .states import StateVector, branch_decompose

_DEGENERATE = 1e-15

MEASUREMENT_COLUMNS = (
    "pointer_expectation", "threshold_prob", "rho01_abs", "overlap_D", "norm_error")


def _rho01_abs(s: StateVector) -> float:
    a0, a1 = branch_decompose(s)
    return float(abs(np.vdot(a1, a0)))


def _overlap(s: StateVector) -> float:
    """Normalized branch overlap D = |<A0|A1>| / (|A0| |A1|); NaN when degenerate."""
    a0, a1 = branch_decompose(s)
    n0 = np.linalg.norm(a0)
    n1 = np.linalg.norm(a1)
    if n0 < _DEGENERATE or n1 < _DEGENERATE:
        return float("nan")
    return float(abs(np.vdot(a0, a1)) / (n0 * n1))


def measurement_series(spec: ModelSpec, c0: complex, c1: complex, times,
                       cfg: EvolutionConfig | None = None, theta: float = 0.25,
                       h: HamiltonianOperator | None = None) -> TimeSeries:
    """One pass over the entangled trajectory collecting all standard columns."""
    cfg = cfg or EvolutionConfig()
    h = h or build_hamiltonian(spec)
    pointer = PointerObservable(spec.n, theta)
    observables = [
        pointer.expectation,
        pointer.threshold_probability,
        _rho01_abs,
        _overlap,
        lambda s: s.norm_error(),
    ]
    s0 = initial_state(spec, c0, c1)
    return sample_trajectory(h, s0, times, observables, cfg, labels=MEASUREMENT_COLUMNS)


@dataclass(frozen=True)
class DecoherenceSeries:
    """|rho01(t)| and the normalized branch overlap D(t) along a trajectory.

    Pointwise |rho01| = |A0| |A1| D.  When one branch amplitude vanishes the
    overlap direction is undefined: D is reported as NaN and flagged, while
    |rho01| is exactly 0.
    """

    times: np.ndarray
    rho01_abs: np.ndarray
    overlap: np.ndarray
    time_avg_D: float
    tail_variation: float
    degenerate: bool


def decoherence_series(spec: ModelSpec, c0: complex, c1: complex, times,
                       cfg: EvolutionConfig | None = None) -> DecoherenceSeries:
    degenerate = abs(c0) < _DEGENERATE or abs(c1) < _DEGENERATE
    series = measurement_series(spec, c0, c1, times, cfg)
    rho = series.values[:, series.column("rho01_abs")]
    d = series.values[:, series.column("overlap_D")]
    if degenerate:
        avg_d, tail = float("nan"), float("nan")
    else:
        avg_d, tail = time_average(series, "overlap_D")
    return DecoherenceSeries(series.times, rho.copy(), d.copy(), avg_d, tail, degenerate)


@dataclass(frozen=True)
class BornEstimate:
    """Time-averaged threshold probability against the target |c1|^2.

    time_avg_D is reported alongside because the estimator's bias from the
    coherent cross term is bounded by it.
    """

    p_hat: float
    target: float
    abs_error: float
    n: int
    T: float
    theta: float
    tail_variation: float
    time_avg_D: float
    converged: bool


def born_estimate(spec: ModelSpec, c0: complex, c1: complex, theta: float, T: float,
                  cfg: EvolutionConfig | None = None, tail_tol: float = 0.01,
                  h: HamiltonianOperator | None = None) -> BornEstimate:
    """Estimate the detection probability from one entangled trajectory."""
    cfg = cfg or EvolutionConfig()
    period = spec.characteristic_period()
    if T < 50 * period:
        warnings.warn(
            f"horizon T={T:g} spans fewer than 50 characteristic periods "
            f"({period:g}); the estimate may not be converged", stacklevel=2)
    times = np.arange(0.0, T + cfg.dt / 2, cfg.dt)
    series = measurement_series(spec, c0, c1, times, cfg, theta, h=h)
    p_hat, tail = time_average(series, "threshold_prob")
    degenerate = abs(c0) < _DEGENERATE or abs(c1) < _DEGENERATE
    avg_d = float("nan") if degenerate else time_average(series, "overlap_D")[0]
    target = abs(c1) ** 2
    return BornEstimate(
        p_hat=p_hat, target=target, abs_error=abs(p_hat - target), n=spec.n,
        T=float(T), theta=theta, tail_variation=tail, time_avg_D=avg_d,
        converged=tail <= tail_tol)


def mixture_distance_of(est: BornEstimate) -> float:
    """Total-variation distance of (p_hat, 1-p_hat) from (|c1|^2, |c0|^2)."""
    return est.abs_error


def mixture_distance(spec: ModelSpec, c0: complex, c1: complex, theta: float, T: float,
                     cfg: EvolutionConfig | None = None, tail_tol: float = 0.01) -> float:
    return mixture_distance_of(born_estimate(spec, c0, c1, theta, T, cfg, tail_tol))


@dataclass(frozen=True)
class PointerAlgebra:
    """The abelian algebra {a I + b G} generated by one self-adjoint 2x2 matrix."""

    generator: np.ndarray
    basis: tuple[np.ndarray, np.ndarray]
    max_commutator: float


def pointer_algebra(generator) -> PointerAlgebra:
    """Close the algebra of one measurement setup and verify it is abelian.

    Products never leave span{I, G}: G^2 = tr(G) G - det(G) I, so the two
    basis elements already exhaust the algebra.
    """
    g = np.asarray(generator, dtype=np.complex128)
    if g.shape != (2, 2):
        raise ValueError(f"generator must be 2x2, got shape {g.shape}")
    scale = max(1.0, float(np.abs(g).max()))
    if np.abs(g - g.conj().T).max() > 1e-12 * scale:
        raise ValueError("generator must be self-adjoint")
    identity = np.eye(2, dtype=np.complex128)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(8):
        a, b, c, d = rng.normal(size=4)
        x = a * identity + b * g
        y = c * identity + d * g
        worst = max(worst, float(np.abs(x @ y - y @ x).max()))
    return PointerAlgebra(g, (identity, g.copy()), worst)


def setup_projector(alpha: float) -> np.ndarray:
    """Rank-1 projector onto the particle state measured by an alpha setup."""
    _, psi1 = measured_basis(alpha)
    return np.outer(psi1, psi1.conj())


def setup_commutator(alpha: float, alpha_prime: float) -> float:
    """Operator norm of [P1(alpha), P1(alpha')].

    Vanishes exactly when the setups are compatible (equal angles, or
    complementary angles differing by pi/2); equals |sin d cos d| in general.
    """
    for a in (alpha, alpha_prime):
        if not (0.0 <= a < np.pi):
            raise ValueError("setup angles must lie in [0, pi)")
    p = setup_projector(alpha)
    q = setup_projector(alpha_prime)
    return float(np.linalg.norm(p @ q - q @ p, 2))
