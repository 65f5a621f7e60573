"""The amplifier model: couplings, Hamiltonian, and its closed-form branch.

The joint Hamiltonian is

    H = P1(alpha) (x) sum_k (g_k / 2) X_k  +  eps * I (x) sum_k Z_k

where P1(alpha) projects onto the measured particle state
psi1(alpha) = cos(alpha) psi1 + sin(alpha) psi0, X_k flips amplifier unit k,
and Z_k is +1 on an excited and -1 on a de-excited unit.  With eps = 0 the
undetectable branch psi0(alpha) (x) anything is annihilated exactly, while
the detectable branch drives every unit through independent flip cycles.
hbar = 1 throughout; time is measured in units of 1/g.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import SimulationError
from .states import MAX_UNITS, ProductFactors, StateVector, make_product_state

DENSE_MAX_UNITS = 12


def measured_basis(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Particle basis fixed by the coupling: (psi0(alpha), psi1(alpha)).

    Column convention in (psi0, psi1) coordinates:
    psi1(alpha) = (sin a, cos a), psi0(alpha) = (cos a, -sin a).
    """
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([c, -s], dtype=np.complex128), np.array([s, c], dtype=np.complex128)


@dataclass(frozen=True)
class ModelSpec:
    """Full description of one amplifier setup."""

    n: int
    couplings: np.ndarray                  # g_k > 0, angular frequency units
    coupling_kind: str = "uniform"         # "uniform" or "disordered"
    basis_angle: float = 0.0               # alpha in [0, pi)
    self_energy: float = 0.0               # eps, per-unit apparatus energy
    seed: int | None = None                # draw seed for disordered couplings

    def __post_init__(self):
        if self.n < 1 or self.n > MAX_UNITS:
            raise SimulationError(f"unit count n={self.n} outside supported range 1..{MAX_UNITS}")
        g = np.asarray(self.couplings, dtype=np.float64)
        if g.shape != (self.n,):
            raise ValueError(f"couplings must have shape ({self.n},), got {g.shape}")
        if not np.all(g > 0):
            raise ValueError("all couplings must be positive")
        if not (0.0 <= self.basis_angle < np.pi):
            raise ValueError("basis angle must lie in [0, pi)")
        if self.coupling_kind not in ("uniform", "disordered"):
            raise ValueError(f"unknown coupling kind {self.coupling_kind!r}")
        object.__setattr__(self, "couplings", g)
        g.flags.writeable = False

    @classmethod
    def uniform(cls, n: int, g: float = 1.0, *, alpha: float = 0.0, eps: float = 0.0) -> "ModelSpec":
        return cls(n, np.full(n, float(g)), "uniform", alpha, eps)

    @classmethod
    def disordered(cls, n: int, seed: int, g_range: tuple[float, float] = (0.5, 1.5), *,
                   alpha: float = 0.0, eps: float = 0.0) -> "ModelSpec":
        """Couplings drawn uniformly from g_range, reproducible from the seed."""
        lo, hi = g_range
        if not (0.0 < lo <= hi):
            raise ValueError("coupling range must satisfy 0 < g_min <= g_max")
        g = np.random.default_rng(seed).uniform(lo, hi, n)
        return cls(n, g, "disordered", alpha, eps, seed=seed)

    @property
    def mean_coupling(self) -> float:
        return float(self.couplings.mean())

    def characteristic_period(self) -> float:
        """Time scale used for span warnings (time in units of 1/g)."""
        return 1.0 / self.mean_coupling


@njit(cache=True, nogil=True)
def _flip_sum(w, half_g, out):  # pragma: no cover - exercised via apply()
    """out[b] = sum_k half_g[k] * w[b ^ (1 << k)] over the 2**n apparatus basis."""
    size = w.shape[0]
    nk = half_g.shape[0]
    for b in range(size):
        acc = 0.0 + 0.0j
        for k in range(nk):
            acc += half_g[k] * w[b ^ (1 << k)]
        out[b] = acc
    return out


class HamiltonianOperator:
    """Matrix-free Hermitian operator on the joint space.

    apply() implements the action on raw amplitude arrays; a dense matrix is
    available for n <= 12 only.  Immutable and safe to share between workers.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.n = spec.n
        self.dim = 2 ** (spec.n + 1)
        _, psi1 = measured_basis(spec.basis_angle)
        self._u = psi1
        self._half_g = 0.5 * spec.couplings
        # Z_k eigenvalue sum per apparatus basis state: 2*popcount - n
        idx = np.arange(2 ** spec.n, dtype=np.uint32)
        self._zsum = (2.0 * np.bitwise_count(idx).astype(np.float64) - spec.n)
        self._dense_eig = None

    def norm_bound(self) -> float:
        """Exact upper bound on the operator norm: sum g_k/2 + |eps| n."""
        return float(self._half_g.sum() + abs(self.spec.self_energy) * self.n)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """H @ vec on a raw complex array of length 2**(n+1)."""
        if vec.shape != (self.dim,):
            raise ValueError(f"vector has shape {vec.shape}, expected ({self.dim},)")
        psi = vec.reshape(2, -1)
        u = self._u
        # rank-1 particle projection: P1 = |u><u|
        w = u[0].conjugate() * psi[0] + u[1].conjugate() * psi[1]
        flipped = _flip_sum(w, self._half_g, np.empty_like(w))
        out = np.empty_like(psi)
        out[0] = u[0] * flipped
        out[1] = u[1] * flipped
        eps = self.spec.self_energy
        if eps != 0.0:
            out += eps * self._zsum * psi
        return out.reshape(-1)

    __call__ = apply

    def apply_state(self, s: StateVector) -> np.ndarray:
        return self.apply(s.amplitudes)

    def dense(self) -> np.ndarray:
        """Dense matrix form; refused above n = 12 (memory)."""
        if self.n > DENSE_MAX_UNITS:
            raise SimulationError(
                f"dense form limited to n <= {DENSE_MAX_UNITS}, got n={self.n}")
        size = 2 ** self.n
        b = np.zeros((size, size), dtype=np.complex128)
        idx = np.arange(size)
        for k in range(self.n):
            b[idx, idx ^ (1 << k)] += self._half_g[k]
        u = self._u
        p1 = np.outer(u, u.conj())
        h = np.kron(p1, b)
        eps = self.spec.self_energy
        if eps != 0.0:
            diag = np.concatenate([self._zsum, self._zsum])
            h[np.arange(2 * size), np.arange(2 * size)] += eps * diag
        return h

    def dense_eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition of the dense form (n <= 12)."""
        if self._dense_eig is None:
            w, v = np.linalg.eigh(self.dense())
            self._dense_eig = (w, v)
        return self._dense_eig


def build_hamiltonian(spec: ModelSpec) -> HamiltonianOperator:
    return HamiltonianOperator(spec)


def initial_state(spec: ModelSpec, c0: complex, c1: complex) -> StateVector:
    """Population-inverted start: every unit excited, particle c0 psi0(a) + c1 psi1(a).

    The amplitudes are interpreted in the measured basis fixed by the spec's
    basis angle.
    """
    if abs(abs(c0) ** 2 + abs(c1) ** 2 - 1.0) > 1e-12:
        raise ValueError("particle amplitudes must satisfy |c0|^2 + |c1|^2 = 1")
    psi0_a, psi1_a = measured_basis(spec.basis_angle)
    particle = c0 * psi0_a + c1 * psi1_a
    units = np.tile(np.array([0.0, 1.0], dtype=np.complex128), (spec.n, 1))
    return make_product_state(ProductFactors(particle, units))


def closed_form_branch(spec: ModelSpec, t: float) -> ProductFactors:
    """Analytic product form of the detectable branch at time t (eps = 0 only).

    Unit k carries amplitudes (-i sin(g_k t / 2), cos(g_k t / 2)); the
    particle factor is psi1(alpha).  Serves as the independent oracle for the
    generic integrators.
    """
    if spec.self_energy != 0.0:
        raise SimulationError("closed-form branch is only available for eps = 0")
    _, psi1_a = measured_basis(spec.basis_angle)
    half = 0.5 * spec.couplings * t
    units = np.stack([-1j * np.sin(half), np.cos(half).astype(np.complex128)], axis=1)
    return ProductFactors(psi1_a, units)


def closed_form_overlap(spec: ModelSpec, t) -> np.ndarray:
    """Overlap of the frozen and cascading apparatus branches: prod_k cos(g_k t / 2)."""
    if spec.self_energy != 0.0:
        raise SimulationError("closed-form overlap is only available for eps = 0")
    t = np.asarray(t, dtype=np.float64)
    return np.cos(np.multiply.outer(t, spec.couplings) / 2).prod(axis=-1)
