"""Joint particle-apparatus state vectors and their basic algebra.

Basis layout (shared by every module in this package): a joint basis state
of the two-level particle and n two-level amplifier units is indexed by

    index = particle_bit * 2**n  +  sum_k unit_bits[k] * 2**k

i.e. the particle bit is the most significant bit and unit k occupies
binary position k (unit 0 is the least significant bit).  Particle bit 0
is the undetectable state psi0, bit 1 is the detectable state psi1.  Unit
bit 0 is the de-excited state |0>, bit 1 the excited state |1>.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import SimulationError

# Hard cap on the unit count: amplitudes are stored dense, 2**(n+1) complex
# numbers.  The thermodynamic limit is reached by extrapolation, never by
# representation.
MAX_UNITS = 24

_NORM_TOL = 1e-12


def basis_index(particle_bit: int, unit_bits) -> int:
    """Flattened index of a joint basis state under the documented layout."""
    idx = particle_bit << len(unit_bits)
    for k, b in enumerate(unit_bits):
        idx |= (b & 1) << k
    return idx


def split_index(index: int, n: int) -> tuple[int, list[int]]:
    """Inverse of basis_index: (particle_bit, [unit bit k for k in 0..n-1])."""
    return (index >> n) & 1, [(index >> k) & 1 for k in range(n)]


@dataclass(frozen=True)
class ProductFactors:
    """A product state: particle pair (c0, c1) and one (amp|0>, amp|1>) pair per unit.

    Kept as a first-class object because substitution invariance is defined
    over sequences of product factors.
    """

    particle: np.ndarray          # shape (2,): amplitudes on (psi0, psi1)
    units: np.ndarray             # shape (n, 2): amplitudes on (|0>, |1>) per unit

    def __post_init__(self):
        particle = np.asarray(self.particle, dtype=np.complex128).reshape(2)
        units = np.asarray(self.units, dtype=np.complex128)
        if units.ndim != 2 or units.shape[1] != 2:
            raise ValueError(f"units must have shape (n, 2), got {units.shape}")
        object.__setattr__(self, "particle", particle)
        object.__setattr__(self, "units", units)
        if abs(np.linalg.norm(particle) - 1.0) > _NORM_TOL:
            raise ValueError("particle factor is not normalized")
        norms = np.linalg.norm(units, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > _NORM_TOL)[0]
        if bad.size:
            raise ValueError(f"unit factor {bad[0]} is not normalized (norm {norms[bad[0]]!r})")
        particle.flags.writeable = False
        units.flags.writeable = False

    @property
    def n(self) -> int:
        return self.units.shape[0]

    def substitute(self, positions, new_factors) -> "ProductFactors":
        """Return a copy with unit factors at the given positions replaced."""
        units = self.units.copy()
        for pos, fac in zip(positions, new_factors):
            units[pos] = fac
        return ProductFactors(self.particle, units)


@dataclass(frozen=True)
class StateVector:
    """Normalized state on the joint space, dense over 2**(n+1) amplitudes."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.n < 1 or self.n > MAX_UNITS:
            raise SimulationError(f"unit count n={self.n} outside supported range 1..{MAX_UNITS}")
        if amps.shape != (2 ** (self.n + 1),):
            raise ValueError(f"amplitude array has shape {amps.shape}, expected ({2**(self.n+1)},)")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"state norm {nrm!r} deviates from 1 beyond tolerance")
        object.__setattr__(self, "amplitudes", amps)
        amps.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm_error(self) -> float:
        return abs(np.linalg.norm(self.amplitudes) - 1.0)

    def particle_block(self) -> np.ndarray:
        """View of the amplitudes as a (2, 2**n) array, particle bit first."""
        return self.amplitudes.reshape(2, -1)


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """2x2 reduced state of the particle, in the (psi0, psi1) basis."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128).reshape(2, 2)
        object.__setattr__(self, "entries", m)
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("reduced density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10 or abs(np.trace(m).imag) > 1e-10:
            raise ValueError("reduced density matrix trace deviates from 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("reduced density matrix has a significantly negative eigenvalue")
        m.flags.writeable = False

    @property
    def coherence(self) -> complex:
        """Off-diagonal element rho01 = <psi0| rho |psi1>."""
        return complex(self.entries[0, 1])


def make_product_state(factors: ProductFactors) -> StateVector:
    """Assemble the dense joint state from product factors.

    The amplitude at each basis index is the product of the selected factor
    components, per the documented bit layout.
    """
    n = factors.n
    if n < 1 or n > MAX_UNITS:
        raise SimulationError(f"unit count n={n} outside supported range 1..{MAX_UNITS}")
    # kron(a, b) puts a's index in the most significant position, so units go
    # in reverse: unit n-1 ends up at bit n-1 and unit 0 at bit 0.
    apparatus = reduce(np.kron, factors.units[::-1]) if n > 1 else factors.units[0]
    amps = np.kron(factors.particle, apparatus)
    return StateVector(n, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def partial_trace_particle(s: StateVector) -> ReducedDensityMatrix:
    """Trace out all amplifier units, leaving the 2x2 particle state."""
    v = s.particle_block()
    return ReducedDensityMatrix(v @ v.conj().T)


def branch_decompose(s: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """Split s into apparatus vectors (A0, A1) with s = psi0 (x) A0 + psi1 (x) A1.

    The returned arrays are not normalized; their squared norms sum to 1.
    """
    v = s.particle_block()
    return v[0].copy(), v[1].copy()


def branch_weights(s: StateVector) -> tuple[float, float]:
    """Squared norms (|A0|^2, |A1|^2) of the two particle branches."""
    a0, a1 = branch_decompose(s)
    return float(np.vdot(a0, a0).real), float(np.vdot(a1, a1).real)
