"""Independent oracle computations used to freeze expected test values.

Everything here deliberately avoids the package's own computational paths:
dense operators are assembled from explicit Kronecker chains, evolution goes
through scipy's generic expm, inner products through compensated summation,
and threshold statistics through a direct Poisson-binomial recursion over
per-unit probabilities.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)   # -1 on |0>, +1 on |1>
_I2 = np.eye(2, dtype=complex)


def fsum_inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """<a|b> by compensated summation of real and imaginary parts."""
    terms = np.conj(a) * b
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def dense_partial_trace(amps: np.ndarray, n: int) -> np.ndarray:
    """Particle reduced matrix from the full projector, the slow way."""
    rho = np.outer(amps, amps.conj())
    rho = rho.reshape(2, 2 ** n, 2, 2 ** n)
    return np.trace(rho, axis1=1, axis2=3)


def kron_chain_operator(op: np.ndarray, k: int, n: int) -> np.ndarray:
    """Single-unit operator on unit k embedded in the 2**n apparatus space."""
    mat = np.eye(1, dtype=complex)
    for pos in range(n - 1, -1, -1):
        mat = np.kron(mat, op if pos == k else _I2)
    return mat


def kron_hamiltonian(couplings, alpha: float = 0.0, eps: float = 0.0) -> np.ndarray:
    """Dense joint Hamiltonian built from explicit Kronecker chains."""
    n = len(couplings)
    psi1 = np.array([np.sin(alpha), np.cos(alpha)], dtype=complex)
    p1 = np.outer(psi1, psi1.conj())
    b = sum(0.5 * g * kron_chain_operator(_X, k, n) for k, g in enumerate(couplings))
    h = np.kron(p1, b)
    if eps != 0.0:
        z = sum(kron_chain_operator(_Z, k, n) for k in range(n))
        h = h + eps * np.kron(_I2, z)
    return h


def expm_evolve(h_dense: np.ndarray, amps: np.ndarray, t: float) -> np.ndarray:
    return expm(-1j * t * h_dense) @ amps


def single_unit_evolution(g: float, t: float) -> np.ndarray:
    """exp(-i t (g/2) X) applied to the excited unit state (0, 1)."""
    return expm(-1j * t * 0.5 * g * _X) @ np.array([0.0, 1.0], dtype=complex)


def threshold_count(n: int, theta: float) -> int:
    """Smallest de-excited count m with m/n >= theta."""
    c = math.ceil(theta * n)
    if c >= 1 and (c - 1) / n >= theta:
        c -= 1
    return c


def binomial_tail_below(n: int, count: int):
    """P[Bin(n, 1/2) < count] as an exact fraction of 2**n."""
    return sum(math.comb(n, m) for m in range(count)) / 2 ** n


def poisson_binomial_below(probs: np.ndarray, count: int) -> np.ndarray:
    """P[X < count] per time sample; probs has shape (nt, n)."""
    nt, n = probs.shape
    dp = np.zeros((nt, n + 1))
    dp[:, 0] = 1.0
    for k in range(n):
        pk = probs[:, k][:, None]
        dp[:, 1:] = dp[:, 1:] * (1 - pk) + dp[:, :-1] * pk
        dp[:, 0] *= (1 - probs[:, k])
    return dp[:, :count].sum(axis=1)


def branch_threshold_series(couplings, times, theta: float) -> np.ndarray:
    """<Pi_theta>(t) on the cascading branch from per-unit flip probabilities."""
    times = np.asarray(times, dtype=float)
    probs = np.sin(np.outer(times, couplings) / 2) ** 2
    c = threshold_count(len(couplings), theta)
    if c == 0:
        return np.ones_like(times)
    return 1.0 - poisson_binomial_below(probs, c)


def overlap_series(couplings, times) -> np.ndarray:
    """|prod_k cos(g_k t / 2)| per sample."""
    times = np.asarray(times, dtype=float)
    return np.abs(np.cos(np.outer(times, couplings) / 2)).prod(axis=1)


def trapezoid_average(values, times) -> float:
    times = np.asarray(times, dtype=float)
    return float(np.trapezoid(values, times) / (times[-1] - times[0]))


def quadrature_overlap_average(couplings, T: float, dt: float = 0.005) -> float:
    """High-resolution time average of the branch overlap on [0, T]."""
    t = np.arange(0.0, T + dt / 2, dt)
    return trapezoid_average(overlap_series(couplings, t), t)


def quadrature_threshold_average(couplings, T: float, theta: float,
                                 dt: float = 0.005) -> float:
    t = np.arange(0.0, T + dt / 2, dt)
    return trapezoid_average(branch_threshold_series(couplings, t, theta), t)
