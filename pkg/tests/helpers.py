"""Construction helpers shared across the test modules."""

from __future__ import annotations

import numpy as np

from seqmeas.analytic import SequentialSetup
from seqmeas.core import Observable, QuantumState, spectral_decompose


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> Observable:
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return Observable(scale * (m + m.conj().T) / 2.0)


def random_state(rng: np.random.Generator, d: int) -> QuantumState:
    return QuantumState.from_unnormalized(rng.normal(size=d) + 1j * rng.normal(size=d))


def random_system(rng: np.random.Generator, d: int):
    """A random state and two independent random observables."""
    return random_state(rng, d), random_hermitian(rng, d), random_hermitian(rng, d)


def random_setup(rng: np.random.Generator, d: int, lambda_a: float = 1.0,
                 lambda_b: float = 1.0) -> SequentialSetup:
    state, obs_a, obs_b = random_system(rng, d)
    return SequentialSetup(
        state=state,
        spec_a=spectral_decompose(obs_a),
        spec_b=spectral_decompose(obs_b),
        lambda_a=lambda_a,
        lambda_b=lambda_b,
    )


def gapped_hermitian(rng: np.random.Generator, d: int, min_gap: float = 0.5) -> Observable:
    """Random Hermitian observable whose eigenvalue gaps all reach ``min_gap``."""
    gaps = min_gap + rng.uniform(0.0, 0.5, size=d - 1)
    vals = np.concatenate([[0.0], np.cumsum(gaps)]) + rng.uniform(-1.0, 1.0)
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    mat = (q * vals) @ q.conj().T
    return Observable((mat + mat.conj().T) / 2.0)


def leggauss_nodes(lo: float, hi: float, n: int):
    """Gauss-Legendre nodes and weights mapped onto [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def integrate_1d(f, lo: float, hi: float, n: int = 160) -> float:
    """Fixed-order Gauss-Legendre quadrature of a scalar function."""
    xs, ws = leggauss_nodes(lo, hi, n)
    return float(sum(w * f(x) for x, w in zip(xs, ws)))


def integrate_2d(f, a_lo: float, a_hi: float, b_lo: float, b_hi: float, n: int = 120) -> float:
    """Tensor-product Gauss-Legendre quadrature of f(a, b)."""
    xa, wa = leggauss_nodes(a_lo, a_hi, n)
    xb, wb = leggauss_nodes(b_lo, b_hi, n)
    total = 0.0
    for x, w in zip(xa, wa):
        total += w * sum(v * f(x, y) for y, v in zip(xb, wb))
    return float(total)
