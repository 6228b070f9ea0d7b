"""Closed-form results for one detector and for two detectors in sequence.

Conventions used throughout: the first detector measures observable A
with strength ``lambda_a`` and reads pointer value ``a``; the second
measures B with strength ``lambda_b`` and reads ``b``.  Quantities are
assembled in the A eigenbasis.  With U the overlap matrix (rows indexed
by B eigenvectors, columns by A eigenvectors) the joint outcome density
is

    P(a, b) = sqrt(4*la*lb/pi^2) * c^dag G c,
    c_n     = <a_n|psi> * exp(-la*(a - a_n)^2),
    G       = U^dag diag(exp(-2*lb*(b - b_m)^2)) U,

which integrates to one over the (a, b) plane.  Intermediate sums are
kept complex to the end; the imaginary residue is asserted small and
dropped only at the return boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Observable, OverlapMatrix, QuantumState, Spectrum, overlap_matrix

__all__ = [
    "SequentialSetup",
    "WeakExpansionReport",
    "moment_single",
    "std_single",
    "joint_density",
    "joint_density_strong",
    "weak_expansion",
    "total_probability",
    "mean_a_sequential",
    "mean_b_sequential",
    "mean_b_strong_limit",
    "weak_slope",
    "condition4_check",
]

IMAG_TOL = 1e-12


def _check_strength(lam: float, name: str) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {lam!r}")
    return lam


def _real_part(val: complex, tol: float, what: str) -> float:
    if abs(val.imag) > tol:
        raise AssertionError(f"{what}: imaginary residue {val.imag:.3e} exceeds {tol:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class SequentialSetup:
    """State, two spectra, and two detector strengths for an A-then-B run."""

    state: QuantumState
    spec_a: Spectrum
    spec_b: Spectrum
    lambda_a: float
    lambda_b: float

    def __post_init__(self):
        if not (self.state.dim == self.spec_a.dim == self.spec_b.dim):
            raise ValueError(
                f"dimension mismatch: state {self.state.dim}, "
                f"first spectrum {self.spec_a.dim}, second spectrum {self.spec_b.dim}"
            )
        object.__setattr__(self, "lambda_a", _check_strength(self.lambda_a, "lambda_a"))
        object.__setattr__(self, "lambda_b", _check_strength(self.lambda_b, "lambda_b"))

    @property
    def dim(self) -> int:
        return self.state.dim

    @cached_property
    def overlap(self) -> OverlapMatrix:
        return overlap_matrix(self.spec_a, self.spec_b)

    @cached_property
    def amplitudes_in_a(self) -> np.ndarray:
        return self.spec_a.eigenvectors.conj().T @ self.state.amplitudes


@dataclass(frozen=True)
class WeakExpansionReport:
    """Small-strength behavior of the joint density at one point (a, b).

    For lambda_a = lambda_b = lam the density expands as

        P(a, b) = (2/pi) * (lam * L - lam**2 * C) + O(lam**3)

    with L the zeroth-order triple sum (1 for a normalized state) and C
    the curvature coefficient reported here.

    Attributes
    ----------
    c_coefficient : float
        The coefficient C above.
    optimal_lambda : float or None
        Vertex 1/(2*C) of the truncated parabola lam*L - lam**2*C, the
        strength of the strongest joint signal at this point.  None when
        C <= 0 (the truncated form then has no interior maximum).
    leading_density : float
        (2/pi) * L, the coefficient of sqrt(lambda_a*lambda_b) in the
        small-strength density.
    """

    c_coefficient: float
    optimal_lambda: float | None
    leading_density: float


def _amplitudes_in_basis(state: QuantumState, spec: Spectrum) -> np.ndarray:
    if state.dim != spec.dim:
        raise ValueError(f"dimension mismatch: state {state.dim}, spectrum {spec.dim}")
    return spec.eigenvectors.conj().T @ state.amplitudes


def _b_in_a_basis(spec_a: Spectrum, observable_b: Observable) -> np.ndarray:
    if spec_a.dim != observable_b.dim:
        raise ValueError(f"dimension mismatch: spectrum {spec_a.dim}, observable {observable_b.dim}")
    va = spec_a.eigenvectors
    return va.conj().T @ observable_b.matrix @ va


def moment_single(state: QuantumState, spec: Spectrum, lam: float, k: int) -> float:
    """k-th raw moment of a single detector's outcome distribution.

    The mean (k=1) is strength-independent and equals the expectation of
    the observable; the second raw moment (k=2) picks up the pointer
    variance 1/(4*lam) on top of the expectation of the squared
    observable (the outcome density is a mixture of Gaussians with
    variance 1/(4*lam) centered on the eigenvalues).  Only k in {1, 2}
    is defined.
    """
    lam = _check_strength(lam, "lam")
    if k not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {k!r}")
    coeffs = _amplitudes_in_basis(state, spec)
    weights = coeffs.real**2 + coeffs.imag**2
    if k == 1:
        return float(np.sum(spec.eigenvalues * weights))
    return float(np.sum(spec.eigenvalues**2 * weights)) + 1.0 / (4.0 * lam)


def std_single(state: QuantumState, spec: Spectrum, lam: float) -> float:
    """Standard deviation of a single detector's outcome distribution."""
    m1 = moment_single(state, spec, lam, 1)
    m2 = moment_single(state, spec, lam, 2)
    return math.sqrt(m2 - m1 * m1)


def joint_density(setup: SequentialSetup, a: float, b: float) -> float:
    """Joint probability density of reading (a, b) from the two detectors."""
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"outcomes must be finite, got ({a!r}, {b!r})")
    la, lb = setup.lambda_a, setup.lambda_b
    u = setup.overlap.matrix
    c = setup.amplitudes_in_a * np.exp(-la * (a - setup.spec_a.eigenvalues) ** 2)
    h = np.exp(-2.0 * lb * (b - setup.spec_b.eigenvalues) ** 2)
    g = u.conj().T @ (h[:, None] * u)
    pref = math.sqrt(4.0 * la * lb / math.pi**2)
    val = pref * complex(np.vdot(c, g @ c))
    out = _real_part(val, IMAG_TOL * max(1.0, pref), "joint density")
    # quadratic form in a positive semidefinite G; tiny negatives are noise
    return max(out, 0.0)


def joint_density_strong(
    state: QuantumState, spec_a: Spectrum, spec_b: Spectrum, n0: int, m0: int
) -> float:
    """Discrete joint weight of eigenvalue pair (n0, m0) at infinite strength.

    Both detectors projective: the first lands on eigenvector n0 of A with
    Born weight, the second then lands on eigenvector m0 of B with the
    squared overlap.  Index order follows the ascending eigenvalue order
    of each spectrum.
    """
    d = state.dim
    if not (0 <= n0 < d and 0 <= m0 < d):
        raise ValueError(f"indices ({n0}, {m0}) out of range for dimension {d}")
    coeffs = _amplitudes_in_basis(state, spec_a)
    u = overlap_matrix(spec_a, spec_b).matrix
    w_first = coeffs[n0].real ** 2 + coeffs[n0].imag ** 2
    w_second = u[m0, n0].real ** 2 + u[m0, n0].imag ** 2
    return float(w_first * w_second)


def weak_expansion(setup: SequentialSetup, a: float, b: float) -> WeakExpansionReport:
    """Expand the joint density at (a, b) for small equal strengths.

    Returns the curvature coefficient C of the triple sum

        sum_{n, n', m} conj(psi_n') psi_n conj(U[m,n']) U[m,n]
            * [(a - a_n)^2 + (a - a_n')^2 + 2*(b - b_m)^2],

    the vertex 1/(2*C) of the truncated parabola, and the coefficient of
    sqrt(lambda_a*lambda_b) in the density itself.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"outcomes must be finite, got ({a!r}, {b!r})")
    u = setup.overlap.matrix
    psi = setup.amplitudes_in_a
    alpha = (a - setup.spec_a.eigenvalues) ** 2
    beta = (b - setup.spec_b.eigenvalues) ** 2
    m_mat = u.conj().T @ u
    g_beta = u.conj().T @ ((2.0 * beta)[:, None] * u)
    kernel = m_mat * (alpha[None, :] + alpha[:, None]) + g_beta
    c_val = complex(np.vdot(psi, kernel @ psi))
    l_val = complex(np.vdot(psi, m_mat @ psi))
    c_coeff = _real_part(c_val, 1e-10, "expansion coefficient")
    l_coeff = _real_part(l_val, 1e-10, "expansion leading term")
    optimal = 1.0 / (2.0 * c_coeff) if c_coeff > 0.0 else None
    return WeakExpansionReport(
        c_coefficient=c_coeff,
        optimal_lambda=optimal,
        leading_density=(2.0 / math.pi) * l_coeff,
    )


def total_probability(setup: SequentialSetup) -> float:
    """Integral of the joint density over the whole (a, b) plane.

    Carried out in closed form: the b integral contributes
    sqrt(2*lb/pi) * sqrt(pi/(2*lb)) per second-basis component, the a
    integral couples first-basis pairs (n, n') through a Gaussian factor
    exp(-la*(a_n - a_n')^2 / 2).  The result is 1 for any normalized
    setup; it is computed, not asserted, so the identity is testable.
    """
    la, lb = setup.lambda_a, setup.lambda_b
    ea = setup.spec_a.eigenvalues
    psi = setup.amplitudes_in_a
    u = setup.overlap.matrix
    b_factor = math.sqrt(2.0 * lb / math.pi) * math.sqrt(math.pi / (2.0 * lb))
    diffs = ea[:, None] - ea[None, :]
    e_mat = np.exp(-0.5 * la * diffs**2)
    m_mat = u.conj().T @ u
    val = b_factor * complex(np.vdot(psi, (e_mat * m_mat) @ psi))
    return _real_part(val, IMAG_TOL, "total probability")


def mean_a_sequential(setup: SequentialSetup) -> float:
    """Mean of the first pointer in the sequential experiment.

    Equals the plain expectation of A in the input state for every
    strength pair: the later detector cannot shift the earlier record,
    and the Gaussian pointer spread is centered.
    """
    psi = setup.amplitudes_in_a
    weights = psi.real**2 + psi.imag**2
    return float(np.sum(setup.spec_a.eigenvalues * weights))


def mean_b_sequential(
    state: QuantumState, spec_a: Spectrum, spec_b: Spectrum, lambda_a: float
) -> float:
    """Mean of the second pointer after an A measurement of strength lambda_a.

    Evaluates

        sum_{n, n'} exp(-lambda_a*(a_n - a_n')^2 / 2)
            * conj(psi_n') B'[n', n] psi_n

    with B' the second observable written in the first eigenbasis via the
    overlap matrix.  The strength of the second detector drops out of its
    own mean, so no lambda_b argument exists.  As lambda_a grows the
    off-diagonal (n != n') interference terms die and the value flows from
    the undisturbed expectation of B to the dephased strong limit.
    """
    lambda_a = _check_strength(lambda_a, "lambda_a")
    psi = _amplitudes_in_basis(state, spec_a)
    u = overlap_matrix(spec_a, spec_b).matrix
    b_prime = u.conj().T @ (spec_b.eigenvalues[:, None] * u)
    ea = spec_a.eigenvalues
    diffs = ea[:, None] - ea[None, :]
    e_mat = np.exp(-0.5 * lambda_a * diffs**2)
    val = complex(np.vdot(psi, (e_mat * b_prime) @ psi))
    return _real_part(val, 1e-10, "sequential mean of second pointer")


def mean_b_strong_limit(
    state: QuantumState, spec_a: Spectrum, observable_b: Observable
) -> float:
    """Mean of the second pointer after a fully projective first measurement.

    The first detector dephases the state in its eigenbasis, leaving
    sum_n |<a_n|psi>|^2 <a_n|B|a_n>.
    """
    psi = _amplitudes_in_basis(state, spec_a)
    weights = psi.real**2 + psi.imag**2
    b_prime = _b_in_a_basis(spec_a, observable_b)
    diag = np.real(np.diagonal(b_prime))
    return float(np.sum(weights * diag))


def weak_slope(state: QuantumState, spec_a: Spectrum, observable_b: Observable) -> float:
    """Leading-order drift of the second mean as the first detector turns on.

    mean_b_sequential(lam) = <B> + lam * slope + O(lam^2), with

        slope = (1/2) * sum_n <psi| [B, A^2] + 2 a_n [A, B] |a_n><a_n|psi>

    assembled from commutators in the first eigenbasis.  The two
    commutator pieces are separately non-real; their imaginary parts
    cancel exactly and the residue is asserted away.  Vanishes whenever
    the observables commute.
    """
    psi = _amplitudes_in_basis(state, spec_a)
    b_prime = _b_in_a_basis(spec_a, observable_b)
    ea = spec_a.eigenvalues
    ea2 = ea**2
    comm_ba2 = b_prime * ea2[None, :] - ea2[:, None] * b_prime
    comm_ab = ea[:, None] * b_prime - b_prime * ea[None, :]
    val = 0.5 * (
        complex(np.vdot(psi, comm_ba2 @ psi))
        + 2.0 * complex(np.vdot(psi, comm_ab @ (ea * psi)))
    )
    scale = max(1.0, float(np.max(np.abs(b_prime))) * float(np.max(ea2)) if ea2.size else 1.0)
    return _real_part(val, 1e-10 * scale, "weak-strength slope")


def condition4_check(spec_a: Spectrum, observable_b: Observable, lambda_a: float) -> np.ndarray:
    """Per-eigenvector size of the terms the strong-limit formula discards.

    For each first-basis index n this returns the Euclidean norm of the
    vector with components

        (exp(-lambda_a*(a_n - a_k)^2 / 2) - 1) * B'[k, n].

    All norms are zero exactly when B is diagonal in the first eigenbasis;
    otherwise they measure how far the finite-strength mean can sit from
    the strong limit at this lambda_a.
    """
    lambda_a = _check_strength(lambda_a, "lambda_a")
    b_prime = _b_in_a_basis(spec_a, observable_b)
    ea = spec_a.eigenvalues
    diffs = ea[None, :] - ea[:, None]
    factors = np.expm1(-0.5 * lambda_a * diffs**2)
    return np.linalg.norm(factors * b_prime, axis=0)
