"""Gaussian measurement layer.

A detector of strength ``lam`` that reads pointer value ``a`` acts on a
state through the operator

    (2*lam/pi)**(1/4) * exp(-lam * (a - A)**2)

where A is the measured observable.  Large ``lam`` approaches an ideal
projective measurement, small ``lam`` barely disturbs the state.  The
outcome density for a single detector is the squared norm of the
transformed state, a mixture of Gaussians of width 1/(2*sqrt(lam))
centered on the eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import QuantumState, Spectrum

__all__ = ["KrausParams", "kraus_apply", "outcome_density", "collapse"]

DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class KrausParams:
    """Strength and pointer outcome of one Gaussian detector.

    ``lam`` must be a positive finite real; ``outcome`` any finite real.
    """

    lam: float
    outcome: float

    def __post_init__(self):
        lam = float(self.lam)
        outcome = float(self.outcome)
        if not math.isfinite(lam) or lam <= 0.0:
            raise ValueError(f"strength must be positive and finite, got {self.lam!r}")
        if not math.isfinite(outcome):
            raise ValueError(f"outcome must be finite, got {self.outcome!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "outcome", outcome)


def _amplitudes_in_basis(state: QuantumState, spec: Spectrum) -> np.ndarray:
    if state.dim != spec.dim:
        raise ValueError(f"dimension mismatch: state {state.dim}, spectrum {spec.dim}")
    return spec.eigenvectors.conj().T @ state.amplitudes


def kraus_apply(state: QuantumState, spec: Spectrum, params: KrausParams) -> np.ndarray:
    """Apply the measurement operator without normalizing.

    Returns
    -------
    ndarray
        The transformed amplitude vector in the original (input) basis.
        Its squared norm equals ``outcome_density`` at the same point, so
        the norm never exceeds ``(2*lam/pi)**0.25``.
    """
    coeffs = _amplitudes_in_basis(state, spec)
    damp = np.exp(-params.lam * (params.outcome - spec.eigenvalues) ** 2)
    pref = (2.0 * params.lam / math.pi) ** 0.25
    return pref * (spec.eigenvectors @ (damp * coeffs))


def outcome_density(state: QuantumState, spec: Spectrum, lam: float, a: float) -> float:
    """Probability density of reading pointer value ``a``.

    Equals sqrt(2*lam/pi) * sum_n |<n|psi>|^2 * exp(-2*lam*(a - a_n)^2),
    evaluated with a shifted exponent so large strengths do not underflow
    near the support.  Values whose true magnitude lies below the double
    range come out as 0.0.
    """
    params = KrausParams(lam=lam, outcome=a)
    coeffs = _amplitudes_in_basis(state, spec)
    weights = coeffs.real**2 + coeffs.imag**2
    exponents = -2.0 * params.lam * (params.outcome - spec.eigenvalues) ** 2
    shift = float(exponents.max())
    body = float(np.sum(np.exp(exponents - shift) * weights))
    return math.sqrt(2.0 * params.lam / math.pi) * math.exp(shift) * body


def collapse(state: QuantumState, spec: Spectrum, params: KrausParams) -> tuple[QuantumState, float]:
    """Post-measurement state and the norm of the unnormalized update.

    The returned norm satisfies norm**2 == outcome_density at the same
    (lam, a).  Outcomes so deep in the tail that the density falls below
    1e-300 are rejected: the collapse direction is numerically void there.

    Raises
    ------
    ValueError
        If the outcome lies in the exponentially suppressed tail.
    """
    coeffs = _amplitudes_in_basis(state, spec)
    exponents = -params.lam * (params.outcome - spec.eigenvalues) ** 2
    shift = float(exponents.max())
    damped = np.exp(exponents - shift) * coeffs
    body = float(np.linalg.norm(damped))
    pref = (2.0 * params.lam / math.pi) ** 0.25
    norm = pref * math.exp(shift) * body
    if not norm**2 > DENSITY_FLOOR:
        raise ValueError(
            f"outcome {params.outcome!r} lies in an exponentially suppressed tail "
            f"(density <= {DENSITY_FLOOR})"
        )
    collapsed = QuantumState(spec.eigenvectors @ (damped / body))
    return collapsed, norm
