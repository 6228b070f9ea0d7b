"""Canonical systems for experiments and regression baselines.

Three families are provided: a qubit with maximally non-commuting
observables, a commuting pair (second observable a polynomial of the
first), and a discretized particle on a grid where position and the
central-difference momentum play the two roles.  The grid family also
powers a refinement study showing how discretization artifacts in the
weak-measurement slope wash out as the spacing shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import weak_slope
from .core import Observable, QuantumState, spectral_decompose

__all__ = [
    "ScenarioSpec",
    "WashoutRow",
    "build_scenario",
    "momentum_operator",
    "washout_study",
]

KINDS = ("qubit", "commuting", "sinc_grid")
MIN_WASHOUT_POINTS = 51


@dataclass(frozen=True)
class ScenarioSpec:
    """A named system family plus its kind-specific parameters.

    kind 'qubit': parameters ``theta`` (default pi/2) and ``phi``
    (default 0) give the input state cos(theta/2)|0> + e^{i phi}
    sin(theta/2)|1>; the observables are diag(1, -1) and the symmetric
    bit flip.

    kind 'commuting': ``eigenvalues`` (default [-1, 0, 2]) defines the
    first observable as a diagonal matrix, ``coeffs`` (ascending
    polynomial coefficients, default [0, 0, 1] i.e. the square) defines
    the second from it, ``amplitudes`` optionally fixes the input state
    (default uniform superposition).

    kind 'sinc_grid': ``n_points`` (odd, default 201), ``delta_x``
    (default 0.1), ``hbar`` (default 1), ``width`` (default
    5*delta_x), ``center`` (default 0), ``momentum_boost`` (default 0)
    build a position grid x_n = center offset by n*delta_x, a Gaussian
    wavepacket exp(-(x - center)^2/(4 width^2) + i boost x), and the
    central-difference momentum operator.
    """

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}, expected one of {KINDS}")
        if not isinstance(self.parameters, dict):
            raise ValueError("parameters must be a mapping")


@dataclass(frozen=True)
class WashoutRow:
    """One refinement level of the grid study."""

    delta_x: float
    n_points: int
    slope_p: float
    slope_p2: float


def _get_number(params: dict, key: str, default: float, kind: str) -> float:
    val = params.get(key, default)
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ValueError(f"{kind} parameter {key!r} must be a real number, got {val!r}") from None
    if not math.isfinite(val):
        raise ValueError(f"{kind} parameter {key!r} must be finite, got {val!r}")
    return val


def _reject_unknown(params: dict, allowed: tuple, kind: str) -> None:
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"unknown {kind} parameters: {sorted(unknown)}; allowed: {sorted(allowed)}")


def momentum_operator(n_points: int, delta_x: float, hbar: float = 1.0) -> Observable:
    """Central-difference momentum on a uniform grid.

    Antisymmetric stencil (-i*hbar/(2*delta_x)) * (delta_{k,n+1} -
    delta_{k,n-1}); Hermitian, with spectrum inside
    (-hbar/delta_x, hbar/delta_x).
    """
    if n_points < 2:
        raise ValueError(f"need at least 2 grid points, got {n_points}")
    if delta_x <= 0:
        raise ValueError(f"grid spacing must be positive, got {delta_x}")
    coef = hbar / (2.0 * delta_x)
    mat = np.zeros((n_points, n_points), dtype=np.complex128)
    idx = np.arange(n_points - 1)
    mat[idx, idx + 1] = -1j * coef
    mat[idx + 1, idx] = 1j * coef
    return Observable(matrix=mat)


def _build_qubit(params: dict):
    _reject_unknown(params, ("theta", "phi"), "qubit")
    theta = _get_number(params, "theta", math.pi / 2.0, "qubit")
    phi = _get_number(params, "phi", 0.0, "qubit")
    state = QuantumState(
        np.array([math.cos(theta / 2.0), math.sin(theta / 2.0) * np.exp(1j * phi)])
    )
    obs_a = Observable(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128))
    obs_b = Observable(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128))
    return state, obs_a, obs_b


def _build_commuting(params: dict):
    _reject_unknown(params, ("eigenvalues", "coeffs", "amplitudes"), "commuting")
    eigs = np.array(params.get("eigenvalues", [-1.0, 0.0, 2.0]), dtype=np.float64)
    if eigs.ndim != 1 or eigs.size < 2:
        raise ValueError("commuting parameter 'eigenvalues' must be a vector of length >= 2")
    if not np.all(np.isfinite(eigs)):
        raise ValueError("commuting parameter 'eigenvalues' must be finite")
    coeffs = np.array(params.get("coeffs", [0.0, 0.0, 1.0]), dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size < 1 or not np.all(np.isfinite(coeffs)):
        raise ValueError("commuting parameter 'coeffs' must be a non-empty finite vector")
    amps = params.get("amplitudes")
    if amps is None:
        state = QuantumState.from_unnormalized(np.ones(eigs.size, dtype=np.complex128))
    else:
        amps = np.array(amps, dtype=np.complex128)
        if amps.shape != (eigs.size,):
            raise ValueError(
                f"commuting parameter 'amplitudes' must have length {eigs.size}, got shape {amps.shape}"
            )
        state = QuantumState(amps)
    b_diag = np.polynomial.polynomial.polyval(eigs, coeffs)
    obs_a = Observable(np.diag(eigs).astype(np.complex128))
    obs_b = Observable(np.diag(b_diag).astype(np.complex128))
    return state, obs_a, obs_b


def _build_sinc_grid(params: dict):
    allowed = ("n_points", "delta_x", "hbar", "width", "center", "momentum_boost")
    _reject_unknown(params, allowed, "sinc_grid")
    n_points = params.get("n_points", 201)
    if not isinstance(n_points, (int, np.integer)) or isinstance(n_points, bool):
        raise ValueError(f"sinc_grid parameter 'n_points' must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError(f"sinc_grid parameter 'n_points' must be odd and >= 3, got {n_points}")
    delta_x = _get_number(params, "delta_x", 0.1, "sinc_grid")
    if delta_x <= 0:
        raise ValueError(f"sinc_grid parameter 'delta_x' must be positive, got {delta_x}")
    hbar = _get_number(params, "hbar", 1.0, "sinc_grid")
    if hbar <= 0:
        raise ValueError(f"sinc_grid parameter 'hbar' must be positive, got {hbar}")
    width = _get_number(params, "width", 5.0 * delta_x, "sinc_grid")
    if width <= 0:
        raise ValueError(f"sinc_grid parameter 'width' must be positive, got {width}")
    center = _get_number(params, "center", 0.0, "sinc_grid")
    boost = _get_number(params, "momentum_boost", 0.0, "sinc_grid")

    half = (n_points - 1) // 2
    x = center + delta_x * np.arange(-half, half + 1, dtype=np.float64)
    envelope = np.exp(-((x - center) ** 2) / (4.0 * width**2))
    state = QuantumState.from_unnormalized(envelope * np.exp(1j * boost * x / hbar))
    obs_a = Observable(np.diag(x).astype(np.complex128))
    obs_b = momentum_operator(n_points, delta_x, hbar)
    return state, obs_a, obs_b


def build_scenario(spec: ScenarioSpec):
    """Construct (state, first observable, second observable) for a spec."""
    if spec.kind == "qubit":
        return _build_qubit(spec.parameters)
    if spec.kind == "commuting":
        return _build_commuting(spec.parameters)
    return _build_sinc_grid(spec.parameters)


def washout_study(
    grid_sizes,
    base_delta_x: float,
    width: float | None = None,
    momentum_boost: float = 0.5,
    hbar: float = 1.0,
) -> list[WashoutRow]:
    """Weak-measurement slopes for momentum and its square under refinement.

    Level i uses spacing ``base_delta_x / 2**i`` with ``grid_sizes[i]``
    points, holding the wavepacket's physical width (default
    ``5 * base_delta_x``) and momentum boost fixed.  On the grid the
    slope for the momentum observable is -(delta_x**2 / 2) * <p>, an
    artifact of discretization, so successive rows shrink it by about 4;
    the slope for momentum squared converges to the spacing-independent
    value -hbar**2 * <psi'|psi'>-like limit instead.  A later row must
    also hold more points so the enlarged packet-to-boundary distance
    keeps boundary effects negligible.

    Parameters
    ----------
    grid_sizes : sequence of int
        Points per level, each odd and >= 51.
    base_delta_x : float
        Spacing of the first level.
    width, momentum_boost, hbar : float, optional
        Wavepacket width (physical units), boost, and hbar.

    Returns
    -------
    list of WashoutRow
    """
    sizes = list(grid_sizes)
    if len(sizes) < 1:
        raise ValueError("need at least one grid size")
    base_delta_x = float(base_delta_x)
    if not math.isfinite(base_delta_x) or base_delta_x <= 0:
        raise ValueError(f"base_delta_x must be positive, got {base_delta_x!r}")
    if width is None:
        width = 5.0 * base_delta_x
    rows = []
    for level, n_points in enumerate(sizes):
        if not isinstance(n_points, (int, np.integer)) or n_points < MIN_WASHOUT_POINTS:
            raise ValueError(
                f"grid size {n_points!r} too small for the study, need >= {MIN_WASHOUT_POINTS} points"
            )
        delta_x = base_delta_x / 2**level
        spec = ScenarioSpec(
            kind="sinc_grid",
            parameters={
                "n_points": int(n_points),
                "delta_x": delta_x,
                "hbar": hbar,
                "width": width,
                "momentum_boost": momentum_boost,
            },
        )
        state, obs_a, obs_b = build_scenario(spec)
        spec_a = spectral_decompose(obs_a)
        p_mat = obs_b.matrix
        obs_b2 = Observable(p_mat @ p_mat)
        rows.append(
            WashoutRow(
                delta_x=delta_x,
                n_points=int(n_points),
                slope_p=weak_slope(state, spec_a, obs_b),
                slope_p2=weak_slope(state, spec_a, obs_b2),
            )
        )
    return rows
