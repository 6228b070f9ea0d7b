"""Linear-algebra substrate shared by every other module.

States are unit vectors in C^d, observables are Hermitian matrices, and a
Spectrum bundles an observable's eigenvalues with a deterministically
phase-fixed orthonormal eigenbasis.  Everything downstream (Kraus maps,
closed-form moments, samplers) is written against these three containers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuantumState",
    "Observable",
    "Spectrum",
    "OverlapMatrix",
    "spectral_decompose",
    "overlap_matrix",
    "expectation",
]

NORM_TOL = 1e-12
HERMITICITY_RTOL = 1e-12
ORTHONORMALITY_TOL = 1e-10
DEGENERACY_TOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuantumState:
    """Pure state of a d-level system.

    Parameters
    ----------
    amplitudes : array_like
        Complex vector of length d >= 2 with unit Euclidean norm
        (enforced to within 1e-12).

    Raises
    ------
    ValueError
        If the vector is not one-dimensional, has fewer than two entries,
        contains non-finite values, or is not normalized.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError(f"state must be a 1-d vector, got shape {arr.shape}")
        if arr.size < 2:
            raise ValueError(f"state dimension must be >= 2, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("state amplitudes must be finite")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm is {norm!r}, must equal 1 within {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _readonly(arr))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_unnormalized(cls, values) -> "QuantumState":
        """Normalize ``values`` and wrap the result.

        Raises
        ------
        ValueError
            If the vector has (near-)zero norm.
        """
        arr = np.array(values, dtype=np.complex128)
        norm = np.linalg.norm(arr)
        if not np.isfinite(norm) or norm < 1e-150:
            raise ValueError("cannot normalize a vector with vanishing norm")
        return cls(arr / norm)


@dataclass(frozen=True)
class Observable:
    """Hermitian operator on a d-level system.

    The matrix must be square with d >= 2 and Hermitian to within a
    relative tolerance of 1e-12 (measured against its largest entry).
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"observable must be a square matrix, got shape {mat.shape}")
        if mat.shape[0] < 2:
            raise ValueError(f"observable dimension must be >= 2, got {mat.shape[0]}")
        if not np.all(np.isfinite(mat.view(np.float64))):
            raise ValueError("observable entries must be finite")
        scale = float(np.max(np.abs(mat)))
        asym = float(np.max(np.abs(mat - mat.conj().T)))
        if asym > HERMITICITY_RTOL * max(scale, 1.0):
            raise ValueError(
                f"matrix is not Hermitian: max |H - H^dag| = {asym:.3e} "
                f"exceeds {HERMITICITY_RTOL} * max(|H|, 1) = {HERMITICITY_RTOL * max(scale, 1.0):.3e}"
            )
        object.__setattr__(self, "matrix", _readonly(mat))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of an observable.

    Attributes
    ----------
    eigenvalues : ndarray
        Real eigenvalues in ascending order, shape (d,).
    eigenvectors : ndarray
        Unitary matrix whose column n is the eigenvector for
        ``eigenvalues[n]``, phase-fixed so that each column's
        largest-magnitude component is real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=np.float64)
        vecs = np.array(self.eigenvectors, dtype=np.complex128)
        if vals.ndim != 1 or vecs.ndim != 2:
            raise ValueError("spectrum needs a vector of eigenvalues and a matrix of eigenvectors")
        d = vals.size
        if vecs.shape != (d, d):
            raise ValueError(f"eigenvector matrix shape {vecs.shape} does not match {d} eigenvalues")
        if np.any(np.diff(vals) < 0):
            raise ValueError("eigenvalues must be in ascending order")
        gram = vecs.conj().T @ vecs
        defect = float(np.max(np.abs(gram - np.eye(d))))
        if defect > ORTHONORMALITY_TOL:
            raise ValueError(f"eigenbasis is not orthonormal: max |V^dag V - I| = {defect:.3e}")
        object.__setattr__(self, "eigenvalues", _readonly(vals))
        object.__setattr__(self, "eigenvectors", _readonly(vecs))

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class OverlapMatrix:
    """Unitary basis-change matrix between two eigenbases.

    Entry [m, n] is the inner product of eigenvector m of the second
    spectrum with eigenvector n of the first.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"overlap matrix must be square, got shape {mat.shape}")
        d = mat.shape[0]
        defect = float(np.max(np.abs(mat.conj().T @ mat - np.eye(d))))
        if defect > ORTHONORMALITY_TOL:
            raise ValueError(f"overlap matrix is not unitary: max |U^dag U - I| = {defect:.3e}")
        object.__setattr__(self, "matrix", _readonly(mat))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-|.| component is real positive.

    Ties on magnitude resolve to the lowest index, so the convention is
    deterministic for any input.
    """
    out = vecs.copy()
    for n in range(out.shape[1]):
        col = out[:, n]
        k = int(np.argmax(np.abs(col)))
        pivot = col[k]
        mag = abs(pivot)
        if mag > 0.0:
            col *= pivot.conjugate() / mag
        # zero column cannot occur for a unitary input; leave untouched
    return out


def _orthonormalize_block(block: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt over the columns, in index order."""
    out = block.copy()
    for j in range(out.shape[1]):
        for i in range(j):
            out[:, j] -= np.vdot(out[:, i], out[:, j]) * out[:, i]
        out[:, j] /= np.linalg.norm(out[:, j])
    return out


def spectral_decompose(observable: Observable, tol: float = DEGENERACY_TOL) -> Spectrum:
    """Diagonalize a Hermitian observable with a reproducible basis choice.

    Eigenvalues come out ascending.  Eigenvalues closer than
    ``tol * max(spectral_range, 1)`` are treated as one degenerate
    cluster whose eigenvectors are re-orthonormalized by modified
    Gram-Schmidt in index order before phase fixing; the arbitrary
    rotation freedom inside a cluster is thereby pinned down.

    Parameters
    ----------
    observable : Observable
    tol : float, optional
        Relative degeneracy threshold.

    Returns
    -------
    Spectrum
    """
    if not isinstance(observable, Observable):
        observable = Observable(observable)
    vals, vecs = np.linalg.eigh(observable.matrix)
    spread = float(vals[-1] - vals[0])
    thr = tol * max(spread, 1.0)
    d = vals.size
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and vals[stop] - vals[stop - 1] <= thr:
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop] = _orthonormalize_block(vecs[:, start:stop])
        start = stop
    vecs = _fix_phases(vecs)
    return Spectrum(eigenvalues=vals, eigenvectors=vecs)


def overlap_matrix(spec_a: Spectrum, spec_b: Spectrum) -> OverlapMatrix:
    """Basis-change matrix from the first eigenbasis to the second.

    Entry [m, n] = <second basis vector m | first basis vector n>.
    Both spectra must share one dimension.
    """
    if spec_a.dim != spec_b.dim:
        raise ValueError(f"dimension mismatch: {spec_a.dim} vs {spec_b.dim}")
    mat = spec_b.eigenvectors.conj().T @ spec_a.eigenvectors
    return OverlapMatrix(matrix=mat)


def expectation(state: QuantumState, observable: Observable) -> float:
    """Expectation value of an observable in a pure state.

    The quadratic form psi^dag H psi is evaluated in complex arithmetic;
    its imaginary residue must stay below 1e-12 (relative to the value's
    magnitude for large values) and is then discarded.
    """
    if state.dim != observable.dim:
        raise ValueError(f"dimension mismatch: state {state.dim}, observable {observable.dim}")
    val = complex(np.vdot(state.amplitudes, observable.matrix @ state.amplitudes))
    limit = 1e-12 * max(1.0, abs(val))
    if abs(val.imag) > limit:
        raise AssertionError(f"imaginary residue {val.imag:.3e} exceeds {limit:.3e}")
    return float(val.real)
