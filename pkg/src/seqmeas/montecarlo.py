"""Monte Carlo simulation of the two-detector experiment.

Sampling is exact, not approximate: the first pointer value is drawn
from its Gaussian-mixture marginal, the state is collapsed by the
corresponding measurement operator, and the second pointer value is
drawn from the resulting mixture.  No discretization, burn-in, or
rejection is involved.

Reproducibility contract: a run is identified by (setup, seed) alone.
Sample i consumes counter block ``start + i`` of a Philox stream, so
results are independent of chunking and thread count; block statistics
are always merged in block order.  Two kernels implement the identical
arithmetic: a compiled one (preferred) and a pure-numpy fallback, with
bit-for-bit equal output.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import _sampler_np
from .analytic import SequentialSetup
from .core import QuantumState, Spectrum
from .kraus import KrausParams, collapse

try:
    from . import _sampler_cy
except ImportError:
    _sampler_cy = None

__all__ = [
    "OutcomeSample",
    "RunStatistics",
    "RunningTotals",
    "sampler_backend",
    "sample_first",
    "sample_pair",
    "sample_arrays",
    "run_experiment",
]

BLOCK = 65536
TWO_NEG53 = 1.0 / 9007199254740992.0

_env = os.environ.get("SEQMEAS_BACKEND", "").strip().lower()
if _env == "python":
    _ACTIVE = "python"
elif _env == "compiled":
    if _sampler_cy is None:
        raise ImportError("SEQMEAS_BACKEND=compiled but the compiled sampler is not built")
    _ACTIVE = "compiled"
elif _env == "":
    _ACTIVE = "compiled" if _sampler_cy is not None else "python"
else:
    raise ImportError(f"SEQMEAS_BACKEND must be 'python' or 'compiled', got {_env!r}")


def sampler_backend() -> str:
    """Name of the kernel in use: 'compiled' or 'python'."""
    return _ACTIVE


@dataclass(frozen=True)
class OutcomeSample:
    """One (first pointer, second pointer) reading."""

    a: float
    b: float


@dataclass(frozen=True)
class RunStatistics:
    """Summary of one Monte Carlo run.

    Standard errors are sample standard deviations divided by
    sqrt(n_samples); they vanish for a single-sample run.
    """

    n_samples: int
    mean_a: float
    mean_b: float
    mean_a2: float
    mean_b2: float
    stderr_a: float
    stderr_b: float
    seed: int


@dataclass(frozen=True)
class _SamplerPlan:
    eigs_a: np.ndarray
    psi_re: np.ndarray
    psi_im: np.ndarray
    wa_cum: np.ndarray
    u_re: np.ndarray
    u_im: np.ndarray
    eigs_b: np.ndarray
    neg_lam_a: float
    sigma_a: float
    sigma_b: float


def _make_plan(setup: SequentialSetup) -> _SamplerPlan:
    psi = setup.amplitudes_in_a
    weights = psi.real**2 + psi.imag**2
    u = setup.overlap.matrix
    return _SamplerPlan(
        eigs_a=np.array(setup.spec_a.eigenvalues, dtype=np.float64),
        psi_re=np.ascontiguousarray(psi.real),
        psi_im=np.ascontiguousarray(psi.imag),
        wa_cum=np.cumsum(weights),
        u_re=np.ascontiguousarray(u.real),
        u_im=np.ascontiguousarray(u.imag),
        eigs_b=np.array(setup.spec_b.eigenvalues, dtype=np.float64),
        neg_lam_a=-setup.lambda_a,
        sigma_a=0.5 / math.sqrt(setup.lambda_a),
        sigma_b=0.5 / math.sqrt(setup.lambda_b),
    )


def _kernel_sample_block(plan: _SamplerPlan, seed: int, start: int, count: int, backend: str):
    if backend == "compiled":
        return _sampler_cy.sample_block(
            plan.eigs_a, plan.psi_re, plan.psi_im, plan.wa_cum,
            plan.u_re, plan.u_im, plan.eigs_b,
            plan.neg_lam_a, plan.sigma_a, plan.sigma_b,
            seed, start, count,
        )
    return _sampler_np.sample_block(plan, seed, start, count)


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def _check_counts(n_samples, threads) -> tuple[int, int]:
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return n_samples, threads


class RunningTotals:
    """Order-stable accumulator for pointer sums across sample blocks.

    Per-block reductions use numpy's pairwise sums; blocks are then
    absorbed in block order through compensated (Neumaier) addition, so
    any thread count yields the same totals and merging is associative
    to well below statistical resolution.
    """

    __slots__ = ("count", "_sums", "_comps")

    def __init__(self):
        self.count = 0
        self._sums = [0.0, 0.0, 0.0, 0.0]
        self._comps = [0.0, 0.0, 0.0, 0.0]

    def _absorb(self, k: int, x: float) -> None:
        s = self._sums[k]
        t = s + x
        if abs(s) >= abs(x):
            self._comps[k] += (s - t) + x
        else:
            self._comps[k] += (x - t) + s
        self._sums[k] = t

    def add_block(self, a: np.ndarray, b: np.ndarray) -> None:
        if a.size != b.size:
            raise ValueError("pointer arrays must have equal length")
        self.count += a.size
        for k, val in enumerate((np.sum(a), np.sum(a * a), np.sum(b), np.sum(b * b))):
            self._absorb(k, float(val))

    def merge(self, other: "RunningTotals") -> None:
        self.count += other.count
        for k in range(4):
            self._absorb(k, other._sums[k])
            self._absorb(k, other._comps[k])

    def totals(self) -> tuple[float, float, float, float]:
        return tuple(self._sums[k] + self._comps[k] for k in range(4))

    def finalize(self, seed: int) -> RunStatistics:
        n = self.count
        if n < 1:
            raise ValueError("no samples accumulated")
        sa, sa2, sb, sb2 = self.totals()
        mean_a = sa / n
        mean_b = sb / n
        mean_a2 = sa2 / n
        mean_b2 = sb2 / n
        if n > 1:
            var_a = max(sa2 - sa * sa / n, 0.0) / (n - 1)
            var_b = max(sb2 - sb * sb / n, 0.0) / (n - 1)
        else:
            var_a = var_b = 0.0
        return RunStatistics(
            n_samples=n,
            mean_a=mean_a,
            mean_b=mean_b,
            mean_a2=mean_a2,
            mean_b2=mean_b2,
            stderr_a=math.sqrt(var_a / n),
            stderr_b=math.sqrt(var_b / n),
            seed=seed,
        )


def _blocks(n_samples: int) -> list[tuple[int, int]]:
    return [(start, min(BLOCK, n_samples - start)) for start in range(0, n_samples, BLOCK)]


def run_experiment(
    setup: SequentialSetup, n_samples: int, seed: int, threads: int = 1, backend: str | None = None
) -> RunStatistics:
    """Sample the experiment ``n_samples`` times and summarize the pointers.

    Parameters
    ----------
    setup : SequentialSetup
    n_samples : int
        Number of (a, b) pairs, >= 1.
    seed : int
        Stream identifier in [0, 2**64).  Same (setup, n_samples, seed)
        means same result, to the last bit, for any ``threads``.
    threads : int, optional
        Worker threads for block generation.
    backend : str, optional
        Force 'python' or 'compiled'; default is the active backend.

    Returns
    -------
    RunStatistics
    """
    n_samples, threads = _check_counts(n_samples, threads)
    seed = _check_seed(seed)
    which = _resolve_backend(backend)
    plan = _make_plan(setup)

    def block_totals(block: tuple[int, int]) -> RunningTotals:
        start, count = block
        a, b = _kernel_sample_block(plan, seed, start, count, which)
        part = RunningTotals()
        part.add_block(a, b)
        return part

    total = RunningTotals()
    blocks = _blocks(n_samples)
    if threads == 1:
        parts = map(block_totals, blocks)
        for part in parts:
            total.merge(part)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(block_totals, blocks):
                total.merge(part)
    return total.finalize(seed)


def sample_arrays(
    setup: SequentialSetup, n_samples: int, seed: int, threads: int = 1, backend: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """All pointer pairs of a run as two arrays (same stream as run_experiment)."""
    n_samples, threads = _check_counts(n_samples, threads)
    seed = _check_seed(seed)
    which = _resolve_backend(backend)
    plan = _make_plan(setup)
    a_out = np.empty(n_samples)
    b_out = np.empty(n_samples)

    def fill(block: tuple[int, int]) -> None:
        start, count = block
        a, b = _kernel_sample_block(plan, seed, start, count, which)
        a_out[start : start + count] = a
        b_out[start : start + count] = b

    blocks = _blocks(n_samples)
    if threads == 1:
        for blk in blocks:
            fill(blk)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, blocks))
    return a_out, b_out


def _resolve_backend(backend: str | None) -> str:
    if backend is None:
        return _ACTIVE
    if backend not in ("python", "compiled"):
        raise ValueError(f"backend must be 'python' or 'compiled', got {backend!r}")
    if backend == "compiled" and _sampler_cy is None:
        raise ValueError("compiled sampler is not built")
    return backend


def _uniform_open(rng: np.random.Generator, size=None):
    """Uniforms strictly inside (0, 1), safe to feed the inverse normal."""
    ints = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (ints + 0.5) * TWO_NEG53


def _draw_component(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    t = float(_uniform_open(rng)) * cum[-1]
    j = int(np.searchsorted(cum, t, side="right"))
    return min(j, weights.size - 1)


def sample_first(
    state: QuantumState, spec: Spectrum, lam: float, rng: np.random.Generator
) -> tuple[float, QuantumState]:
    """Draw one first-pointer value and the matching collapsed state.

    The outcome is an eigenvalue plus Gaussian pointer noise of standard
    deviation 1/(2*sqrt(lam)); the returned state is the normalized
    post-measurement state for that outcome.
    """
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"strength must be positive and finite, got {lam!r}")
    coeffs = spec.eigenvectors.conj().T @ state.amplitudes
    weights = coeffs.real**2 + coeffs.imag**2
    j = _draw_component(weights, rng)
    sigma = 0.5 / math.sqrt(lam)
    a = float(spec.eigenvalues[j] + sigma * ndtri(float(_uniform_open(rng))))
    collapsed, _ = collapse(state, spec, KrausParams(lam=lam, outcome=a))
    return a, collapsed


def sample_pair(setup: SequentialSetup, rng: np.random.Generator) -> OutcomeSample:
    """Draw one (a, b) pair by running the two detectors in sequence."""
    a, collapsed = sample_first(setup.state, setup.spec_a, setup.lambda_a, rng)
    coeffs = setup.spec_b.eigenvectors.conj().T @ collapsed.amplitudes
    weights = coeffs.real**2 + coeffs.imag**2
    m = _draw_component(weights, rng)
    sigma = 0.5 / math.sqrt(setup.lambda_b)
    b = float(setup.spec_b.eigenvalues[m] + sigma * ndtri(float(_uniform_open(rng))))
    return OutcomeSample(a=a, b=b)
