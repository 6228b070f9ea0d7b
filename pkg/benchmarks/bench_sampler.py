"""Throughput comparison of the two sampling kernels.

Times sample_arrays for the compiled kernel and the pure-numpy fallback
over a range of system dimensions, printing samples per second and the
speedup.  Both kernels draw from the same counter-based stream, so the
work per sample is identical by construction.

Usage:
    python benchmarks/bench_sampler.py [--samples N] [--dims 2,4,8,16]
                                       [--threads T] [--repeats R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from seqmeas.analytic import SequentialSetup
from seqmeas.core import QuantumState, spectral_decompose
from seqmeas.montecarlo import sample_arrays, sampler_backend


def random_setup(rng: np.random.Generator, dim: int) -> SequentialSetup:
    def hermitian():
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return (m + m.conj().T) / 2.0

    from seqmeas.core import Observable

    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    state = QuantumState(vec / np.linalg.norm(vec))
    return SequentialSetup(
        state=state,
        spec_a=spectral_decompose(Observable(hermitian())),
        spec_b=spectral_decompose(Observable(hermitian())),
        lambda_a=1.0,
        lambda_b=1.0,
    )


def best_rate(setup, n, threads, backend, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        sample_arrays(setup, n, seed=1, threads=threads, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return n / best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--dims", default="2,4,8,16",
                        help="comma-separated system dimensions")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats; best run counts")
    args = parser.parse_args()
    dims = [int(d) for d in args.dims.split(",")]

    backends = ["python"]
    if sampler_backend() == "compiled":
        backends.insert(0, "compiled")
    else:
        print("note: compiled kernel not built, timing the fallback only")

    rng = np.random.default_rng(0)
    setups = {d: random_setup(rng, d) for d in dims}
    for d in dims:  # warm up caches and lazy imports before timing
        for backend in backends:
            sample_arrays(setups[d], 1000, seed=0, backend=backend)

    header = f"{'dim':>4}  " + "".join(f"{b + ' (samples/s)':>22}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for d in dims:
        rates = [best_rate(setups[d], args.samples, args.threads, b, args.repeats)
                 for b in backends]
        line = f"{d:>4}  " + "".join(f"{r:>22,.0f}" for r in rates)
        if len(rates) == 2:
            line += f"{rates[0] / rates[1]:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
