"""Two successive Gaussian-pointer quantum measurements.

A first detector of strength lambda_a reads observable A, a second of
strength lambda_b then reads observable B.  The package provides the
exact joint outcome density and its moments (analytic), the measurement
operators themselves (kraus), a bit-reproducible Monte Carlo sampler
with a compiled kernel and a pure-numpy fallback (montecarlo), canonical
example systems (scenarios), and a command-line front end (cli).
"""

from .analytic import (
    SequentialSetup,
    WeakExpansionReport,
    condition4_check,
    joint_density,
    joint_density_strong,
    mean_a_sequential,
    mean_b_sequential,
    mean_b_strong_limit,
    moment_single,
    std_single,
    total_probability,
    weak_expansion,
    weak_slope,
)
from .core import (
    Observable,
    OverlapMatrix,
    QuantumState,
    Spectrum,
    expectation,
    overlap_matrix,
    spectral_decompose,
)
from .kraus import KrausParams, collapse, kraus_apply, outcome_density
from .montecarlo import (
    OutcomeSample,
    RunStatistics,
    run_experiment,
    sample_arrays,
    sample_first,
    sample_pair,
    sampler_backend,
)
from .scenarios import (
    ScenarioSpec,
    WashoutRow,
    build_scenario,
    momentum_operator,
    washout_study,
)

__version__ = "0.1.0"

__all__ = [
    "QuantumState",
    "Observable",
    "Spectrum",
    "OverlapMatrix",
    "spectral_decompose",
    "overlap_matrix",
    "expectation",
    "KrausParams",
    "kraus_apply",
    "outcome_density",
    "collapse",
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
    "OutcomeSample",
    "RunStatistics",
    "run_experiment",
    "sample_arrays",
    "sample_first",
    "sample_pair",
    "sampler_backend",
    "ScenarioSpec",
    "WashoutRow",
    "build_scenario",
    "momentum_operator",
    "washout_study",
    "__version__",
]
