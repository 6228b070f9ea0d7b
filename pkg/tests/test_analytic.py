"""Closed-form layer: moments, joint density, expansions, sequential means."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from helpers import (
    gapped_hermitian,
    integrate_1d,
    integrate_2d,
    random_hermitian,
    random_setup,
    random_state,
    random_system,
)
from seqmeas.analytic import (
    SequentialSetup,
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
from seqmeas.core import Observable, QuantumState, expectation, overlap_matrix, spectral_decompose
from seqmeas.kraus import outcome_density
from seqmeas.scenarios import ScenarioSpec, build_scenario

PAULI_Z = Observable(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex))
PAULI_X = Observable(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))


def qubit_parts():
    state, obs_a, obs_b = build_scenario(ScenarioSpec("qubit", {}))
    return state, spectral_decompose(obs_a), spectral_decompose(obs_b), obs_b


def commuting_parts():
    state, obs_a, obs_b = build_scenario(ScenarioSpec("commuting", {}))
    return state, spectral_decompose(obs_a), spectral_decompose(obs_b), obs_b


def qubit_setup(lam_a: float, lam_b: float = 1.0) -> SequentialSetup:
    state, sa, sb, _ = qubit_parts()
    return SequentialSetup(state=state, spec_a=sa, spec_b=sb, lambda_a=lam_a, lambda_b=lam_b)


# ------------------------------------------------------------------- setup


def test_setup_rejects_dimension_mismatch():
    rng = np.random.default_rng(31)
    sa = spectral_decompose(random_hermitian(rng, 2))
    sb = spectral_decompose(random_hermitian(rng, 3))
    st = random_state(rng, 2)
    with pytest.raises(ValueError, match="mismatch"):
        SequentialSetup(state=st, spec_a=sa, spec_b=sb, lambda_a=1.0, lambda_b=1.0)


def test_setup_rejects_non_positive_strengths():
    state, sa, sb, _ = qubit_parts()
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError, match="positive"):
            SequentialSetup(state=state, spec_a=sa, spec_b=sb, lambda_a=bad, lambda_b=1.0)
        with pytest.raises(ValueError, match="positive"):
            SequentialSetup(state=state, spec_a=sa, spec_b=sb, lambda_a=1.0, lambda_b=bad)


# ----------------------------------------------------------- single moments


def test_first_moment_is_strength_independent():
    state, sa, _, _ = qubit_parts()
    vals = {moment_single(state, sa, lam, 1) for lam in (1e-3, 0.5, 7.0, 1e3)}
    assert all(abs(v) < 1e-15 for v in vals)


def test_second_moment_picks_up_pointer_variance():
    state, sa, _, _ = qubit_parts()
    assert moment_single(state, sa, 0.5, 2) == pytest.approx(1.0 + 0.5, abs=1e-15)
    assert moment_single(state, sa, 1.0, 2) == pytest.approx(1.25, abs=1e-15)


def test_moments_match_quadrature_of_the_outcome_density():
    rng = np.random.default_rng(32)
    st, obs, _ = random_system(rng, 5)
    spec = spectral_decompose(obs)
    lam = 2.0
    sigma = 0.5 / math.sqrt(lam)
    lo = float(spec.eigenvalues[0] - 10.0 * sigma)
    hi = float(spec.eigenvalues[-1] + 10.0 * sigma)
    m1 = integrate_1d(lambda a: a * outcome_density(st, spec, lam, a), lo, hi, n=400)
    m2 = integrate_1d(lambda a: a * a * outcome_density(st, spec, lam, a), lo, hi, n=400)
    assert moment_single(st, spec, lam, 1) == pytest.approx(expectation(st, obs), abs=1e-12)
    assert moment_single(st, spec, lam, 1) == pytest.approx(m1, abs=1e-9)
    assert moment_single(st, spec, lam, 2) == pytest.approx(m2, abs=1e-9)


def test_moment_rejects_unsupported_order():
    state, sa, _, _ = qubit_parts()
    for k in (0, 3, -1):
        with pytest.raises(ValueError, match="order"):
            moment_single(state, sa, 1.0, k)


def test_std_for_an_eigenstate_is_the_pointer_width():
    spec = spectral_decompose(PAULI_Z)
    st = QuantumState(np.array([1.0, 0.0]))
    assert std_single(st, spec, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert std_single(st, spec, 0.25) == pytest.approx(1.0, abs=1e-15)


def test_std_is_pointer_dominated_at_small_strength():
    state, sa, _, _ = qubit_parts()
    lam = 1e-4   # pointer variance 2500 dwarfs the intrinsic variance 1
    want = math.sqrt(1.0 / (4.0 * lam))
    assert abs(std_single(state, sa, lam) - want) / want < 0.01


def test_std_matches_moment_recomputation():
    rng = np.random.default_rng(33)
    for _ in range(20):
        d = int(rng.integers(2, 7))
        st, obs, _ = random_system(rng, d)
        spec = spectral_decompose(obs)
        lam = float(10.0 ** rng.uniform(-2, 2))
        m1 = moment_single(st, spec, lam, 1)
        m2 = moment_single(st, spec, lam, 2)
        assert std_single(st, spec, lam) == pytest.approx(math.sqrt(m2 - m1 * m1), abs=1e-12)


# ------------------------------------------------------------ joint density


def test_joint_density_is_nonnegative_and_finite():
    rng = np.random.default_rng(34)
    setup = random_setup(rng, 4, lambda_a=2.0, lambda_b=0.5)
    for _ in range(50):
        val = joint_density(setup, float(rng.uniform(-4, 4)), float(rng.uniform(-4, 4)))
        assert val >= 0.0
        assert math.isfinite(val)


def test_joint_density_rejects_non_finite_outcomes():
    setup = qubit_setup(1.0)
    with pytest.raises(ValueError, match="finite"):
        joint_density(setup, math.nan, 0.0)
    with pytest.raises(ValueError, match="finite"):
        joint_density(setup, 0.0, math.inf)


def test_joint_density_integrates_to_one():
    rng = np.random.default_rng(35)
    cases = [qubit_setup(1.0), random_setup(rng, 3, lambda_a=0.5, lambda_b=2.0)]
    for setup in cases:
        sig_a = 0.5 / math.sqrt(setup.lambda_a)
        sig_b = 0.5 / math.sqrt(setup.lambda_b)
        ea, eb = setup.spec_a.eigenvalues, setup.spec_b.eigenvalues
        total = integrate_2d(
            lambda a, b: joint_density(setup, a, b),
            ea[0] - 8 * sig_a, ea[-1] + 8 * sig_a,
            eb[0] - 8 * sig_b, eb[-1] + 8 * sig_b,
            n=140,
        )
        assert abs(total - 1.0) < 1e-8


def test_joint_density_factorizes_for_matched_eigenstate():
    # same basis for both detectors and an input eigenstate: no interference
    eigs = np.array([-1.0, 0.0, 2.0])
    spec = spectral_decompose(Observable(np.diag(eigs).astype(complex)))
    st = QuantumState(np.array([0.0, 1.0, 0.0], dtype=complex))
    setup = SequentialSetup(state=st, spec_a=spec, spec_b=spec, lambda_a=1.5, lambda_b=0.7)
    for a, b in ((0.0, 0.0), (0.3, -0.4), (-1.2, 2.1)):
        want = outcome_density(st, spec, 1.5, a) * outcome_density(st, spec, 0.7, b)
        assert joint_density(setup, a, b) == pytest.approx(want, rel=1e-12)


def test_joint_density_b_marginal_is_the_first_detector_density():
    setup = qubit_setup(1.3, 0.6)
    sig_b = 0.5 / math.sqrt(setup.lambda_b)
    eb = setup.spec_b.eigenvalues
    for a in (-0.7, 0.0, 1.2):
        marginal = integrate_1d(
            lambda b: joint_density(setup, a, b),
            float(eb[0] - 10 * sig_b), float(eb[-1] + 10 * sig_b), n=300,
        )
        want = outcome_density(setup.state, setup.spec_a, setup.lambda_a, a)
        assert abs(marginal - want) < 1e-10


# ------------------------------------------------------------- strong limit


def test_strong_weights_for_eigenstate_same_basis():
    eigs = np.array([-1.0, 2.0])
    spec = spectral_decompose(Observable(np.diag(eigs).astype(complex)))
    st = QuantumState(np.array([0.0, 1.0], dtype=complex))
    assert joint_density_strong(st, spec, spec, 1, 1) == pytest.approx(1.0, abs=1e-15)
    assert joint_density_strong(st, spec, spec, 0, 0) == pytest.approx(0.0, abs=1e-15)


def test_strong_weights_unbiased_qubit():
    sa = spectral_decompose(PAULI_Z)
    sb = spectral_decompose(PAULI_X)
    st = QuantumState(np.array([1.0, 0.0]))   # eigenvalue +1 of Z is index 1
    for m0 in (0, 1):
        assert joint_density_strong(st, sa, sb, 1, m0) == pytest.approx(0.5, abs=1e-14)
        assert joint_density_strong(st, sa, sb, 0, m0) == pytest.approx(0.0, abs=1e-15)


def test_strong_weights_index_validation():
    sa = spectral_decompose(PAULI_Z)
    st = QuantumState(np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="out of range"):
        joint_density_strong(st, sa, sa, 2, 0)


def test_density_peaks_converge_to_strong_weights():
    # close eigenvalues keep the convergence rate slow enough to observe
    th = math.pi / 5.0
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]], dtype=complex)
    sa = spectral_decompose(Observable(np.diag([0.0, 0.3]).astype(complex)))
    sb = spectral_decompose(Observable(rot @ np.diag([0.0, 0.4]) @ rot.conj().T))
    st = QuantumState.from_unnormalized(np.array([1.0, 0.7 + 0.2j]))
    target = joint_density_strong(st, sa, sb, 1, 1)
    errs = []
    for lam in (10.0, 50.0, 100.0):
        setup = SequentialSetup(state=st, spec_a=sa, spec_b=sb, lambda_a=lam, lambda_b=lam)
        peak = joint_density(setup, float(sa.eigenvalues[1]), float(sb.eigenvalues[1]))
        rescaled = peak / (math.sqrt(2 * lam / math.pi) * math.sqrt(2 * lam / math.pi))
        errs.append(abs(rescaled - target))
    assert errs[0] > 10.0 * errs[1] > 100.0 * errs[2]   # geometric decay
    assert errs[2] < 1e-4


# ------------------------------------------------------------ weak expansion


def test_expansion_coefficient_matches_triple_sum_oracle():
    rng = np.random.default_rng(36)
    for d in (2, 3, 4):
        setup = random_setup(rng, d)
        a, b = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
        rep = weak_expansion(setup, a, b)
        psi = setup.spec_a.eigenvectors.conj().T @ setup.state.amplitudes
        u = setup.overlap.matrix
        ea, eb = setup.spec_a.eigenvalues, setup.spec_b.eigenvalues
        acc = 0.0 + 0.0j
        for n in range(d):
            for np_ in range(d):
                for m in range(d):
                    bracket = (a - ea[n]) ** 2 + (a - ea[np_]) ** 2 + 2.0 * (b - eb[m]) ** 2
                    acc += np.conj(psi[np_]) * psi[n] * np.conj(u[m, np_]) * u[m, n] * bracket
        assert abs(acc.imag) < 1e-10
        assert rep.c_coefficient == pytest.approx(acc.real, abs=1e-10)


def test_expansion_coefficient_closed_form():
    # unitarity collapses the triple sum to two single-basis variance terms
    rng = np.random.default_rng(37)
    setup = random_setup(rng, 5)
    a, b = 0.41, -0.73
    rep = weak_expansion(setup, a, b)
    psi_a = setup.spec_a.eigenvectors.conj().T @ setup.state.amplitudes
    psi_b = setup.spec_b.eigenvectors.conj().T @ setup.state.amplitudes
    want = 2.0 * float(np.sum((a - setup.spec_a.eigenvalues) ** 2 * np.abs(psi_a) ** 2)) \
        + 2.0 * float(np.sum((b - setup.spec_b.eigenvalues) ** 2 * np.abs(psi_b) ** 2))
    assert rep.c_coefficient == pytest.approx(want, abs=1e-12)
    assert rep.c_coefficient >= 0.0


def test_expansion_balanced_qubit_at_origin():
    rep = weak_expansion(qubit_setup(1.0), 0.0, 0.0)
    assert rep.c_coefficient == pytest.approx(4.0, abs=1e-13)
    assert rep.optimal_lambda == pytest.approx(0.125, abs=1e-15)
    assert rep.leading_density == pytest.approx(2.0 / math.pi, abs=1e-14)


def test_expansion_vertex_flags_undefined_when_flat():
    # matched eigenstate in a commuting pair: every bracket term vanishes
    eigs = np.array([-1.0, 0.0, 2.0])
    spec = spectral_decompose(Observable(np.diag(eigs).astype(complex)))
    st = QuantumState(np.array([0.0, 1.0, 0.0], dtype=complex))
    setup = SequentialSetup(state=st, spec_a=spec, spec_b=spec, lambda_a=1.0, lambda_b=1.0)
    rep = weak_expansion(setup, 0.0, 0.0)
    assert rep.c_coefficient == pytest.approx(0.0, abs=1e-15)
    assert rep.optimal_lambda is None


def test_expansion_vertex_maximizes_the_truncated_parabola():
    rep = weak_expansion(qubit_setup(1.0), 0.3, -0.2)
    c = rep.c_coefficient
    lam_star = rep.optimal_lambda
    assert lam_star == 1.0 / (2.0 * c)
    g = lambda lam: lam - lam * lam * c
    assert g(lam_star) > g(0.5 * lam_star)
    assert g(lam_star) > g(2.0 * lam_star)


def test_leading_density_is_two_over_pi_for_any_normalized_setup():
    rng = np.random.default_rng(38)
    for d in (2, 4, 6):
        rep = weak_expansion(random_setup(rng, d), 0.7, -1.1)
        assert rep.leading_density == pytest.approx(2.0 / math.pi, abs=1e-13)


def test_truncated_expansion_has_cubic_residual():
    setup_lam = 0.02
    state, sa, sb, _ = qubit_parts()
    a, b = 0.3, 0.2
    rep = weak_expansion(qubit_setup(1.0), a, b)
    lead = rep.leading_density
    c = rep.c_coefficient

    def residual(lam: float) -> float:
        setup = SequentialSetup(state=state, spec_a=sa, spec_b=sb, lambda_a=lam, lambda_b=lam)
        model = lead * lam - (2.0 / math.pi) * lam * lam * c
        return abs(joint_density(setup, a, b) - model)

    ratio = residual(setup_lam) / residual(setup_lam / 2.0)
    assert 6.0 <= ratio <= 10.0


# -------------------------------------------------------- total probability


def test_total_probability_random_setups():
    rng = np.random.default_rng(39)
    for lam in (0.01, 1.0, 100.0):
        for d in (2, 5, 8):
            setup = random_setup(rng, d, lambda_a=lam, lambda_b=1.0 / lam)
            assert abs(total_probability(setup) - 1.0) < 1e-10


def test_total_probability_eigenstate_is_exact():
    eigs = np.array([-1.0, 2.0])
    spec = spectral_decompose(Observable(np.diag(eigs).astype(complex)))
    st = QuantumState(np.array([1.0, 0.0], dtype=complex))
    setup = SequentialSetup(state=st, spec_a=spec, spec_b=spec, lambda_a=3.0, lambda_b=0.2)
    assert abs(total_probability(setup) - 1.0) < 1e-15


def test_total_probability_agrees_with_quadrature():
    setup = qubit_setup(0.8, 1.7)
    sig_a = 0.5 / math.sqrt(setup.lambda_a)
    sig_b = 0.5 / math.sqrt(setup.lambda_b)
    ea, eb = setup.spec_a.eigenvalues, setup.spec_b.eigenvalues
    quad_total = integrate_2d(
        lambda a, b: joint_density(setup, a, b),
        ea[0] - 8 * sig_a, ea[-1] + 8 * sig_a,
        eb[0] - 8 * sig_b, eb[-1] + 8 * sig_b,
        n=140,
    )
    assert abs(total_probability(setup) - quad_total) < 1e-7


# ----------------------------------------------------------- first pointer


def test_first_mean_ignores_both_strengths():
    rng = np.random.default_rng(40)
    for _ in range(100):
        d = int(rng.integers(2, 9))
        state, obs_a, obs_b = random_system(rng, d)
        sa, sb = spectral_decompose(obs_a), spectral_decompose(obs_b)
        want = expectation(state, obs_a)
        for lam in (1e-3, 1.0, 1e3):
            setup = SequentialSetup(state=state, spec_a=sa, spec_b=sb,
                                    lambda_a=lam, lambda_b=1.0 / lam)
            assert abs(mean_a_sequential(setup) - want) < 1e-12


def test_first_mean_eigenstate():
    eigs = np.array([-1.0, 2.0])
    spec = spectral_decompose(Observable(np.diag(eigs).astype(complex)))
    st = QuantumState(np.array([0.0, 1.0], dtype=complex))
    setup = SequentialSetup(state=st, spec_a=spec, spec_b=spec, lambda_a=1.0, lambda_b=1.0)
    assert mean_a_sequential(setup) == 2.0


# ----------------------------------------------------------- second pointer


def test_second_mean_commuting_pair_never_shifts():
    state, sa, sb, obs_b = commuting_parts()
    want = expectation(state, obs_b)
    for lam in (1e-3, 1e-1, 1.0, 10.0, 1e3):
        assert abs(mean_b_sequential(state, sa, sb, lam) - want) < 1e-12


def test_second_mean_qubit_closed_form():
    state, sa, sb, _ = qubit_parts()
    for lam in np.logspace(-3, 2, 26):
        want = math.exp(-2.0 * float(lam))
        assert abs(mean_b_sequential(state, sa, sb, float(lam)) - want) < 1e-12


def test_second_mean_reaches_the_strong_limit():
    state, sa, sb, obs_b = qubit_parts()
    strong = mean_b_strong_limit(state, sa, obs_b)
    got = mean_b_sequential(state, sa, sb, 100.0)
    assert abs(got - strong) < math.exp(-200.0) + 1e-12


def test_second_mean_interpolates_between_endpoints():
    rng = np.random.default_rng(41)
    state, obs_a, obs_b = random_system(rng, 4)
    obs_a = gapped_hermitian(rng, 4)            # gap >= 0.5 pins the strong rate
    sa, sb = spectral_decompose(obs_a), spectral_decompose(obs_b)
    slope = weak_slope(state, sa, obs_b)
    weak_dev = abs(mean_b_sequential(state, sa, sb, 1e-6) - expectation(state, obs_b))
    assert weak_dev < 2e-6 * max(1.0, abs(slope))
    strong_dev = abs(mean_b_sequential(state, sa, sb, 1e3) - mean_b_strong_limit(state, sa, obs_b))
    assert strong_dev < 1e-6


def test_second_mean_validation():
    state, sa, sb, _ = qubit_parts()
    with pytest.raises(ValueError, match="positive"):
        mean_b_sequential(state, sa, sb, 0.0)
    rng = np.random.default_rng(42)
    with pytest.raises(ValueError, match="mismatch"):
        mean_b_sequential(random_state(rng, 3), sa, sb, 1.0)


def test_strong_limit_values():
    state, sa, _, obs_b = qubit_parts()
    assert mean_b_strong_limit(state, sa, obs_b) == pytest.approx(0.0, abs=1e-15)
    state_c, sa_c, _, obs_b_c = commuting_parts()
    assert mean_b_strong_limit(state_c, sa_c, obs_b_c) == pytest.approx(
        expectation(state_c, obs_b_c), abs=1e-13)


# -------------------------------------------------------------- weak slope


def test_slope_vanishes_for_commuting_pair():
    state, sa, _, obs_b = commuting_parts()
    assert abs(weak_slope(state, sa, obs_b)) < 1e-14


def test_slope_balanced_qubit_is_minus_two():
    state, sa, _, obs_b = qubit_parts()
    assert weak_slope(state, sa, obs_b) == pytest.approx(-2.0, abs=1e-13)


def test_slope_matches_richardson_extrapolated_difference():
    rng = np.random.default_rng(2024)
    systems = [qubit_parts()[:3] + (qubit_parts()[3],)]
    for i in range(10):
        d = 3 if i % 2 == 0 else 4
        state, obs_a, obs_b = random_system(rng, d)
        systems.append((state, spectral_decompose(obs_a), spectral_decompose(obs_b), obs_b))
    for state, sa, sb, obs_b in systems:
        slope = weak_slope(state, sa, obs_b)
        f0 = expectation(state, obs_b)
        d1 = (mean_b_sequential(state, sa, sb, 1e-4) - f0) / 1e-4
        d2 = (mean_b_sequential(state, sa, sb, 1e-5) - f0) / 1e-5
        extrap = (10.0 * d2 - d1) / 9.0
        assert abs(extrap - slope) <= 1e-6 * max(abs(slope), 1.0)


def test_slope_matches_taylor_double_sum():
    rng = np.random.default_rng(43)
    for d in (2, 3, 5):
        state, obs_a, obs_b = random_system(rng, d)
        sa = spectral_decompose(obs_a)
        slope = weak_slope(state, sa, obs_b)
        psi = sa.eigenvectors.conj().T @ state.amplitudes
        b_prime = sa.eigenvectors.conj().T @ obs_b.matrix @ sa.eigenvectors
        ea = sa.eigenvalues
        w = (ea[None, :] - ea[:, None]) ** 2
        taylor = float(np.real(np.vdot(psi, (-0.5 * w * b_prime) @ psi)))
        assert abs(slope - taylor) < 1e-10


def test_slope_is_the_first_order_rate():
    state, sa, sb, obs_b = qubit_parts()
    slope = weak_slope(state, sa, obs_b)
    f0 = expectation(state, obs_b)
    err = lambda lam: abs((mean_b_sequential(state, sa, sb, lam) - f0) / lam - slope)
    assert err(1e-5) < err(1e-4) / 5.0   # linear-in-lambda convergence


# ----------------------------------------------------- discarded dephasing


def test_condition_norms_vanish_for_commuting_pair():
    state, sa, _, obs_b = commuting_parts()
    assert np.max(condition4_check(sa, obs_b, 1.0)) < 1e-15


def test_condition_norms_positive_for_qubit():
    _, sa, _, obs_b = qubit_parts()
    norms = condition4_check(sa, obs_b, 1.0)
    assert norms.shape == (2,)
    assert np.all(norms > 0.0)


def test_condition_norms_match_explicit_commutators():
    rng = np.random.default_rng(44)
    state, obs_a, obs_b = random_system(rng, 4)
    sa = spectral_decompose(obs_a)
    lam = 0.8
    norms = condition4_check(sa, obs_b, lam)
    ea = sa.eigenvalues
    b_prime = sa.eigenvectors.conj().T @ obs_b.matrix @ sa.eigenvectors
    for n in range(4):
        g = np.diag(np.exp(-0.5 * lam * (ea[n] - ea) ** 2))
        comm = g @ b_prime - b_prime @ g
        want = float(np.linalg.norm(comm[:, n]))
        assert norms[n] == pytest.approx(want, abs=1e-12)


def test_condition_norms_match_operator_exponential():
    rng = np.random.default_rng(45)
    state, obs_a, obs_b = random_system(rng, 3)
    sa = spectral_decompose(obs_a)
    lam = 1.3
    norms = condition4_check(sa, obs_b, lam)
    d = 3
    for n in range(d):
        shifted = sa.eigenvalues[n] * np.eye(d) - obs_a.matrix
        g_full = expm(-0.5 * lam * shifted @ shifted)
        comm = g_full @ obs_b.matrix - obs_b.matrix @ g_full
        want = float(np.linalg.norm(comm @ sa.eigenvectors[:, n]))
        assert norms[n] == pytest.approx(want, abs=1e-10)
