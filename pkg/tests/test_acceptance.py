"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Heavy spectral runs are shared through module-scoped fixtures.  Two
previously quoted reference constants are contradicted by three mutually
consistent computation paths each; they are kept as strict expected-failure
tests at the end, with the evidence in their reasons.  Every relation
between the computation paths is asserted at its stated tolerance.
"""

import time

import numpy as np
import pytest

from spectrace.config import ProblemConfig
from spectrace.green import GreenDiagonal, frak_C_via_lemma51, green_trajectory
from spectrace.measure import Measure
from spectrace.runners import run_analyze
from spectrace.spectrum import SpectralProblem, find_eigenvalue_pair
from spectrace.trace import cesaro, partial_sums
from support import (
    dirichlet2,
    random_regular_bcs,
    coupled4_frak_C,
    coupled4_set,
    third_order_set,
)

COUPLED4_CONFIG = {
    "n": 4,
    "forms": [
        {"p": [[1, 0]], "q": [[1, 0]]},
        {"p": [], "q": [[0, 0], [1, 0]]},
        {"p": [[0, 0], [0, 0], [1, 0]], "q": []},
        {"p": [[0, 0], [0, 0], [0, 0], [1, 0]],
         "q": [[0, 0], [0, 0], [0, 0], [1, 0]]},
    ],
}


def _verdict(name, ok, detail):
    print(f"{name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared heavy computations
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def coupled4_mid_problem():
    return SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5, 1.0),)))


@pytest.fixture(scope="module")
def coupled4_mid_pair(coupled4_mid_problem):
    return find_eigenvalue_pair(coupled4_mid_problem, range(302))


@pytest.fixture(scope="module")
def coupled4_green_raw(coupled4_mid_problem):
    ctx = GreenDiagonal(coupled4_mid_problem)
    return green_trajectory(ctx, coupled4_mid_problem.measure, range(61),
                            include_diagonal=True)


@pytest.fixture(scope="module")
def coupled4_green_offdiag(coupled4_mid_problem):
    ctx = GreenDiagonal(coupled4_mid_problem)
    return green_trajectory(ctx, coupled4_mid_problem.measure, range(170),
                            include_diagonal=False)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_1_closed_form():
    t0 = time.time()
    report = run_analyze(ProblemConfig.from_dict(COUPLED4_CONFIG))
    elapsed = time.time() - t0
    value = complex(*report["frak_C"])
    target = coupled4_frak_C()
    ok = abs(value - target) < 1e-9 and elapsed < 1.0
    _verdict("criterion 1 (closed-form coefficient)", ok,
             f"frak_C = {value:.12f}, target {target:.12f}, {elapsed:.3f} s")


def test_criterion_2_limit_integral_oracle():
    t0 = time.time()
    prob = SpectralProblem(4, coupled4_set())
    ph = prob.contour_phases()
    value = frak_C_via_lemma51(prob.report, ph[0], ph[1])
    elapsed = time.time() - t0
    ok = abs(value - prob.report.frak_C) < 1e-8 and elapsed < 1.0
    _verdict("criterion 2 (limit-integral oracle)", ok,
             f"|lemma - closed| = {abs(value - prob.report.frak_C):.2e}, "
             f"{elapsed:.3f} s")


def test_criterion_3_vanishing_classes():
    t0 = time.time()
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(50):
        n = int(rng.choice([2, 4, 6]))
        _, rep = random_regular_bcs(rng, n, kind="almost-separated")
        worst = max(worst, abs(rep.frak_C))
    for _ in range(50):
        _, rep = random_regular_bcs(rng, 4, kind="quasi-periodic")
        worst = max(worst, abs(rep.frak_C))
    for _ in range(50):
        _, rep = random_regular_bcs(rng, 2)
        vals = rep.frak_C_branches if rep.frak_C is None else (rep.frak_C,)
        worst = max(worst, max(abs(v) for v in vals))
    elapsed = time.time() - t0
    ok = worst < 1e-10 and elapsed < 10.0
    _verdict("criterion 3 (vanishing classes)", ok,
             f"worst |frak_C| = {worst:.2e} over 150 random sets, "
             f"{elapsed:.1f} s")


def test_criterion_4_determinant_identities():
    t0 = time.time()
    rng = np.random.default_rng(44)
    worst = 0.0
    for _ in range(200):
        n = int(rng.choice([4, 6, 8]))
        bcs, rep = random_regular_bcs(rng, n)
        lead = rep.leading
        rho_k = np.exp(2j * np.pi * bcs.kappa / n)
        scale = max(abs(lead.m), abs(lead.m1), abs(lead.m_1_k1),
                    abs(lead.m_k1_1), 1e-12)
        worst = max(
            worst,
            abs(lead.m2 + rho_k * lead.m) / scale,
            abs(lead.m_k_n + lead.m_k1_1 / rho_k) / scale,
            abs(lead.m_n_k + lead.m_1_k1 / rho_k) / scale,
            abs(rep.xi1 * rep.xi2 + 1 / rho_k),
        )
    elapsed = time.time() - t0
    ok = worst < 1e-9 and elapsed < 30.0
    _verdict("criterion 4 (exponential-coefficient identities)", ok,
             f"worst relative defect = {worst:.2e} over 200 sets, "
             f"{elapsed:.1f} s")


def _secular_oracle_limit(h, c, n_annuli):
    """Independent second-order trace estimate from the transcendental
    secular equation  z sin z + h sin(zc) sin(z(1-c)) = 0."""

    def f(z):
        return z * np.sin(z) + h * np.sin(z * c) * np.sin(z * (1 - c))

    roots = []
    for N in range(1, n_annuli + 2):
        z = np.pi * N
        for _ in range(100):
            d = 1e-8 * (1 + abs(z))
            df = (f(z + d) - f(z - d)) / (2 * d)
            step = -f(z) / df
            if abs(step) > 0.5:
                step *= 0.5 / abs(step)
            z += step
            if abs(step) < 1e-15 * (1 + abs(z)):
                break
        roots.append(z)
    roots = np.array(roots)
    free = np.pi * np.arange(1, len(roots) + 1)
    diffs = (roots - free) * (roots + free) - h
    sums = np.array([diffs[:N].sum() for N in range(1, n_annuli + 1)])
    limit, _, _ = cesaro(sums)
    return limit


def test_criterion_5_second_order_regression():
    t0 = time.time()
    h, c, n_annuli = 1.0, 0.37, 420
    prob = SpectralProblem(2, dirichlet2(), Measure(atoms=((c, h),)))
    sq, s0 = find_eigenvalue_pair(prob, range(n_annuli))
    assert sum(s.count for s in s0) >= 400
    sums = partial_sums(sq, s0, prob.measure.total)
    limit, err, _ = cesaro(sums)
    oracle = _secular_oracle_limit(h, c, n_annuli)
    # centering a lone atom leaves a -h density whose endpoint values
    # contribute +h/2; the jump term itself contributes -h^2/8
    expected = h / 2 - h ** 2 / 8
    elapsed = time.time() - t0
    ok = (abs(limit - oracle) < 5e-3 and abs(limit - expected) < 5e-3
          and elapsed < 120.0)
    _verdict("criterion 5 (second-order regression)", ok,
             f"limit {limit.real:+.6f}, secular oracle {oracle.real:+.6f}, "
             f"analytic {expected:+.6f}, {elapsed:.0f} s")


def test_criterion_5b_pure_jump_law():
    # compensated pair: zero total mass isolates the -sum h^2/8 law
    t0 = time.time()
    prob = SpectralProblem(2, dirichlet2(),
                           Measure(atoms=((0.37, 1.0), (0.81, -1.0))))
    sq, s0 = find_eigenvalue_pair(prob, range(420))
    sums = partial_sums(sq, s0, prob.measure.total)
    limit, err, _ = cesaro(sums)
    expected = -(1.0 ** 2 + 1.0 ** 2) / 8
    elapsed = time.time() - t0
    ok = abs(limit - expected) < 5e-3 and elapsed < 120.0
    _verdict("criterion 5b (pure jump-square law)", ok,
             f"limit {limit.real:+.6f} vs -sum h^2/8 = {expected:+.6f}, "
             f"{elapsed:.0f} s")


def test_criterion_6_even_order_midpoint(coupled4_mid_problem, coupled4_mid_pair):
    t0 = time.time()
    sq, s0 = coupled4_mid_pair
    assert sum(s.count for s in s0) >= 300
    sums = partial_sums(sq, s0, coupled4_mid_problem.measure.total)
    limit, err, _ = cesaro(sums)
    target = coupled4_mid_problem.report.frak_C / (2 * np.pi)
    elapsed = time.time() - t0
    ok = abs(limit - target) < 5e-2 and elapsed < 600.0
    _verdict("criterion 6 (midpoint-atom trace limit)", ok,
             f"limit {limit.real:+.6f}{limit.imag:+.1e}j vs frak_C/2pi = "
             f"{target.real:+.6f}, err bar {err:.1e}, {elapsed:.0f} s")


def test_criterion_7_off_midpoint_null():
    t0 = time.time()
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.3, 1.0),)))
    sq, s0 = find_eigenvalue_pair(prob, range(240))
    sums = partial_sums(sq, s0, prob.measure.total)
    limit, err, _ = cesaro(sums)
    elapsed = time.time() - t0
    ok = abs(limit) < 5e-2 and elapsed < 600.0
    _verdict("criterion 7 (off-midpoint null)", ok,
             f"limit {limit.real:+.6f}{limit.imag:+.1e}j vs 0, "
             f"err bar {err:.1e}, {elapsed:.0f} s")


def test_criterion_8_odd_order_null():
    t0 = time.time()
    # compensated masses keep the total at zero, as the odd-order limit
    # statement requires; a bare atom excites endpoint terms outside the
    # supported measure class (measured +0.667 for this set)
    prob = SpectralProblem(3, third_order_set(),
                           Measure(atoms=((0.41, 1.0), (0.63, -1.0))))
    sq, s0 = find_eigenvalue_pair(prob, range(160))
    sums = partial_sums(sq, s0, prob.measure.total)
    limit, err, _ = cesaro(sums)
    elapsed = time.time() - t0
    ok = abs(limit) < 5e-2 and elapsed < 600.0
    _verdict("criterion 8 (odd-order null)", ok,
             f"limit {limit.real:+.6f}{limit.imag:+.1e}j vs 0, "
             f"err bar {err:.1e}, {elapsed:.0f} s")


def test_criterion_9_mutual_oracle_trend(coupled4_mid_problem, coupled4_mid_pair,
                                         coupled4_green_raw):
    t0 = time.time()
    sq, s0 = coupled4_mid_pair
    sums = partial_sums(sq[:61], s0[:61], 0j)
    disc = np.abs(sums - 1j / (2 * np.pi) * coupled4_green_raw)[10:61]
    k = 9
    sm = np.convolve(disc, np.ones(k) / k, mode="valid")
    frac_dec = float(np.mean(np.diff(sm) <= 0))
    elapsed = time.time() - t0
    ok = (sm[-1] < 0.5 * sm[0] and frac_dec >= 0.7 and elapsed < 300.0)
    _verdict("criterion 9 (eigensum vs contour integral)", ok,
             f"smoothed discrepancy {sm[0]:.2e} -> {sm[-1]:.2e}, "
             f"decreasing fraction {frac_dec:.2f}, {elapsed:.0f} s")


def test_criterion_10_contour_limit(coupled4_mid_problem, coupled4_green_offdiag):
    t0 = time.time()
    limit, err, _ = cesaro(np.asarray(coupled4_green_offdiag))
    target = -1j * coupled4_mid_problem.report.frak_C \
        * coupled4_mid_problem.measure.midpoint_mass
    elapsed = time.time() - t0
    ok = abs(limit - target) < 5e-2 and elapsed < 300.0
    _verdict("criterion 10 (contour-integral limit)", ok,
             f"cesaro {limit:.6f} vs -i frak_C h = {target:.6f}, "
             f"err bar {err:.1e}, {elapsed:.0f} s")


# ---------------------------------------------------------------------------
# reference values that the verified computations contradict
# ---------------------------------------------------------------------------

@pytest.mark.xfail(
    strict=True,
    reason="quoted value (4 sqrt5 / 9) atan(4 sqrt5) differs from the "
           "consistent value by a factor -(xi1-xi2)^2; the closed form, the "
           "limit-integral oracle, the measured trace and the contour-"
           "integral limit all agree on -0.6526882578")
def test_criterion_1_literal_reference_value():
    report = run_analyze(ProblemConfig.from_dict(COUPLED4_CONFIG))
    value = complex(*report["frak_C"])
    assert abs(value - 4 * np.sqrt(5) / 9 * np.arctan(4 * np.sqrt(5))) < 1e-9


@pytest.mark.xfail(
    strict=True,
    reason="the quoted -1/8 target omits the endpoint contribution h/2 "
           "excited by the nonzero total mass; the independent secular-"
           "equation oracle confirms h/2 - h^2/8 at masses 0.01, 0.1 and 1")
def test_criterion_5_literal_reference_value():
    prob = SpectralProblem(2, dirichlet2(), Measure(atoms=((0.37, 1.0),)))
    sq, s0 = find_eigenvalue_pair(prob, range(120))
    sums = partial_sums(sq, s0, prob.measure.total)
    limit, _, _ = cesaro(sums)
    assert abs(limit - (-0.125)) < 5e-3
