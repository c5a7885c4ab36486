import numpy as np
import pytest

from spectrace.determinants import RegularityReport
from spectrace.measure import Measure, UnsupportedEndpointDerivative
from spectrace.spectrum import SpectralProblem, find_eigenvalue_pair
from spectrace.trace import (
    AmbiguousBranch,
    NotConverged,
    cesaro,
    cesaro_bracketed,
    estimate_trace,
    partial_sums,
    rhs_prediction,
)
from support import dirichlet2, coupled4_frak_C, coupled4_set, third_order_set


def test_partial_sums_zero_measure():
    prob = SpectralProblem(2, dirichlet2(), Measure())
    sq, s0 = find_eigenvalue_pair(prob, range(25))
    sums = partial_sums(sq, s0, 0j)
    assert np.max(np.abs(sums)) < 1e-10


def test_partial_sums_constant_density():
    # lambda shifts by exactly the mean, so every corrected term vanishes
    c = 1.3
    prob = SpectralProblem(2, dirichlet2(), Measure(density=((0.0, 1.0, c),)))
    sq, s0 = find_eigenvalue_pair(prob, range(24))
    sums = partial_sums(sq, s0, prob.measure.total)
    assert np.max(np.abs(sums)) < 1e-6


def test_cesaro_constant():
    limit, err, _ = cesaro(np.full(30, 2.5 + 1j))
    assert abs(limit - (2.5 + 1j)) < 1e-14
    assert err < 1e-14


def test_cesaro_alternating():
    seq = np.array([(-1.0) ** l for l in range(200)])
    limit, err, _ = cesaro(seq)
    assert abs(limit) < 0.02
    assert err < 0.1


def test_cesaro_oscillation_around_mean():
    l = np.arange(400)
    A, B, th, ph = 0.7 - 0.2j, 1.5, 2.13, 0.4
    seq = A + B * np.cos(l * th + ph)
    limit, err, _ = cesaro(seq)
    assert abs(limit - A) < 0.02


def test_cesaro_needs_terms():
    with pytest.raises(ValueError):
        cesaro(np.ones(5))


def test_cesaro_not_converged():
    seq = np.cumsum(np.ones(50))    # divergent partial sums
    with pytest.raises(NotConverged):
        cesaro(seq, tol=1e-3)


def test_cesaro_bracketed_pairs():
    pairs = [(1.0, -1.0)] * 40      # each bracket sums to zero
    limit, err, _ = cesaro_bracketed(pairs)
    assert abs(limit) < 1e-14


def test_rhs_prediction_no_midpoint():
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.3, 1.0),)))
    value, terms = rhs_prediction(prob, prob.report)
    assert value == 0
    assert terms["midpoint_atom"] == 0


def test_rhs_prediction_midpoint_atom():
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5, 1.0),)))
    value, terms = rhs_prediction(prob, prob.report)
    target = coupled4_frak_C() / (2 * np.pi)
    assert abs(value - target) < 1e-12
    assert abs(terms["midpoint_atom"] - target) < 1e-12


def test_rhs_prediction_linear_in_mass():
    prob1 = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5, 1.0),)))
    prob3 = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5, 3.0),)))
    v1, _ = rhs_prediction(prob1, prob1.report)
    v3, _ = rhs_prediction(prob3, prob3.report)
    assert abs(v3 - 3 * v1) < 1e-12


def test_rhs_prediction_translation_kills_term():
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5 + 1e-6, 1.0),)))
    value, _ = rhs_prediction(prob, prob.report)
    assert value == 0


def test_rhs_prediction_odd_order():
    prob = SpectralProblem(3, third_order_set(), Measure(atoms=((0.41, 1.0),)))
    value, _ = rhs_prediction(prob, prob.report)
    assert value == 0


def test_rhs_prediction_endpoint_density():
    prob = SpectralProblem(2, dirichlet2(),
                           Measure(density=((0.0, 0.5, 1.0),)))
    with pytest.raises(UnsupportedEndpointDerivative):
        rhs_prediction(prob, prob.report)


def test_rhs_prediction_ambiguous_branch():
    report = RegularityReport(
        classification="StronglyRegular", kappa=2, n=4,
        xi1=0.5 + 0j, xi2=2.0 + 0j, frak_c=1.0 + 0j,
        frak_C=None, frak_C_branches=(1 + 1j, 1 - 1j),
        ratio_on_positive_axis=True)
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5, 1.0),)))
    with pytest.raises(AmbiguousBranch) as exc:
        rhs_prediction(prob, report)
    assert len(exc.value.candidates) == 2


def test_estimate_trace_smoke():
    prob = SpectralProblem(2, dirichlet2(), Measure(atoms=((0.37, 1.0),)))
    est = estimate_trace(prob, 40, tolerance=5e-2)
    assert len(est.partial_sums) == 40
    assert est.verdict in ("match", "no-match", "inconclusive")
    d = est.to_json_dict()
    assert set(d) >= {"partial_sums", "cesaro_means", "limit_estimate",
                      "error_bar", "rhs_prediction", "rhs_terms", "verdict"}


def test_cesaro_bracketed_matches_plain_on_singletons():
    rng = np.random.default_rng(31)
    incs = rng.standard_normal(60) * 0.2
    plain, _, _ = cesaro(np.cumsum(incs))
    bracketed, _, _ = cesaro_bracketed([(v,) for v in incs])
    assert abs(plain - bracketed) < 1e-12


def test_trace_complex_atom_mass():
    # a purely imaginary mass scales the midpoint term linearly
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.5, 1j),)))
    sq, s0 = find_eigenvalue_pair(prob, range(80))
    sums = partial_sums(sq, s0, prob.measure.total)
    limit, err, _ = cesaro(sums)
    target = 1j * prob.report.frak_C / (2 * np.pi)
    assert abs(limit - target) < 2e-2
