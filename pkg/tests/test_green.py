import numpy as np
import pytest

from spectrace.determinants import WCore
from spectrace.green import (
    GreenDiagonal,
    NearSpectrum,
    PoleOnPath,
    contour_trace_integral,
    frak_C_via_lemma51,
    green_diag,
    green_trajectory,
)
from spectrace.measure import Measure
from spectrace.spectrum import SpectralProblem, find_eigenvalue_pair
from spectrace.trace import cesaro, partial_sums
from support import dirichlet2, coupled4_frak_C, coupled4_set, third_order_set


def _kernel2(z, x, y):
    lo, hi = min(x, y), max(x, y)
    return np.sin(z * lo) * np.sin(z * (1 - hi)) / (z * np.sin(z))


def test_green_kernel_matches_classical():
    bcs = dirichlet2()
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(50):
        z = complex(rng.uniform(0.6, 60), rng.uniform(-2, 2))
        x, y = rng.uniform(0.03, 0.97, 2)
        g = WCore(bcs, z).green_kernel(float(x), float(y))
        c = _kernel2(z, x, y)
        worst = max(worst, abs(g - c) / abs(c))
    assert worst < 1e-9


def test_green_diag_matches_classical():
    ctx = GreenDiagonal(SpectralProblem(2, dirichlet2()))
    rng = np.random.default_rng(22)
    for _ in range(50):
        z = complex(rng.uniform(0.6, 40), rng.uniform(0.05, 2))
        x = float(rng.uniform(0.05, 0.95))
        g = green_diag(ctx, x, z)
        assert abs(g - _kernel2(z, x, x)) < 1e-9 * abs(_kernel2(z, x, x))


def test_green_diag_near_spectrum():
    ctx = GreenDiagonal(SpectralProblem(2, dirichlet2()))
    with pytest.raises(NearSpectrum):
        green_diag(ctx, 0.4, np.pi + 1e-12)


def test_coupled4_conjugate_symmetry():
    # self-adjoint problem: G(x,x,conj lambda) = conj G(x,x,lambda)
    bcs = coupled4_set()
    rng = np.random.default_rng(23)
    for _ in range(10):
        z = complex(rng.uniform(2, 20), rng.uniform(0.1, 0.5))
        x = float(rng.uniform(0.1, 0.9))
        g = WCore(bcs, z).green_kernel(x, x)
        gc = WCore(bcs, np.conj(z)).green_kernel(x, x)
        assert abs(gc - np.conj(g)) < 1e-9 * abs(g)


def test_large_z_kernel_decay():
    # |G| * |z|^{n-1} stays bounded along the contour family
    prob = SpectralProblem(4, coupled4_set())
    radii = prob.contour_radii(30)
    vals = []
    for r in radii[::6]:
        z = r * np.exp(0.31j)
        g = WCore(prob.bcs, z).green_kernel(0.5, 0.5)
        vals.append(abs(g) * r ** 3)
    assert max(vals) < 10.0


def test_contour_integral_zero_measure():
    ctx = GreenDiagonal(SpectralProblem(4, coupled4_set()))
    assert contour_trace_integral(ctx, Measure(), 3) == 0


def test_prop14_mutual_oracle():
    # eigenvalue-difference sums approach (i/2pi) * raw contour integrals
    # (valid for order >= 3 only; second-order terms persist at order 2)
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.37, 1.0),)))
    nl = 16
    sq, s0 = find_eigenvalue_pair(prob, range(nl))
    sums = partial_sums(sq, s0, 0j)
    ctx = GreenDiagonal(prob)
    traj = green_trajectory(ctx, prob.measure, range(nl), include_diagonal=True)
    disc = np.abs(sums - 1j / (2 * np.pi) * traj)
    assert np.mean(disc[-4:]) < 0.3 * np.mean(disc[:4])


def test_lemma51_dirichlet_zero():
    prob = SpectralProblem(2, dirichlet2())
    ph = prob.contour_phases()
    val = frak_C_via_lemma51(prob.report, ph[0], ph[1])
    assert abs(val) < 1e-9


def test_lemma51_coupled4_matches_closed_form():
    prob = SpectralProblem(4, coupled4_set())
    ph = prob.contour_phases()
    val = frak_C_via_lemma51(prob.report, ph[0], ph[1])
    assert abs(val - coupled4_frak_C()) < 1e-9


def test_lemma51_phase_swap():
    prob = SpectralProblem(4, coupled4_set())
    ph = prob.contour_phases()
    a = frak_C_via_lemma51(prob.report, ph[0], ph[1])
    b = frak_C_via_lemma51(prob.report, ph[1], ph[0])
    assert abs(a - b) < 1e-10


def test_lemma51_pole_on_path():
    prob = SpectralProblem(4, coupled4_set())
    bad = float(np.angle(prob.report.xi1))
    with pytest.raises(PoleOnPath):
        frak_C_via_lemma51(prob.report, bad, bad + np.pi)


def test_odd_order_offmid_integrals_vanish():
    # third order: the contour trajectory tends to zero in Cesaro mean
    prob = SpectralProblem(3, third_order_set(), Measure(atoms=((0.41, 1.0),)))
    ctx = GreenDiagonal(prob)
    traj = green_trajectory(ctx, prob.measure, range(30),
                            include_diagonal=False)
    limit, err, _ = cesaro(traj)
    assert abs(limit) < 0.12


def test_even_order_offmid_integrals_vanish():
    prob = SpectralProblem(4, coupled4_set(), Measure(atoms=((0.3, 1.0),)))
    ctx = GreenDiagonal(prob)
    traj = green_trajectory(ctx, prob.measure, range(30),
                            include_diagonal=False)
    limit, err, _ = cesaro(traj)
    assert abs(limit) < 0.1
