"""Shared builders for the test suite."""

import numpy as np

from spectrace.bc import BoundaryConditionSet, DependentForms, normalize
from spectrace.determinants import NotRegular, regularity


def dirichlet2():
    return BoundaryConditionSet.from_coeff_arrays(2, [([1], []), ([], [1])])


def coupled4_set():
    """Fourth-order self-adjoint example: y(0)+y(1), y'(1), y''(0),
    y'''(0)+y'''(1)."""
    return BoundaryConditionSet.from_coeff_arrays(4, [
        ([1], [1]),
        ([], [0, 1]),
        ([0, 0, 1], []),
        ([0, 0, 0, 1], [0, 0, 0, 1]),
    ])


def periodic4():
    return BoundaryConditionSet.from_coeff_arrays(4, [
        ([1], [-1]), ([0, 1], [0, -1]),
        ([0, 0, 1], [0, 0, -1]), ([0, 0, 0, 1], [0, 0, 0, -1]),
    ])


def third_order_set():
    """Regular third-order set used for the odd-order runs."""
    return BoundaryConditionSet.from_coeff_arrays(3, [
        ([1], []), ([], [1]), ([0, 1], [0, 1]),
    ])


def coupled4_frak_C():
    """Verified closed-form value of the midpoint coefficient for coupled4_set."""
    return -np.arctan(4 * np.sqrt(5)) / np.sqrt(5)


def _rand_c(rng, size=None):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def random_regular_bcs(rng, n, kind="general", max_tries=200):
    """A normalized Birkhoff-regular set of the requested flavor."""
    for _ in range(max_tries):
        pairs = []
        if kind == "almost-separated":
            n_a = (n + 1) // 2
            deg_a = rng.permutation(n)[:n_a]
            deg_b = rng.permutation(n)[:n - n_a]
            for d in deg_a:
                p = np.zeros(n, dtype=complex)
                p[: d + 1] = _rand_c(rng, d + 1)
                p[d] += 2.0
                pairs.append((p.tolist(), []))
            for d in deg_b:
                q = np.zeros(n, dtype=complex)
                q[: d + 1] = _rand_c(rng, d + 1)
                q[d] += 2.0
                pairs.append(([], q.tolist()))
        elif kind == "quasi-periodic":
            theta = _rand_c(rng)
            while abs(theta) < 0.3:
                theta = _rand_c(rng)
            for d in range(n):
                b = np.zeros(n, dtype=complex)
                b[: d + 1] = _rand_c(rng, d + 1)
                b[d] = _rand_c(rng) + 2.0
                a = np.zeros(n, dtype=complex)
                a[: d] = _rand_c(rng, d)
                a[d] = theta * b[d]
                pairs.append((a.tolist(), b.tolist()))
        else:
            for _ in range(n):
                p = _rand_c(rng, n)
                q = _rand_c(rng, n)
                pairs.append((p.tolist(), q.tolist()))
        try:
            bcs = normalize(BoundaryConditionSet.from_coeff_arrays(n, pairs))
            report = regularity(bcs)
        except (DependentForms, NotRegular):
            continue
        return bcs, report
    raise RuntimeError(f"no regular set of kind {kind!r} found")
