"""Boundary-condition algebra: two-point forms, normalization, classification.

A boundary form is a pair of polynomials (p, q) in the derivative symbol,
acting as  (p(D)y)(0) + (q(D)y)(1) = 0  on functions over [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALMOST_SEPARATED = "almost-separated"
QUASI_PERIODIC = "quasi-periodic"
OTHER = "other"

# relative threshold for treating a coefficient as zero
REL_TOL = 1e-12


class DependentForms(ValueError):
    """Raised when the boundary forms are linearly dependent."""


def _trim(coeffs, tol):
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0:
        return np.zeros(0, dtype=complex)
    k = c.size
    while k > 0 and abs(c[k - 1]) <= tol:
        k -= 1
    return c[:k].copy()


@dataclass(frozen=True)
class ComplexPolynomial:
    """Dense complex polynomial, coefficient index = power of the symbol."""

    coeffs: tuple

    @classmethod
    def from_coeffs(cls, coeffs, tol=0.0):
        return cls(tuple(complex(c) for c in _trim(coeffs, tol)))

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -1

    @property
    def is_zero(self):
        return not self.coeffs

    def __call__(self, x):
        out = 0j
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def coefficient(self, k):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0j


@dataclass(frozen=True)
class BoundaryForm:
    """One two-point boundary form p(D)y(0) + q(D)y(1) = 0."""

    p: ComplexPolynomial
    q: ComplexPolynomial

    @classmethod
    def from_coeffs(cls, p, q, tol=0.0):
        return cls(ComplexPolynomial.from_coeffs(p, tol),
                   ComplexPolynomial.from_coeffs(q, tol))

    @property
    def d(self):
        return max(self.p.degree, self.q.degree)

    @property
    def a_lead(self):
        return self.p.coefficient(self.d)

    @property
    def b_lead(self):
        return self.q.coefficient(self.d)

    @property
    def is_zero(self):
        return self.p.is_zero and self.q.is_zero

    def vector(self, n):
        """Coefficient vector over (p powers 0..n-1, q powers 0..n-1)."""
        v = np.zeros(2 * n, dtype=complex)
        for k, c in enumerate(self.p.coeffs):
            v[k] = c
        for k, c in enumerate(self.q.coeffs):
            v[n + k] = c
        return v


@dataclass(frozen=True)
class BoundaryConditionSet:
    """n boundary forms for an operator of order n on [0, 1]."""

    n: int
    forms: tuple

    @classmethod
    def from_forms(cls, n, forms):
        return cls(int(n), tuple(forms))

    @classmethod
    def from_coeff_arrays(cls, n, pairs, tol=0.0):
        forms = tuple(BoundaryForm.from_coeffs(p, q, tol) for p, q in pairs)
        return cls(int(n), forms)

    @property
    def kappa(self):
        return sum(f.d for f in self.forms)

    @property
    def degrees(self):
        return [f.d for f in self.forms]

    @property
    def a_leads(self):
        return np.array([f.a_lead for f in self.forms])

    @property
    def b_leads(self):
        return np.array([f.b_lead for f in self.forms])

    def coeff_scale(self):
        m = 0.0
        for f in self.forms:
            for c in f.p.coeffs + f.q.coeffs:
                m = max(m, abs(c))
        return m if m > 0 else 1.0


def validate(bcs: BoundaryConditionSet) -> list:
    """Diagnostics for the type invariants; empty list means valid."""
    diags = []
    if bcs.n < 2:
        diags.append(f"order n={bcs.n} must be at least 2")
    if len(bcs.forms) != bcs.n:
        diags.append(f"expected {bcs.n} forms, got {len(bcs.forms)}")
    tol = REL_TOL * bcs.coeff_scale()
    for j, f in enumerate(bcs.forms):
        if f.is_zero:
            diags.append(f"form {j}: p and q are both identically zero")
            continue
        if f.d >= bcs.n:
            diags.append(f"form {j}: degree {f.d} is not below n={bcs.n}")
        if abs(f.a_lead) <= tol and abs(f.b_lead) <= tol:
            diags.append(f"form {j}: leading coefficients both vanish")
    if not diags:
        vecs = np.stack([f.vector(bcs.n) for f in bcs.forms])
        rank = np.linalg.matrix_rank(vecs, tol=max(tol, 1e-10))
        if rank < len(bcs.forms):
            diags.append("forms are linearly dependent")
    return diags


def _form_from_vector(v, n, tol):
    return BoundaryForm(ComplexPolynomial.from_coeffs(v[:n], tol),
                        ComplexPolynomial.from_coeffs(v[n:], tol))


def normalize(bcs: BoundaryConditionSet) -> BoundaryConditionSet:
    """Equivalent set with minimal total order, via staged elimination.

    Works downward in derivative order; at each order keeps at most two
    forms with independent leading pairs (a, b) and cancels the leading
    block of every other form at that order.
    """
    n = bcs.n
    tol = REL_TOL * bcs.coeff_scale()
    vecs = [f.vector(n) for f in bcs.forms]

    def lead_of(v):
        for k in range(n - 1, -1, -1):
            if abs(v[k]) > tol or abs(v[n + k]) > tol:
                return k, np.array([v[k], v[n + k]])
        return -1, None

    changed = True
    while changed:
        changed = False
        info = []
        for v in vecs:
            d, lead = lead_of(v)
            if d < 0:
                raise DependentForms("a form reduced to zero during normalization")
            info.append((d, lead))
        for order in range(n - 1, -1, -1):
            idxs = [i for i in range(len(vecs)) if info[i][0] == order]
            if len(idxs) <= 1:
                continue
            idxs.sort(key=lambda i: -(abs(info[i][1][0]) + abs(info[i][1][1])))
            pivots = []
            for i in idxs:
                v = info[i][1]
                if not pivots:
                    pivots.append(i)
                    continue
                if len(pivots) == 1:
                    w = info[pivots[0]][1]
                    # proportional leading pairs: cancel; otherwise keep as pivot
                    cross = v[0] * w[1] - v[1] * w[0]
                    if abs(cross) > tol * max(1.0, np.abs(v).max() * np.abs(w).max()):
                        pivots.append(i)
                        continue
                    c = (v @ w.conj()) / (w @ w.conj())
                    vecs[i] = vecs[i] - c * vecs[pivots[0]]
                else:
                    W = np.stack([info[pivots[0]][1], info[pivots[1]][1]], axis=1)
                    c = np.linalg.solve(W, v)
                    vecs[i] = vecs[i] - c[0] * vecs[pivots[0]] - c[1] * vecs[pivots[1]]
                changed = True
            if changed:
                break
    forms = tuple(_form_from_vector(v, n, tol) for v in vecs)
    return BoundaryConditionSet(n, forms)


def classify_shape(bcs: BoundaryConditionSet) -> str:
    """Classify a normalized set as almost-separated, quasi-periodic or other."""
    n = bcs.n
    tol = REL_TOL * bcs.coeff_scale()
    a_only = sum(1 for f in bcs.forms
                 if abs(f.a_lead) > tol and abs(f.b_lead) <= tol)
    b_only = sum(1 for f in bcs.forms
                 if abs(f.b_lead) > tol and abs(f.a_lead) <= tol)
    # endpoint-0 forms for orders below n/2, endpoint-1 forms at or above
    n_low = (n + 1) // 2
    if a_only + b_only == n and a_only == n_low:
        return ALMOST_SEPARATED
    if sorted(bcs.degrees) == list(range(n)):
        ratios = []
        for f in bcs.forms:
            if abs(f.b_lead) <= tol or abs(f.a_lead) <= tol:
                break
            ratios.append(f.a_lead / f.b_lead)
        else:
            theta = ratios[0]
            if abs(theta) > tol and all(abs(r - theta) <= REL_TOL * 10 * abs(theta)
                                        for r in ratios):
                return QUASI_PERIODIC
    return OTHER
