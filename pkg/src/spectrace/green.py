"""Green-function oracles: the resolvent diagonal, contour integrals of the
trace density, and the one-dimensional limit integral for the midpoint
coefficient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from spectrace.determinants import RegularityReport, WCore
from spectrace.measure import Measure
from spectrace.spectrum import SpectralProblem

# 15-point Kronrod rule with embedded 7-point Gauss rule
_XK = np.array([
    0.0, 0.2077849550078985, 0.4058451513773972, 0.5860872354676911,
    0.7415311855993944, 0.8648644233597691, 0.9491079123427585,
    0.9914553711208126,
])
_WK = np.array([
    0.2094821410847278, 0.2044329400752989, 0.1903505780647854,
    0.1690047266392679, 0.1406532597155259, 0.1047900103222502,
    0.0630920926299786, 0.0229353220105292,
])
_WG = np.array([
    0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
    0.1294849661688697,
])

_K_NODES = np.concatenate([-_XK[:0:-1], _XK])               # 15 ascending
_K_WEIGHTS = np.concatenate([_WK[:0:-1], _WK])
_G_MASK = np.zeros(15, dtype=bool)
_G_MASK[1::2] = True                                          # Gauss points
_G_WEIGHTS = np.concatenate([_WG[:0:-1], _WG])


class NearSpectrum(RuntimeError):
    """Evaluation point too close to an eigenvalue of the free operator."""


class QuadratureNotConverged(RuntimeError):
    """Adaptive contour quadrature hit its evaluation budget."""


class PoleOnPath(RuntimeError):
    """A pole of the limit integrand lies on the positive real axis."""


@dataclass
class GreenDiagonal:
    """Evaluation context for Green-function oracles of one problem."""

    problem: SpectralProblem
    floor_rel: float = 1e-9
    rel_tol: float = 1e-8
    max_evals: int = 2 ** 14

    @property
    def n(self):
        return self.problem.n


def _floor_scale(core):
    norms = np.sqrt((np.abs(core.Wt) ** 2).sum(axis=2))
    return np.prod(np.maximum(norms, 1e-30), axis=1)


def green_diag(ctx: GreenDiagonal, x: float, z, include_diagonal=True):
    """Resolvent kernel on the diagonal, G0(x, x, z^n)."""
    core = WCore(ctx.problem.bcs, z)
    small = np.abs(core.detW) < ctx.floor_rel * _floor_scale(core)
    if np.any(small):
        raise NearSpectrum("determinant below floor at requested z")
    out = core.green_kernel(x, x, include_diagonal=include_diagonal)
    return out


def _measure_integrand(ctx, measure, include_diagonal):
    """Vectorized z -> integral of G0(x,x,z^n) q(dx) times n z^{n-1}."""
    n = ctx.n
    pieces = measure.density
    gx = 0.5 * (_K_NODES + 1.0)

    def f(z):
        core = WCore(ctx.problem.bcs, z)
        if np.any(np.abs(core.detW) < ctx.floor_rel * _floor_scale(core)):
            raise NearSpectrum("contour passes too close to the spectrum")
        tot = np.zeros(z.shape, dtype=complex)
        for x, h in measure.atoms:
            tot += h * core.green_kernel(x, x, include_diagonal=include_diagonal)
        for a, b, v in pieces:
            if v == 0:
                continue
            xs = a + (b - a) * gx
            acc = np.zeros(z.shape, dtype=complex)
            for xx, ww in zip(xs, _K_WEIGHTS):
                acc += ww * core.green_kernel(float(xx), float(xx),
                                              include_diagonal=include_diagonal)
            tot += v * (b - a) / 2 * acc
        return tot * n * z ** (n - 1)

    return f


def _panel_edges(ctx, radius):
    """Arc panel edges, geometrically refined toward the slow-decay rays."""
    problem = ctx.problem
    lo = problem.sector_offset
    hi = problem.sector_offset + problem.sector_width
    rays = [0.0]
    if problem.n % 2:
        rays.append(np.pi / problem.n)
    edges = {lo, hi}
    for r in rays:
        s = 1.0 / max(radius, 4.0)
        while s < problem.sector_width:
            for e in (r - s, r + s):
                if lo < e < hi:
                    edges.add(e)
            s *= 2.0
        if lo < r < hi:
            edges.add(r)
    return np.array(sorted(edges))


def _adaptive_arc(ctx, f, radius, edges, rel_tol, max_evals):
    """Adaptive Gauss-Kronrod integration of f(z) dz along the arc."""
    panels = [(a, b) for a, b in zip(edges[:-1], edges[1:])]
    results = {}
    evals = 0

    def do_panels(ps):
        nonlocal evals
        th = np.concatenate([(a + b) / 2 + (b - a) / 2 * _K_NODES
                             for a, b in ps])
        z = radius * np.exp(1j * th)
        vals = f(z) * 1j * z       # dz = i z d(theta)
        evals += th.size
        for i, (a, b) in enumerate(ps):
            v = vals[15 * i:15 * (i + 1)]
            ik = (b - a) / 2 * np.sum(_K_WEIGHTS * v)
            ig = (b - a) / 2 * np.sum(_G_WEIGHTS * v[_G_MASK])
            results[(a, b)] = (ik, abs(ik - ig))

    do_panels(panels)
    while True:
        total = sum(v[0] for v in results.values())
        err = sum(v[1] for v in results.values())
        if err <= rel_tol * max(abs(total), 1e-300):
            return total
        if evals >= max_evals:
            raise QuadratureNotConverged(
                f"error {err:.2e} after {evals} evaluations")
        worst = max(results, key=lambda k: results[k][1])
        a, b = worst
        del results[worst]
        mid = 0.5 * (a + b)
        do_panels([(a, mid), (mid, b)])


def contour_trace_integral(ctx: GreenDiagonal, measure: Measure, ell: int,
                           include_diagonal=True):
    """Raw double integral of G0(x,x,lambda) q(dx) d(lambda) over contour ell.

    The caller applies i/(2 pi).  With `include_diagonal=False` the
    x-independent diagonal terms of the kernel are dropped, which realizes
    the zero-total-mass normalization of the limit statements.
    """
    if measure.is_zero:
        return 0j
    radius = ctx.problem.contour_radii(ell + 1)[ell]
    f = _measure_integrand(ctx, measure, include_diagonal)
    edges = _panel_edges(ctx, radius)
    return _adaptive_arc(ctx, f, radius, edges, ctx.rel_tol, ctx.max_evals)


def green_trajectory(ctx: GreenDiagonal, measure: Measure, ells,
                     include_diagonal=True):
    """Contour integrals for a range of contour indices."""
    return np.array([contour_trace_integral(ctx, measure, ell,
                                            include_diagonal=include_diagonal)
                     for ell in ells])


# ---------------------------------------------------------------------------
# the one-dimensional limit integral
# ---------------------------------------------------------------------------

def _limit_integral_numeric(A, B, phase, rel_tol):
    """integral over (0, inf) of e^{-iR} dt / ((t-A)(t-B)), adaptively."""

    def f_direct(t):
        return phase / ((t - A) * (t - B))

    def f_tail(u):
        # t = 1/u
        return phase / ((1 - A * u) * (1 - B * u))

    total = 0j
    for g in (f_direct, f_tail):
        panels = [(k / 8, (k + 1) / 8) for k in range(8)]
        results = {}
        evals = 0
        while True:
            missing = [p for p in panels if p not in results]
            for a, b in missing:
                t = (a + b) / 2 + (b - a) / 2 * _K_NODES
                v = g(t)
                evals += t.size
                ik = (b - a) / 2 * np.sum(_K_WEIGHTS * v)
                ig = (b - a) / 2 * np.sum(_G_WEIGHTS * v[_G_MASK])
                results[(a, b)] = (ik, abs(ik - ig))
            tot = sum(v[0] for v in results.values())
            err = sum(v[1] for v in results.values())
            if err <= rel_tol * max(abs(tot), 1e-300) or evals > 2 ** 15:
                break
            worst = max(results, key=lambda k: results[k][1])
            a, b = worst
            del results[worst]
            panels = list(results) + [(a, (a + b) / 2), ((a + b) / 2, b)]
        total += tot
    return total


def _limit_integral_closed(A, B, phase):
    """Same integral via the partial-fraction primitive with the continuous
    log branch along the path."""
    pts = [np.linspace(0, 1, 2001), 1.0 / np.linspace(1, 1e-7, 2001)[1:]]
    for pole in (A, B):
        # resolve rapid phase variation when a pole sits near the path
        if 1e-9 <= abs(pole.imag) < 0.05 and pole.real > 0:
            offs = abs(pole.imag) * 2.0 ** np.arange(-3, 14)
            loc = np.concatenate([pole.real - offs[::-1], [pole.real],
                                  pole.real + offs])
            pts.append(loc[(loc > 0) & (loc < 1e7)])
    t = np.unique(np.concatenate(pts))
    F = (t - A) / (t - B)
    ang = np.unwrap(np.angle(F))
    dlog_grid = (np.log(abs(F[-1])) - np.log(abs(F[0]))) \
        + 1j * (ang[-1] - ang[0])
    dlog_tail = -np.log(F[-1])     # F stays near 1 beyond the last sample
    return phase * (dlog_grid + dlog_tail) / (A - B)


def frak_C_via_lemma51(report: RegularityReport, R0: float, R1: float,
                       rel_tol: float = 1e-9):
    """Midpoint coefficient from the two-phase limit integrals, averaged.

    R0, R1 are the residual phases of the even/odd circle subsequences.
    Both a numerical quadrature and the closed-form primitive are computed
    and must agree; the averaged value is returned.
    """
    if not report.strongly_regular:
        raise ValueError("limit-integral oracle needs distinct Birkhoff roots")
    xi1, xi2 = report.xi1, report.xi2
    vals = []
    for R in (R0, R1):
        phase = np.exp(-1j * R)
        A, B = phase * xi1, phase * xi2
        for pole in (A, B):
            if abs(pole.imag) < 1e-9 and pole.real > -1e-9:
                raise PoleOnPath(f"pole {pole} within 1e-9 of the positive axis")
        num = _limit_integral_numeric(A, B, phase, rel_tol)
        closed = _limit_integral_closed(A, B, phase)
        if abs(num - closed) > 1e-6 * max(abs(num), abs(closed), 1e-12):
            raise QuadratureNotConverged(
                f"quadrature {num} and primitive {closed} disagree")
        vals.append(report.frak_c * closed)
    return 0.5 * (vals[0] + vals[1])
