"""Eigenvalues of the free and measure-perturbed operators.

Roots of the characteristic determinant are located annulus by annulus in a
rotated copy of the principal z-sector chosen so that the sector boundary
rays stay far from the eigenvalue rays.  Counts come from the argument
principle along each annulus boundary; positions from Newton iteration on
the scaled determinant, seeded by the asymptotic root families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from spectrace.bc import BoundaryConditionSet, normalize, validate
from spectrace.determinants import (
    GAMMA1,
    GAMMA2,
    WCore,
    _check_sector,
    leading_matrix,
    nu,
    regularity,
)
from spectrace.measure import Measure


class CountMismatch(RuntimeError):
    """Winding number and located roots disagree on some annulus."""

    def __init__(self, annulus, msg):
        super().__init__(f"annulus {annulus}: {msg}")
        self.annulus = annulus


class ContourTooClose(RuntimeError):
    """No admissible contour radius could be found near the requested one."""


# ---------------------------------------------------------------------------
# elementary building blocks
# ---------------------------------------------------------------------------

def fundamental_matrix(n: int, z: complex, x0: float, x1: float):
    """Propagator of Cauchy data for (-i)^n y^(n) = z^n y from x0 to x1.

    Exact discrete-Fourier form over the exponential basis; entries grow like
    e^{|z||x1-x0|}, so this raw form is meant for moderate arguments.
    """
    h = x1 - x0
    mu = 1j * z * np.exp(2j * np.pi * np.arange(n) / n)
    iz = 1j * z
    emu = np.exp(mu * h)
    M = np.empty((n, n), dtype=complex)
    rpow = np.exp(2j * np.pi * np.arange(n) / n)
    for j in range(n):
        for l in range(n):
            M[j, l] = iz ** (j - l) / n * np.sum(rpow ** ((j - l) % n) * emu)
    return M


def atom_jump(n: int, h: complex, y_value: complex) -> complex:
    """Jump of y^(n-1) across an atom of mass h: all lower derivatives
    stay continuous and (-i)^n [y^(n-1)] + h y = 0."""
    return -h * y_value / (-1j) ** n


# ---------------------------------------------------------------------------
# spectral problem and perturbed determinant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumSlice:
    ell: int
    r_inner: float
    r_outer: float
    eigen_z: tuple
    eigen_lambda: tuple
    multiplicities: tuple
    residuals: tuple

    @property
    def count(self):
        return int(sum(self.multiplicities))


class SpectralProblem:
    """Order, normalized regular boundary conditions, and a measure."""

    def __init__(self, n, bcs: BoundaryConditionSet, measure: Measure | None = None,
                 r_inner=0.4, newton_tol=1e-13):
        diags = validate(bcs)
        if diags:
            raise ValueError("invalid boundary conditions: " + "; ".join(diags))
        self.n = int(n)
        if bcs.n != self.n:
            raise ValueError("order mismatch between n and boundary conditions")
        self.bcs = normalize(bcs)
        self.measure = measure if measure is not None else Measure()
        self.report = regularity(self.bcs)  # raises NotRegular
        self.r_inner = float(r_inner)
        self.newton_tol = float(newton_tol)
        self.sector_offset = -np.pi / n if n % 2 == 0 else -np.pi / (2 * n)
        self.sector_width = 2 * np.pi / n
        self._radii = []

    # ---- asymptotic families ------------------------------------------

    def families(self):
        """(ray angle, alpha) per asymptotic root family: z ~ e^{i ray}(2 pi N + alpha)."""
        n = self.n
        if n % 2 == 0:
            return [(0.0, complex(self.report.alpha1)),
                    (0.0, complex(self.report.alpha2))]
        det = np.linalg.det
        # edge polynomial on the Arg ~ 0 ray
        n1 = nu(n, GAMMA1)
        M0 = leading_matrix(self.bcs, "plain", split=n1)
        Mb = M0.copy()
        Mb[:, 0] = self.bcs.b_leads
        xi_a = _safe_ratio(-det(M0), det(Mb))
        # edge polynomial on the mid ray Arg ~ pi/n
        n2 = nu(n, GAMMA2)
        mstar = (n + 1) // 2
        d = np.array(self.bcs.degrees)
        M0 = leading_matrix(self.bcs, "plain", split=n2)
        Ma = M0.copy()
        Ma[:, mstar - 1] = self.bcs.a_leads * np.exp(
            2j * np.pi * (mstar - 1) * d / n)
        xi_b = _safe_ratio(-det(M0), det(Ma))
        return [(0.0, -1j * np.log(xi_a)), (np.pi / n, -1j * np.log(xi_b))]

    def radius_phases(self):
        """Asymptotic |z| phases of the root families, mod 2 pi, merged."""
        phases = sorted((a.real % (2 * np.pi)) for _, a in self.families())
        merged = [phases[0]]
        for c in phases[1:]:
            if c - merged[-1] > 0.5 and (merged[0] + 2 * np.pi - c) > 0.5:
                merged.append(c)
        return merged

    def contour_phases(self):
        """Ideal circle-radius phases separating the root families."""
        cs = self.radius_phases()
        if len(cs) == 1:
            return [(cs[0] + np.pi) % (2 * np.pi)]
        m1 = (cs[0] + cs[1]) / 2
        m2 = (cs[1] + cs[0] + 2 * np.pi) / 2 % (2 * np.pi)
        return sorted({round(m1, 12), round(m2, 12)})

    # ---- determinant evaluation ----------------------------------------

    def eval_det(self, z, perturbed=True):
        """(mantissa, complex log factor) of the characteristic determinant.

        Batched over z; works anywhere off z=0 (no sector restriction)."""
        z = np.asarray(z, dtype=complex)
        meas = self.measure if perturbed else Measure()
        if meas.is_zero:
            core = WCore(self.bcs, z)
            return core.det_pair()
        if meas.density:
            return _det_propagated(self, z, meas)
        return _bordered_det(self, z, meas)

    def has_zero_eigenvalue(self, tol=1e-9):
        """Whether lambda = 0 is an eigenvalue (polynomial solutions test)."""
        n = self.n
        F = np.zeros((n, n), dtype=complex)
        for r, f in enumerate(self.bcs.forms):
            for t in range(n):
                v = f.p.coefficient(t) * math.factorial(t)
                for j in range(t + 1):
                    v += f.q.coefficient(j) * (math.factorial(t)
                                               / math.factorial(t - j))
                F[r, t] = v
        scale = np.prod(np.maximum(np.abs(F).sum(axis=1), 1e-30))
        return abs(np.linalg.det(F)) <= tol * scale

    # ---- contour radii --------------------------------------------------

    def contour_radii(self, count):
        """First `count` separating circle radii (auto-adjusted), ascending."""
        while len(self._radii) < count:
            self._extend_radii(count)
        return self._radii[:count]

    def _extend_radii(self, count):
        phases = self.contour_phases()
        start = max(2.0, self.r_inner + 1.0)
        ideal = []
        t = 0
        while len(ideal) < count + 2:
            for m in phases:
                r = m + 2 * np.pi * t
                if r >= start:
                    ideal.append(r)
            t += 1
        ideal.sort()
        gap = np.pi if len(phases) > 1 else 2 * np.pi
        for r in ideal[len(self._radii):count]:
            self._radii.append(self._adjust_radius(r, 0.2 * gap))

    def _adjust_radius(self, r, window):
        cands = r + window * np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
        cands = cands[cands > self.r_inner + 0.5]
        th = (self.sector_offset
              + np.linspace(0, self.sector_width, 96, endpoint=False))
        best, best_floor = None, -1.0
        for rc in cands:
            zs = rc * np.exp(1j * th)
            floor = np.inf
            for pert in (False, True):
                m, _ = self.eval_det(zs, perturbed=pert)
                floor = min(floor, _dip_quality(np.abs(m)))
            if floor > best_floor:
                best, best_floor = rc, floor
        if best is None or best_floor < 1e-8:
            raise ContourTooClose(f"no admissible radius near {r}")
        return float(best)


def _safe_ratio(num, den):
    """num/den defaulting to 1 when the edge coefficient degenerates; the
    resulting seeds are then only coarse, which the winding checks absorb."""
    if abs(den) < 1e-12 * max(abs(num), 1.0) or abs(num) < 1e-300:
        return 1.0 + 0j
    return num / den


def _dip_quality(absm, win=4):
    """Smallest ratio of a sample to the largest neighbor within `win` steps.

    Scale-free detector of narrow dips (a root close to the path): smooth
    magnitude variation keeps the ratio moderate, a nearby zero drives it
    toward zero.
    """
    n = absm.size
    worst = 1.0
    for i in range(n):
        lo, hi = max(0, i - win), min(n, i + win + 1)
        ref = np.max(absm[lo:hi])
        if ref > 0:
            worst = min(worst, absm[i] / ref)
    return float(worst)


def _bordered_det(problem, z, measure):
    """Perturbed determinant det(W) * det(I_p + h_k G0(x_j, x_k, z^n)).

    Assembled from the scaled kernel M = det(W) G0 as
    det(det(W) I + M) / det(W)^{p-1}, which has no pole on the free
    spectrum; within a rounding-error neighbourhood of it the first-order
    form det(W) + tr(M) is used instead.
    """
    core = WCore(problem.bcs, z)
    val, lf = core.detW, core.logfac
    atoms = measure.atoms
    p = len(atoms)
    if p:
        B = core.z.shape[0]
        M = np.zeros((B, p, p), dtype=complex)
        for j in range(p):
            for k in range(p):
                M[:, j, k] = atoms[k][1] * core.green_kernel(
                    atoms[j][0], atoms[k][0], scaled=True)
        if p == 1:
            val = val + M[:, 0, 0]
        else:
            A = M + val[:, None, None] * np.eye(p)[None, :, :]
            num = np.linalg.det(A)
            mscale = np.max(np.abs(M), axis=(1, 2))
            small = np.abs(val) < 1e-9 * mscale
            with np.errstate(divide="ignore", invalid="ignore"):
                full = num / val ** (p - 1)
            first_order = val + np.einsum("bii->b", M)
            val = np.where(small, first_order, full)
    if core.scalar:
        return val[0], lf[0]
    return val, lf


def _det_propagated(problem, z, measure, cap=40.0):
    """Cauchy-data propagation through density pieces and atoms.

    Intended for moderate |z|: no reorthogonalization is performed, only
    per-column rescaling, so accuracy degrades once e^{|z| spread} exhausts
    double precision.
    """
    n = problem.n
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    out_v = np.empty(zz.shape, dtype=complex)
    out_l = np.empty(zz.shape, dtype=complex)
    events = _piece_events(measure)
    for i, zi in enumerate(zz):
        out_v[i], out_l[i] = _det_propagated_scalar(problem, zi, events, cap)
    if np.asarray(z).ndim == 0:
        return out_v[0], out_l[0]
    return out_v, out_l


def _piece_events(measure):
    """Ordered sweep events: (x_from, x_to, density_value) and atoms."""
    bounds = {0.0, 1.0}
    for a, b, _ in measure.density:
        bounds.update((a, b))
    for x, _ in measure.atoms:
        bounds.add(x)
    xs = sorted(bounds)
    segs = []
    for a, b in zip(xs, xs[1:]):
        v = 0j
        for pa, pb, pv in measure.density:
            if pa <= a and b <= pb:
                v = pv
                break
        segs.append((a, b, v))
    return segs, dict(measure.atoms)


def _det_propagated_scalar(problem, z, events, cap):
    n = problem.n
    segs, atoms = events
    rho = np.exp(2j * np.pi / n)
    Y = np.eye(n, dtype=complex)          # Cauchy data of the n solutions
    logs = np.zeros(n)                    # per-column extracted log scales
    for a, b, v in segs:
        zn_loc = z ** n - v
        zloc = zn_loc ** (1.0 / n)
        mu = 1j * zloc * rho ** np.arange(n)
        V = np.vander(mu, n, increasing=True).T          # rows = powers
        h = b - a
        spread = float(np.max(mu.real) - np.min(mu.real))
        nsub = max(1, int(np.ceil(spread * h / cap)))
        E = np.exp(mu * (h / nsub))
        for _ in range(nsub):
            C = np.linalg.solve(V, Y)
            Y = V @ (E[:, None] * C)
            s = np.maximum(np.abs(Y).max(axis=0), 1e-300)
            Y /= s[None, :]
            logs += np.log(s)
        if b in atoms:
            Y[n - 1, :] = Y[n - 1, :] + atom_jump(n, atoms[b], 1.0) * Y[0, :]
    rowsc = (1j * z) ** np.array(problem.bcs.degrees)
    G = np.empty((n, n), dtype=complex)
    for r, f in enumerate(problem.bcs.forms):
        pr = np.array([f.p.coefficient(t) for t in range(n)])
        qr = np.array([f.q.coefficient(t) for t in range(n)])
        for c in range(n):
            G[r, c] = (pr[c] * np.exp(-logs[c]) + qr @ Y[:, c]) / rowsc[r]
    val = np.linalg.det(G)
    lf = np.sum(logs) + problem.bcs.kappa * np.log(1j * z)
    return val, lf


def char_det_q(problem: SpectralProblem, z):
    """Scaled perturbed characteristic determinant in the principal sector."""
    _check_sector(problem.n, z)
    return problem.eval_det(z, perturbed=True)


# ---------------------------------------------------------------------------
# winding counts and root polishing
# ---------------------------------------------------------------------------

def _phase_track(evalfn, zs, max_rounds=14, step_limit=1.2):
    """Total continuous phase increment of the determinant along a path."""
    zs = np.asarray(zs, dtype=complex)
    m, lf = evalfn(zs)
    th = np.angle(m) + lf.imag
    absm = np.abs(m)
    for _ in range(max_rounds):
        d = np.angle(np.exp(1j * np.diff(th)))
        bad = np.abs(d) > step_limit
        if not bad.any():
            break
        idx = np.nonzero(bad)[0]
        zmid = 0.5 * (zs[idx] + zs[idx + 1])
        mm, lfm = evalfn(zmid)
        thm = np.angle(mm) + lfm.imag
        zs = np.insert(zs, idx + 1, zmid)
        th = np.insert(th, idx + 1, thm)
        absm = np.insert(absm, idx + 1, np.abs(mm))
    else:
        raise ContourTooClose("phase tracking did not resolve; contour too "
                              "close to a root")
    d = np.angle(np.exp(1j * np.diff(th)))
    return float(d.sum()), float(absm.min()), float(np.median(absm))


def _newton_batch(evalfn, seeds, span, tol, iters=60):
    """Vectorized Newton with numerical derivative and step limiting."""
    z = np.asarray(seeds, dtype=complex).copy()
    active = np.ones(z.shape, dtype=bool)
    converged = np.zeros(z.shape, dtype=bool)
    for _ in range(iters):
        if not active.any():
            break
        za = z[active]
        h = 1e-7 * (1 + np.abs(za))
        m0, l0 = evalfn(za)
        mp, lp = evalfn(za + h)
        mm, lm = evalfn(za - h)
        ref = l0.real
        f0 = m0 * np.exp(1j * l0.imag)
        fp = mp * np.exp(lp - ref)
        fm = mm * np.exp(lm - ref)
        df = (fp - fm) / (2 * h)
        with np.errstate(all="ignore"):
            step = -f0 / df
        step = np.where(np.isfinite(step), step, 0.0)
        big = np.abs(step) > span
        step = np.where(big, step * span / np.maximum(np.abs(step), 1e-300), step)
        za = za + step
        done = np.abs(step) < tol * (1 + np.abs(za))
        idx = np.nonzero(active)[0]
        z[idx] = za
        converged[idx[done]] = True
        active[idx[done]] = False
    return z, converged


def _tiny_winding(evalfn, z0, radius):
    th = np.linspace(0, 2 * np.pi, 48, endpoint=True)
    tot, _, _ = _phase_track(evalfn, z0 + radius * np.exp(1j * th))
    return int(round(tot / (2 * np.pi)))


def find_eigenvalues(problem: SpectralProblem, annuli) -> list:
    """Spectrum slices of the problem's own measure (which may be zero)."""
    return _slices(problem, annuli, perturbed=True)


def find_eigenvalue_pair(problem: SpectralProblem, annuli):
    """(perturbed, unperturbed) slices over identical contours."""
    return (_slices(problem, annuli, perturbed=True),
            _slices(problem, annuli, perturbed=False))


def _slices(problem, annuli, perturbed):
    annuli = list(annuli)
    if not annuli:
        return []
    lmax = max(annuli)
    radii = problem.contour_radii(lmax + 1)
    evalfn = lambda zz: problem.eval_det(zz, perturbed=perturbed)
    out = []
    for ell in annuli:
        r_in = problem.r_inner if ell == 0 else radii[ell - 1]
        r_out = radii[ell]
        out.append(_solve_annulus(problem, evalfn, ell, r_in, r_out))
    return out


def _annulus_winding(problem, evalfn, r_in, r_out):
    th_lo = problem.sector_offset
    th_hi = problem.sector_offset + problem.sector_width
    def arc(r):
        npts = int(3 * r * problem.sector_width) + 64
        th = np.linspace(th_lo, th_hi, npts)
        return _phase_track(evalfn, r * np.exp(1j * th))
    def radial(theta):
        npts = int(3 * (r_out - r_in)) + 24
        rr = np.linspace(r_in, r_out, npts)
        return _phase_track(evalfn, rr * np.exp(1j * theta))
    a_out, fo, so = arc(r_out)
    a_in, fi, si = arc(r_in)
    r_lo, fl, _ = radial(th_lo)
    r_hi, fh, _ = radial(th_hi)
    total = r_lo + a_out - r_hi - a_in
    floor = min(fo, fi, fl, fh)
    scale = max(so, si)
    return total / (2 * np.pi), floor, scale


def _solve_annulus(problem, evalfn, ell, r_in, r_out):
    wind, _, _ = _annulus_winding(problem, evalfn, r_in, r_out)
    count = int(round(wind))
    if abs(wind - count) > 0.05:
        raise CountMismatch(ell, f"non-integer winding {wind:.3f}")
    if count == 0:
        return SpectrumSlice(ell, r_in, r_out, (), (), (), ())
    seeds = _annulus_seeds(problem, r_in, r_out)
    found = _polish(problem, evalfn, seeds, r_in, r_out)
    for nr, nth in ((10, 48), (24, 96)):
        if len(found) == count:
            break
        extra = _grid_seeds(problem, evalfn, r_in, r_out, nr=nr, nth=nth)
        found = _polish(problem, evalfn, seeds + extra, r_in, r_out)
    if len(found) != count:
        # winding-guided subdivision isolates the remaining roots
        boxes = _subdivide(evalfn, r_in, r_out, problem.sector_offset,
                           problem.sector_offset + problem.sector_width)
        centers = [0.5 * (a + b) * np.exp(0.5j * (c + d))
                   for a, b, c, d in boxes]
        found = _polish(problem, evalfn, seeds + centers, r_in, r_out)
    roots = _assign_multiplicities(evalfn, found, count)
    if roots is None:
        raise CountMismatch(
            ell, f"winding {count} but located {len(found)} distinct root(s)")
    roots.sort(key=lambda t: _principal_angle(problem.n, t[0]))
    zs, mults, resid = [], [], []
    for z, m, r in roots:
        zp = _to_principal(problem.n, z)
        zs.append(zp)
        mults.append(m)
        resid.append(r)
    lams = [zp ** problem.n for zp in zs]
    return SpectrumSlice(ell, r_in, r_out, tuple(zs), tuple(lams),
                         tuple(mults), tuple(resid))


def _assign_multiplicities(evalfn, found, count):
    """Multiplicities so that the total matches the winding count."""
    if len(found) == count:
        return [(z, 1, r) for z, r in found]
    if not found or len(found) > count:
        return None
    roots = []
    for z, r in found:
        try:
            w = _tiny_winding(evalfn, z, 5e-4 * (1 + abs(z)))
        except ContourTooClose:
            w = 1
        roots.append((z, max(w, 1), r))
    if sum(m for _, m, _ in roots) != count:
        return None
    return roots


def _to_principal(n, z):
    rho = np.exp(2j * np.pi / n)
    ang = np.angle(z)
    # snap angles a rounding error below zero onto the Arg = 0 ray
    m = int(np.floor((ang + 1e-12) / (2 * np.pi / n)))
    return z * rho ** (-m)


def _principal_angle(n, z):
    return float(np.angle(_to_principal(n, z)))


def _annulus_seeds(problem, r_in, r_out):
    seeds = []
    for ray, alpha in problem.families():
        lo = int(np.floor((r_in - alpha.real) / (2 * np.pi))) - 1
        hi = int(np.ceil((r_out - alpha.real) / (2 * np.pi))) + 1
        for N in range(max(lo, 0), hi + 1):
            s = np.exp(1j * ray) * (2 * np.pi * N + alpha)
            if r_in < abs(s) < r_out:
                seeds.append(complex(s))
    return seeds


def _region_winding(evalfn, r0, r1, t0, t1):
    def arc(r):
        npts = int(3 * r * (t1 - t0)) + 48
        return _phase_track(evalfn, r * np.exp(1j * np.linspace(t0, t1, npts)))[0]

    def radial(t):
        npts = int(3 * (r1 - r0)) + 24
        return _phase_track(evalfn, np.linspace(r0, r1, npts) * np.exp(1j * t))[0]

    return (radial(t0) + arc(r1) - radial(t1) - arc(r0)) / (2 * np.pi)


def _subdivide(evalfn, r0, r1, t0, t1, max_boxes=24):
    """Boxes of the annulus sector that each enclose at least one root,
    bisected until small; a split line falling on a root is nudged."""
    done = []
    todo = [(r0, r1, t0, t1)]
    while todo and len(done) + len(todo) < max_boxes:
        a, b, c, d = todo.pop()
        try:
            w = int(round(_region_winding(evalfn, a, b, c, d)))
        except ContourTooClose:
            done.append((a, b, c, d))
            continue
        if w <= 0:
            continue
        mid_r = 0.5 * (a + b)
        if w == 1 and max(b - a, mid_r * (d - c)) < 0.2 * (1 + mid_r * 0.02):
            done.append((a, b, c, d))
            continue
        radial_extent = b - a
        arc_extent = mid_r * (d - c)
        for frac in (0.5, 0.46, 0.55):
            if radial_extent >= arc_extent:
                m = a + frac * (b - a)
                parts = [(a, m, c, d), (m, b, c, d)]
            else:
                m = c + frac * (d - c)
                parts = [(a, b, c, m), (a, b, m, d)]
            try:
                ws = [int(round(_region_winding(evalfn, *p))) for p in parts]
            except ContourTooClose:
                continue
            if sum(ws) == w:
                todo.extend(p for p, wp in zip(parts, ws) if wp > 0)
                break
        else:
            done.append((a, b, c, d))
    done.extend(todo)
    return done


def _grid_seeds(problem, evalfn, r_in, r_out, nr=10, nth=48, keep=16):
    """Deepest magnitude samples on a polar grid over the annulus sector,
    separated so that distinct dips each contribute one seed."""
    rr = np.linspace(r_in, r_out, nr + 2)[1:-1]
    th = problem.sector_offset + np.linspace(
        0.02, problem.sector_width - 0.02, nth)
    Z = (rr[:, None] * np.exp(1j * th)[None, :]).ravel()
    m, lf = evalfn(Z)
    la = np.log(np.maximum(np.abs(m), 1e-300)) + lf.real
    cell = max((r_out - r_in) / nr, r_out * problem.sector_width / nth)
    sep = max(3 * cell, 0.35)
    seeds = []
    for i in np.argsort(la):
        zi = complex(Z[i])
        if all(abs(zi - s) > sep for s in seeds):
            seeds.append(zi)
        if len(seeds) >= keep:
            break
    return seeds


def _polish(problem, evalfn, seeds, r_in, r_out):
    if not seeds:
        return []
    span = min(1.0, 0.5 * (r_out - r_in))
    z, conv = _newton_batch(evalfn, seeds, span, problem.newton_tol)
    # second chance for double roots: multiplicity-weighted step
    if not conv.all():
        z2 = z[~conv].copy()
        for _ in range(40):
            h = 1e-7 * (1 + np.abs(z2))
            m0, l0 = evalfn(z2)
            mp, lp = evalfn(z2 + h)
            mm, lm = evalfn(z2 - h)
            ref = l0.real
            f0 = m0 * np.exp(1j * l0.imag)
            fp = mp * np.exp(lp - ref)
            fm = mm * np.exp(lm - ref)
            df = (fp - fm) / (2 * h)
            with np.errstate(all="ignore"):
                step = -2.0 * f0 / df
            step = np.where(np.isfinite(step), step, 0.0)
            big = np.abs(step) > span
            step = np.where(big, step * span / np.maximum(np.abs(step), 1e-300),
                            step)
            z2 = z2 + step
            if np.all(np.abs(step) < 1e-6 * (1 + np.abs(z2))):
                break
        z[~conv] = z2
    m, lf = evalfn(z)
    # residual relative to the local determinant scale a short step away
    delta = 0.15 * (1 + np.abs(z))
    ref = np.zeros(z.shape)
    for off in (delta, -delta, 1j * delta):
        mr, lr = evalfn(z + off)
        ref = np.maximum(ref, np.abs(mr) * np.exp(np.clip(
            lr.real - lf.real, -50, 50)))
    ok = np.abs(m) < 1e-7 * np.maximum(ref, 1e-280)
    rad = np.abs(z)
    ok &= (rad > r_in) & (rad < r_out)
    ang = np.angle(z * np.exp(-1j * (problem.sector_offset
                                     + problem.sector_width / 2)))
    ok &= np.abs(ang) < problem.sector_width / 2
    pts = z[ok]
    res = np.abs(m[ok])
    clusters = []
    for zp, rr in zip(pts, res):
        for c in clusters:
            if abs(zp - c[0][0]) < 1e-5 * (1 + abs(zp)):
                c.append((zp, rr))
                break
        else:
            clusters.append([(zp, rr)])
    found = []
    for c in clusters:
        zbest, rbest = min(c, key=lambda t: t[1])
        found.append((complex(zbest), float(rbest)))
    return found
