"""Finite complex measures on [0, 1]: interior atoms plus an optional
piecewise-constant density."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# pieces thinner than this are dropped at construction
MIN_PIECE = 1e-12


class UnsupportedEndpointDerivative(ValueError):
    """Measure has a nonzero density value at an endpoint."""


@dataclass(frozen=True)
class Measure:
    """atoms: ((x, h), ...) with 0 < x < 1; density: ((a, b, value), ...)."""

    atoms: tuple = ()
    density: tuple = ()

    def __post_init__(self):
        atoms = tuple(sorted(((float(x), complex(h)) for x, h in self.atoms),
                             key=lambda t: t[0]))
        for x, _ in atoms:
            if not 0.0 < x < 1.0:
                raise ValueError(f"atom at x={x} is not interior to (0, 1)")
        pieces = []
        for a, b, v in self.density:
            a, b, v = float(a), float(b), complex(v)
            if not (0.0 <= a < b <= 1.0):
                raise ValueError(f"density piece [{a}, {b}] not inside [0, 1]")
            if b - a > MIN_PIECE:
                pieces.append((a, b, v))
        pieces.sort(key=lambda t: t[0])
        for (a1, b1, _), (a2, _, _) in zip(pieces, pieces[1:]):
            if a2 < b1 - MIN_PIECE:
                raise ValueError("density pieces overlap")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "density", tuple(pieces))

    @property
    def is_zero(self):
        return not self.atoms and all(v == 0 for _, _, v in self.density)

    @property
    def total(self):
        t = sum(h for _, h in self.atoms)
        t += sum(v * (b - a) for a, b, v in self.density)
        return complex(t)

    def distribution(self, x):
        """Q(x) = measure of [0, x] (right-continuous)."""
        q = sum(h for xp, h in self.atoms if xp <= x)
        for a, b, v in self.density:
            if x > a:
                q += v * (min(x, b) - a)
        return complex(q)

    @property
    def dQa(self):
        """Density value just right of 0."""
        for a, b, v in self.density:
            if a <= MIN_PIECE:
                return complex(v)
        return 0j

    @property
    def dQb(self):
        """Density value just left of 1."""
        for a, b, v in self.density:
            if b >= 1.0 - MIN_PIECE:
                return complex(v)
        return 0j

    def atom_at(self, x, tol=1e-12):
        """Mass of the atom at x (0 if none within tol)."""
        return complex(sum(h for xp, h in self.atoms if abs(xp - x) < tol))

    @property
    def midpoint_mass(self):
        return self.atom_at(0.5)

    def scaled(self, t):
        return Measure(
            atoms=tuple((x, t * h) for x, h in self.atoms),
            density=tuple((a, b, t * v) for a, b, v in self.density),
        )

    def require_flat_endpoints(self):
        if self.dQa != 0 or self.dQb != 0:
            raise UnsupportedEndpointDerivative(
                "measure has a nonzero density value at an endpoint; "
                "only Q'(0) = Q'(1) = 0 is supported")
