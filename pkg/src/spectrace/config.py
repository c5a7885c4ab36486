"""Declarative problem configuration: TOML files in, plain dicts out.

Complex numbers are encoded as two-element [re, im] arrays everywhere.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from spectrace.bc import BoundaryConditionSet
from spectrace.measure import Measure


def _c(v):
    """[re, im] -> complex; bare numbers are taken as real."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex values are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v), 0.0)


def _c2(v):
    return [float(v.real), float(v.imag)]


@dataclass(frozen=True)
class RunParams:
    annuli: tuple = (0, 40)
    tolerance: float = 5e-2
    oracle: str = "all"
    out: str = "."

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        annuli = tuple(d.get("annuli", (0, 40)))
        if len(annuli) != 2 or annuli[0] < 0 or annuli[1] <= annuli[0]:
            raise ValueError(f"annuli must be [first, last] with first < last, "
                             f"got {annuli}")
        return cls(annuli=annuli,
                   tolerance=float(d.get("tolerance", 5e-2)),
                   oracle=str(d.get("oracle", "all")),
                   out=str(d.get("out", ".")))

    def to_dict(self):
        return {"annuli": list(self.annuli), "tolerance": self.tolerance,
                "oracle": self.oracle, "out": self.out}


@dataclass(frozen=True)
class ProblemConfig:
    n: int
    forms: tuple            # ((p complex list, q complex list), ...)
    measure: Measure = field(default_factory=Measure)
    run: RunParams = field(default_factory=RunParams)

    @classmethod
    def from_dict(cls, d):
        try:
            n = int(d["n"])
            forms = []
            for j, f in enumerate(d.get("forms", [])):
                p = [_c(v) for v in f.get("p", [])]
                q = [_c(v) for v in f.get("q", [])]
                forms.append((tuple(p), tuple(q)))
            m = d.get("measure", {}) or {}
            atoms = [(float(a["x"]), _c(a["h"])) for a in m.get("atoms", [])]
            density = [(float(p["a"]), float(p["b"]), _c(p["value"]))
                       for p in m.get("density", [])]
            measure = Measure(atoms=tuple(atoms), density=tuple(density))
            run = RunParams.from_dict(d.get("run"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed problem config: {exc}") from exc
        return cls(n=n, forms=tuple(forms), measure=measure, run=run)

    @classmethod
    def from_toml(cls, path):
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ValueError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "n": self.n,
            "forms": [{"p": [_c2(c) for c in p], "q": [_c2(c) for c in q]}
                      for p, q in self.forms],
            "measure": {
                "atoms": [{"x": x, "h": _c2(h)} for x, h in self.measure.atoms],
                "density": [{"a": a, "b": b, "value": _c2(v)}
                            for a, b, v in self.measure.density],
            },
            "run": self.run.to_dict(),
        }

    def boundary_conditions(self):
        return BoundaryConditionSet.from_coeff_arrays(self.n, self.forms)
