"""Second-degree Lagrangian families L = c1(u,u')*c4(u'') + c3(u,u')*u'' + c5(u,u').

``c4`` is the double antiderivative of ``c2`` with zero integration constants,
so that L_{u''u''} = c1*c2.  Everything downstream (Euler-Lagrange residual,
ODE right-hand side, averaged action) is derived from the four free
coefficient polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .poly import MultiPoly, ParameterSet, antidifferentiate, differentiate, eval_poly, parse_poly

U_VARS = ("u", "up")
UPP_VARS = ("upp",)
L_VARS = ("u", "up", "upp")
JET_VARS = ("u", "up", "upp", "uppp", "upppp")

PRESETS = {
    "example1": {
        "c1": "d2 - d3*up",
        "c2": "1",
        "c3": "-(mu/2)*u^2",
        "c5": "-(d1/2)*up^2",
    },
    "example2": {
        "c1": "-d1 + d2*u + d3*up",
        "c2": "1",
        "c3": "u^2",
        "c5": "up^2",
    },
}
PRESET_PARAMS = {
    "example1": ("d1", "d2", "d3", "mu"),
    "example2": ("d1", "d2", "d3"),
}


class DegenerateFamilyError(ValueError):
    """c1*c2 vanishes identically, so there is no fourth-order equation."""


class NoOscillatoryTailError(ValueError):
    """The linearized equation has no real nonzero wavenumber."""


@dataclass(frozen=True)
class Jet:
    z: object
    u0: object
    u1: object
    u2: object
    u3: object
    u4: object

    def as_point(self) -> dict:
        return {"u": self.u0, "up": self.u1, "upp": self.u2, "uppp": self.u3, "upppp": self.u4}


@dataclass(frozen=True, eq=False)
class CoefficientFamily:
    c1: MultiPoly
    c2: MultiPoly
    c3: MultiPoly
    c5: MultiPoly
    c4: MultiPoly
    params: ParameterSet
    name: str = "custom"
    source: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def lagrangian(self) -> MultiPoly:
        """L as a polynomial in (u, up, upp)."""
        if "L" not in self._cache:
            c1, c3, c5 = (p.extend(L_VARS) for p in (self.c1, self.c3, self.c5))
            c4 = self.c4.extend(L_VARS)
            upp = MultiPoly.var(L_VARS, "upp")
            self._cache["L"] = c1 * c4 + c3 * upp + c5
        return self._cache["L"]

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]


def build_family(c1: MultiPoly, c2: MultiPoly, c3: MultiPoly, c5: MultiPoly,
                 params: Mapping[str, float] | None = None, name: str = "custom") -> CoefficientFamily:
    c1, c3, c5 = (p.extend(U_VARS) for p in (c1, c3, c5))
    c2 = c2.extend(UPP_VARS)
    if c1.is_zero() or c2.is_zero():
        raise DegenerateFamilyError("degenerate family: c1*c2 is identically zero (L_{u''u''} = 0)")
    c4 = antidifferentiate(antidifferentiate(c2, "upp"), "upp")
    return CoefficientFamily(c1, c2, c3, c5, c4, ParameterSet(params or {}), name)


def family_from_strings(c1: str, c2: str, c3: str, c5: str,
                        params: Mapping[str, float], name: str = "custom") -> CoefficientFamily:
    params = ParameterSet(params)
    fam = build_family(
        parse_poly(c1, U_VARS, params),
        parse_poly(c2, UPP_VARS, params),
        parse_poly(c3, U_VARS, params),
        parse_poly(c5, U_VARS, params),
        params,
        name,
    )
    return replace(fam, source=(c1, c2, c3, c5), _cache={})


def with_params(fam: CoefficientFamily, **changes: float) -> CoefficientFamily:
    """Same coefficient expressions, some parameters rebound."""
    if fam.source is None:
        raise ValueError("family was not built from expressions; cannot rebind parameters")
    c1, c2, c3, c5 = fam.source
    return family_from_strings(c1, c2, c3, c5, fam.params.replace(**changes), fam.name)


def preset(name: str, params: Mapping[str, float] | None = None, **kwargs: float) -> CoefficientFamily:
    """Built-in family ``example1`` or ``example2`` with its constants bound."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    values = dict(params or {})
    values.update(kwargs)
    missing = [p for p in PRESET_PARAMS[name] if p not in values]
    if missing:
        raise ValueError(f"preset {name} needs parameters {missing}")
    return family_from_strings(**PRESETS[name], params=values, name=name)


def lagrangian_partials(fam: CoefficientFamily) -> dict[str, MultiPoly]:
    """Partials of L expressed through the coefficient functions, over (u, up, upp)."""

    def build():
        d = differentiate
        ext = lambda p: p.extend(L_VARS)  # noqa: E731
        c1, c2, c3, c4, c5 = (ext(p) for p in (fam.c1, fam.c2, fam.c3, fam.c4, fam.c5))
        upp = MultiPoly.var(L_VARS, "upp")
        c4p = d(c4, "upp")
        c1_u, c1_up = d(c1, "u"), d(c1, "up")
        c3_u, c3_up = d(c3, "u"), d(c3, "up")
        c5_u, c5_up = d(c5, "u"), d(c5, "up")
        return {
            "L_upp_upp": c1 * c2,
            "L_upp_upp_upp": c1 * d(c2, "upp"),
            "L_up_upp_upp": c1_up * c2,
            "L_u_upp_upp": c1_u * c2,
            "L_u": c1_u * c4 + c3_u * upp + c5_u,
            "L_up": c1_up * c4 + c3_up * upp + c5_up,
            "L_up_up": d(c1_up, "up") * c4 + d(c3_up, "up") * upp + d(c5_up, "up"),
            "L_u_upp": c1_u * c4p + c3_u,
            "L_up_up_upp": d(c1_up, "up") * c4p + d(c3_up, "up"),
            "L_u_up": d(c1_u, "up") * c4 + d(c3_u, "up") * upp + d(c5_u, "up"),
            "L_u_up_upp": d(c1_u, "up") * c4p + d(c3_u, "up"),
            "L_u_u_upp": d(c1_u, "u") * c4p + d(c3_u, "u"),
        }

    return fam.cached("partials", build)


def el_parts(fam: CoefficientFamily) -> tuple[MultiPoly, MultiPoly]:
    """(leading, rest) with EL = leading*u'''' + rest, both over the jet variables."""

    def build():
        P = {k: v.extend(JET_VARS) for k, v in lagrangian_partials(fam).items()}
        u1, u2, u3 = (MultiPoly.var(JET_VARS, v) for v in ("up", "upp", "uppp"))
        rest = (
            u3 * u3 * P["L_upp_upp_upp"]
            + 2.0 * u2 * u3 * P["L_up_upp_upp"]
            - u2 * (P["L_up_up"] - P["L_u_upp"])
            + u2 * u2 * P["L_up_up_upp"]
            + 2.0 * u1 * u3 * P["L_u_upp_upp"]
            - u1 * P["L_u_up"]
            + 2.0 * u1 * u2 * P["L_u_up_upp"]
            + u1 * u1 * P["L_u_u_upp"]
            + P["L_u"]
        )
        return P["L_upp_upp"], rest

    return fam.cached("el_parts", build)


def el_polynomial(fam: CoefficientFamily) -> MultiPoly:
    """Full Euler-Lagrange expression as a polynomial in (u, up, upp, uppp, upppp)."""

    def build():
        lead, rest = el_parts(fam)
        return lead * MultiPoly.var(JET_VARS, "upppp") + rest

    return fam.cached("el_poly", build)


def el_residual(fam: CoefficientFamily, jet: Jet):
    """Left side of the variational ODE at ``jet`` (arrays are evaluated elementwise)."""
    return eval_poly(el_polynomial(fam), jet.as_point())


@dataclass(frozen=True)
class DispersionPoly:
    """P(k2) = c0 + c1*k2 + c2*k2^2 with cos(kappa*z) a linear solution iff P(kappa^2) = 0."""

    coeffs: tuple[float, float, float]

    def __call__(self, k2):
        c0, c1, c2 = self.coeffs
        return c0 + c1 * k2 + c2 * k2 * k2

    @property
    def nonzero_roots(self) -> list[float]:
        """Real nonzero roots in kappa^2, ascending."""
        c0, c1, c2 = self.coeffs
        coefs = np.trim_zeros(np.array([c2, c1, c0]), "f")
        if len(coefs) <= 1:
            return []
        roots = np.roots(coefs)
        out = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-12 * max(1.0, abs(r)))
        return [r for r in out if r != 0.0 and abs(r) > 1e-14 * max(1.0, *(abs(x) for x in out))]

    @property
    def has_real_kappa(self) -> bool:
        return any(r > 0 for r in self.nonzero_roots)

    def kappa(self) -> float:
        """Smallest positive wavenumber; raises when the tail cannot oscillate."""
        positive = [r for r in self.nonzero_roots if r > 0]
        if not positive:
            raise NoOscillatoryTailError(
                f"no real kappa: dispersion roots in kappa^2 are {self.nonzero_roots or 'none'}"
            )
        return math.sqrt(positive[0])

    def kappa_squared(self) -> float:
        """Nonzero root in kappa^2, positive preferred; may be negative."""
        roots = self.nonzero_roots
        if not roots:
            raise NoOscillatoryTailError("dispersion polynomial has no nonzero real root")
        positive = [r for r in roots if r > 0]
        return positive[0] if positive else roots[-1]


def linearized_dispersion(fam: CoefficientFamily) -> DispersionPoly:
    """Dispersion polynomial of the equation linearized about u = 0."""
    el = el_polynomial(fam)
    zero = (0,) * len(JET_VARS)
    if abs(el.terms.get(zero, 0.0)) > 0:
        raise ValueError("u = 0 is not a solution: the equation has a constant forcing term")
    for label, p in (("c3", fam.c3), ("c5", fam.c5)):
        if any(sum(exps) <= 1 for exps in p.terms):
            raise ValueError(f"{label} must not contain constant or linear monomials")
    lin = {}
    for i, v in enumerate(JET_VARS):
        key = tuple(1 if k == i else 0 for k in range(len(JET_VARS)))
        lin[v] = el.terms.get(key, 0.0)
    # odd derivatives multiply sin and have to drop out for a cosine tail
    if lin["up"] != 0 or lin["uppp"] != 0:
        raise ValueError("linearized equation has odd-derivative terms; cos tail is not a solution")
    return DispersionPoly((lin["u"], -lin["upp"], lin["upppp"]))
