"""Fels' variationality conditions for u'''' = F(u, u', u'', u''').

Condition 1 (F cubic-free in u''') is decided exactly on the rational form of
F.  Condition 2 is built exactly as six rational functions and then evaluated
at random jets, normalized by the largest summand at each jet.  z-subscripts
are read as total derivatives along solutions, with u'''' replaced by F.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .family import CoefficientFamily, DegenerateFamilyError, el_parts
from .poly import MultiPoly, RationalFn

ODE_VARS = ("u", "up", "upp", "uppp")
PASS_THRESHOLD = 1e-9
FAIL_THRESHOLD = 1e-3
HEADER_NOTE = "z-derivatives in condition 2 taken as total derivatives along solutions (u'''' -> F)"


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OdeForm:
    F: RationalFn
    family: CoefficientFamily


@dataclass(frozen=True)
class FelsReport:
    condition1_identically_zero: bool
    condition2_max_abs: float
    condition2_normalized: float
    samples: int
    seed: int

    @property
    def condition1_verdict(self) -> str:
        return "pass" if self.condition1_identically_zero else "fail"

    @property
    def condition2_verdict(self) -> str:
        if self.condition2_normalized < PASS_THRESHOLD:
            return "pass"
        if self.condition2_normalized > FAIL_THRESHOLD:
            return "fail"
        return "inconclusive"

    def as_dict(self) -> dict:
        return {
            "condition1_identically_zero": self.condition1_identically_zero,
            "condition1_verdict": self.condition1_verdict,
            "condition2_max_abs": self.condition2_max_abs,
            "condition2_normalized": self.condition2_normalized,
            "condition2_verdict": self.condition2_verdict,
            "samples": self.samples,
            "seed": self.seed,
        }

    def to_text(self) -> str:
        lines = [f"# {HEADER_NOTE}"]
        for key, value in self.as_dict().items():
            lines.append(f"{key}={_fmt(value)}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        row = self.as_dict()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(row.keys())
        writer.writerow(_fmt(v) for v in row.values())
        return buf.getvalue()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def build_F(fam: CoefficientFamily) -> OdeForm:
    """Solve the variational ODE for u'''' as a rational function of the lower jet."""
    lead, rest = el_parts(fam)
    if lead.is_zero():
        raise DegenerateFamilyError("degenerate family: c1*c2 vanishes identically")
    num = (-rest).extend(("u", "up", "upp", "uppp", "upppp")).extend(ODE_VARS)
    den = lead.extend(("u", "up", "upp", "uppp", "upppp")).extend(ODE_VARS)
    return OdeForm(RationalFn(num, den, 1), fam)


def total_derivative(g: RationalFn, form: OdeForm) -> RationalFn:
    """D_z g = u' g_u + u'' g_u' + u''' g_u'' + F g_u''' for autonomous g."""
    vars = ODE_VARS + tuple(v for v in g.vars if v not in ODE_VARS)
    g = RationalFn(g.num.extend(vars), g.base.extend(vars), g.power)
    one = lambda name: MultiPoly.var(vars, name)  # noqa: E731
    return (
        g.diff("u") * one("up")
        + g.diff("up") * one("upp")
        + g.diff("upp") * one("uppp")
        + form.F * g.diff("uppp")
    )


def condition1_holds(form: OdeForm) -> bool:
    """F_{u'''u'''u'''} == 0, decided on the exact rational form."""
    third = form.F.diff("uppp").diff("uppp").diff("uppp")
    return third.num.is_zero()


def condition2_terms(form: OdeForm) -> list[RationalFn]:
    """The six summands of Fels' second condition, in printed order."""

    def build():
        F = form.F
        F1, F2, F3 = F.diff("up"), F.diff("upp"), F.diff("uppp")
        DF3 = total_derivative(F3, form)
        DDF3 = total_derivative(DF3, form)
        DF2 = total_derivative(F2, form)
        return [
            F1,
            DDF3 * 0.5,
            -DF2,
            F3 * DF3 * (-0.75),
            F2 * F3 * 0.5,
            F3 * F3 * F3 * 0.125,
        ]

    return form.family.cached("fels_terms", build)


def sample_jets(form: OdeForm, n_samples: int, seed: int, max_retries: int = 50) -> dict:
    """Uniform jets in [-1, 1]^4 kept away from zeros of c1*c2."""
    rng = np.random.default_rng(seed)
    den = form.F.base
    pts = {v: rng.uniform(-1.0, 1.0, n_samples) for v in ODE_VARS}
    for _ in range(max_retries):
        q = np.abs(np.asarray(den(pts), dtype=float) * np.ones(n_samples))
        scale = max(float(np.max(q)), 1e-300)
        bad = q < 1e-2 * scale
        if not bad.any():
            return pts
        for v in ODE_VARS:
            pts[v][bad] = rng.uniform(-1.0, 1.0, int(bad.sum()))
    raise SamplingError("could not avoid zeros of c1*c2 while sampling jets")


def fels_check(fam: CoefficientFamily, n_samples: int = 1000, seed: int = 0) -> FelsReport:
    form = build_F(fam)
    cond1 = condition1_holds(form)
    pts = sample_jets(form, n_samples, seed)
    values = np.array([np.broadcast_to(np.asarray(t(pts), dtype=float), (n_samples,))
                       for t in condition2_terms(form)])
    total = values.sum(axis=0)
    scale = np.abs(values).max(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(scale > 0, np.abs(total) / np.where(scale > 0, scale, 1.0), 0.0)
    return FelsReport(
        condition1_identically_zero=cond1,
        condition2_max_abs=float(np.max(np.abs(total))),
        condition2_normalized=float(np.max(normalized)),
        samples=n_samples,
        seed=seed,
    )
