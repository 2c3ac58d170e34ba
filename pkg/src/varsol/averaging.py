"""Averaged action of the Gaussian-core plus cosine-tail trial function.

The trial function is ``u = A exp(-z^2/s) + alpha cos(kappa z)``.  Substituting
it into a polynomial Lagrangian gives a finite sum of basis terms

    amplitude * z^n * exp(-m z^2/s) * cos(j kappa z)   (or sin)

after trigonometric powers are reduced to harmonics.  Terms with m >= 1 are
integrated in closed form with Gaussian moments; pure-tail terms (m = 0) are
either zero-mean oscillations, which are dropped, or secular, which the tail
wavenumber must cancel.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dual
from .family import CoefficientFamily, NoOscillatoryTailError, linearized_dispersion
from .poly import MultiPoly, eval_poly

COS, SIN = "cos", "sin"
SQRT_PI = math.sqrt(math.pi)
SYMBOLS = ("A", "alpha", "w", "k")


class SecularResidualError(ValueError):
    """The tail wavenumber does not cancel the secular part of the density."""


@dataclass(frozen=True)
class AnsatzParams:
    A: object
    s: object
    alpha: object = 0.0
    kappa: object = 0.0

    @property
    def rho(self) -> float:
        return math.sqrt(dual.primal(self.s))


@dataclass(frozen=True)
class BasisTerm:
    amplitude: object
    n: int
    m: int
    j: int
    phase: str


def _is_zero(x) -> bool:
    if isinstance(x, (int, float)):
        return x == 0
    if isinstance(x, MultiPoly):
        return x.is_zero()
    return False


@lru_cache(maxsize=None)
def _trig_product(j1: int, p1: str, j2: int, p2: str) -> tuple:
    """{cos,sin}(j1 x) * {cos,sin}(j2 x) as ((j, phase, factor), ...)."""
    raw = []
    if p1 == COS and p2 == COS:
        raw = [(j1 - j2, COS, 0.5), (j1 + j2, COS, 0.5)]
    elif p1 == SIN and p2 == SIN:
        raw = [(j1 - j2, COS, 0.5), (j1 + j2, COS, -0.5)]
    elif p1 == SIN and p2 == COS:
        raw = [(j1 + j2, SIN, 0.5), (j1 - j2, SIN, 0.5)]
    else:
        raw = [(j1 + j2, SIN, 0.5), (j1 - j2, SIN, -0.5)]
    merged: dict = {}
    for j, phase, f in raw:
        if j < 0:
            j = -j
            if phase == SIN:
                f = -f
        if j == 0 and phase == SIN:
            continue
        merged[(j, phase)] = merged.get((j, phase), 0.0) + f
    return tuple((j, ph, f) for (j, ph), f in merged.items() if f != 0.0)


class TermSum:
    """Linear combination of basis terms keyed by (n, m, j, phase)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if not _is_zero(v)}

    @classmethod
    def constant(cls, value) -> "TermSum":
        return cls({(0, 0, 0, COS): value})

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        for (n, m, j, phase), amp in self.terms.items():
            yield BasisTerm(amp, n, m, j, phase)

    def __add__(self, other):
        if not isinstance(other, TermSum):
            if _is_zero(other):
                return self
            other = TermSum.constant(other)
        out = dict(self.terms)
        for key, amp in other.terms.items():
            out[key] = out[key] + amp if key in out else amp
        return TermSum(out)

    __radd__ = __add__

    def __neg__(self):
        return TermSum({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, TermSum):
            return TermSum({k: v * other for k, v in self.terms.items()})
        out: dict = {}
        for (n1, m1, j1, p1), a1 in self.terms.items():
            for (n2, m2, j2, p2), a2 in other.terms.items():
                amp = a1 * a2
                for j, phase, f in _trig_product(j1, p1, j2, p2):
                    key = (n1 + n2, m1 + m2, j, phase)
                    contrib = amp * f
                    out[key] = out[key] + contrib if key in out else contrib
        return TermSum(out)

    def __rmul__(self, other):
        return self * other

    def filter(self, predicate) -> "TermSum":
        return TermSum({k: v for k, v in self.terms.items() if predicate(*k)})


@dataclass
class ActionExpansion:
    integrable: TermSum
    secular: TermSum
    dropped_oscillatory: TermSum

    def to_csv(self) -> str:
        """Debug dump: term_id, amplitude, n, m, j, phase, class."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["term_id", "amplitude", "n", "m", "j", "phase", "class"])
        tid = 0
        for label, part in (("integrable", self.integrable), ("secular", self.secular),
                            ("oscillatory", self.dropped_oscillatory)):
            for key in sorted(part.terms):
                n, m, j, phase = key
                amp = dual.primal(part.terms[key])
                writer.writerow([tid, f"{float(amp):.17g}", n, m, j, phase, label])
                tid += 1
        return buf.getvalue()


def classify(key: tuple) -> str:
    n, m, j, _ = key
    if m >= 1:
        return "integrable"
    if n >= 1 or j == 0:
        return "secular"
    return "oscillatory"


def ansatz_fields(A, w, alpha, kappa) -> tuple[TermSum, TermSum, TermSum]:
    """u, u', u'' of the trial function as term sums (w = 1/s)."""
    u = TermSum({(0, 1, 0, COS): A, (0, 0, 1, COS): alpha})
    up = TermSum({(1, 1, 0, COS): -2.0 * A * w, (0, 0, 1, SIN): -(alpha * kappa)})
    upp = TermSum({
        (2, 1, 0, COS): 4.0 * A * w * w,
        (0, 1, 0, COS): -2.0 * A * w,
        (0, 0, 1, COS): -(alpha * kappa * kappa),
    })
    return u, up, upp


def expand_terms(fam: CoefficientFamily, A, w, alpha, kappa) -> TermSum:
    """Lagrangian density of the trial function; amplitudes in whatever ring the inputs live in."""
    u, up, upp = ansatz_fields(A, w, alpha, kappa)
    density = eval_poly(fam.lagrangian, {"u": u, "up": up, "upp": upp})
    if not isinstance(density, TermSum):
        density = TermSum.constant(density)
    return density


def split_expansion(density: TermSum) -> ActionExpansion:
    parts = {"integrable": {}, "secular": {}, "oscillatory": {}}
    for key, amp in density.terms.items():
        parts[classify(key)][key] = amp
    return ActionExpansion(TermSum(parts["integrable"]), TermSum(parts["secular"]),
                           TermSum(parts["oscillatory"]))


def expand_density(fam: CoefficientFamily, p: AnsatzParams) -> ActionExpansion:
    if dual.primal(p.s) == 0:
        raise ZeroDivisionError("s = rho^2 must be nonzero")
    return split_expansion(expand_terms(fam, p.A, 1.0 / p.s, p.alpha, p.kappa))


# -- secular part and kappa selection ------------------------------------

def secular_polynomial(fam: CoefficientFamily) -> MultiPoly:
    """Mean of the pure-tail density as a polynomial in (alpha, k)."""

    def build():
        vars = ("alpha", "k")
        alpha, k = MultiPoly.var(vars, "alpha"), MultiPoly.var(vars, "k")
        density = expand_terms(fam, 0.0, 1.0, alpha, k)
        total = MultiPoly(vars)
        for key, amp in split_expansion(density).secular.terms.items():
            total = total + amp
        return total

    return fam.cached("secular_poly", build)


def secular_summands(fam: CoefficientFamily, alpha: float, kappa: float) -> np.ndarray:
    poly = secular_polynomial(fam)
    return np.array([c * alpha ** e[0] * kappa ** e[1] for e, c in poly.terms.items()], dtype=float)


def _kappa_sq_polys(fam: CoefficientFamily) -> dict[int, np.ndarray]:
    """Secular coefficient of each alpha power as a polynomial in kappa^2 (ascending)."""
    by_alpha: dict[int, dict[int, float]] = {}
    for (ea, ek), c in secular_polynomial(fam).terms.items():
        if ek % 2:
            raise AssertionError("secular mean contains an odd power of kappa")
        by_alpha.setdefault(ea, {})[ek // 2] = c
    out = {}
    for ea, coefs in by_alpha.items():
        arr = np.zeros(max(coefs) + 1)
        for e, c in coefs.items():
            arr[e] = c
        out[ea] = arr
    return out


def _relative_poly_value(coefs: np.ndarray, x: float) -> float:
    terms = coefs * x ** np.arange(len(coefs))
    scale = np.abs(terms).sum()
    return float(abs(terms.sum()) / scale) if scale > 0 else 0.0


def select_kappa(fam: CoefficientFamily, p: AnsatzParams | None = None, rtol: float = 1e-10) -> float:
    """Positive tail wavenumber that cancels every secular coefficient.

    Raises :class:`NoOscillatoryTailError` when no real kappa works.
    """
    polys = _kappa_sq_polys(fam)
    if not polys:
        raise NoOscillatoryTailError("the tail density has no secular part to fix kappa")
    lowest = polys[min(polys)]
    coefs = np.trim_zeros(lowest[::-1], "f")
    roots = np.roots(coefs) if len(coefs) > 1 else np.array([])
    candidates = sorted(r.real for r in roots
                        if abs(r.imag) <= 1e-12 * max(1.0, abs(r)) and r.real > 0)
    for k2 in candidates:
        if all(_relative_poly_value(c, k2) <= rtol for c in polys.values()):
            disp = linearized_dispersion(fam)
            if not any(abs(k2 - r) <= rtol * abs(r) for r in disp.nonzero_roots):
                raise AssertionError(
                    f"secular kappa^2={k2} disagrees with dispersion roots {disp.nonzero_roots}")
            return math.sqrt(k2)
    raise NoOscillatoryTailError(
        f"no real kappa cancels the secular terms (kappa^2 candidates: {np.atleast_1d(roots).tolist()})")


def check_secular(fam: CoefficientFamily, p: AnsatzParams, rtol: float = 1e-8) -> float:
    alpha, kappa = float(dual.primal(p.alpha)), float(dual.primal(p.kappa))
    if alpha == 0.0:
        return 0.0
    summands = secular_summands(fam, alpha, kappa)
    scale = np.abs(summands).sum()
    rel = float(abs(summands.sum()) / scale) if scale > 0 else 0.0
    if rel > rtol:
        raise SecularResidualError(
            f"secular mean density is {rel:.3e} (relative) at kappa={kappa}; select kappa first")
    return rel


# -- Gaussian moments ----------------------------------------------------

@lru_cache(maxsize=None)
def _moment_table(n: int) -> tuple:
    """Integer coefficients e_k with M_n = sqrt(pi/a) exp(-b^2/4a) sum e_k b^k c^((n+k)/2), c = 1/(2a)."""
    poly = {0: 1}
    for step in range(n):
        sign = -1 if step % 2 == 0 else 1
        nxt: dict = {}
        for k, coef in poly.items():
            if k:
                nxt[k - 1] = nxt.get(k - 1, 0) + sign * k * coef
            nxt[k + 1] = nxt.get(k + 1, 0) - sign * coef
        poly = {k: v for k, v in nxt.items() if v}
    return tuple(sorted(poly.items()))


def moment(n: int, a, b, phase: str = COS):
    """Integral over the real line of z^n exp(-a z^2) {cos|sin}(b z)."""
    if dual.primal(a) <= 0:
        raise ValueError(f"moment needs a > 0, got {dual.primal(a)}")
    if (phase == COS) != (n % 2 == 0):
        return 0.0
    c = 1.0 / (2.0 * a)
    poly = 0.0
    for k, coef in _moment_table(n):
        poly = coef * b ** k * c ** ((n + k) // 2) + poly
    return dual.sqrt(math.pi / a) * dual.exp(-(b * b) / (4.0 * a)) * poly


def assemble_action(fam: CoefficientFamily, p: AnsatzParams, rtol: float = 1e-8):
    """Averaged action: closed-form integral of the integrable part of the density."""
    check_secular(fam, p, rtol)
    expansion = expand_density(fam, p)
    total = 0.0
    for (n, m, j, phase), amp in expansion.integrable.terms.items():
        value = moment(n, m / p.s, j * p.kappa, phase)
        if isinstance(value, float) and value == 0.0:
            continue
        total = amp * value + total
    return total


# -- reduced action, analytic in s and kappa^2 ---------------------------

def _symbolic_integrable(fam: CoefficientFamily, max_alpha_power: int) -> TermSum:
    def build():
        A, alpha, w, k = (MultiPoly.var(SYMBOLS, v) for v in SYMBOLS)
        density = expand_terms(fam, A, w, alpha, k)
        return split_expansion(density).integrable

    full = fam.cached("symbolic_integrable", build)
    if max_alpha_power is None:
        return full
    trimmed = {}
    for key, amp in full.terms.items():
        kept = {e: c for e, c in amp.terms.items() if e[1] <= max_alpha_power}
        if kept:
            trimmed[key] = MultiPoly(SYMBOLS, kept)
    return TermSum(trimmed)


class ReducedAction:
    """R(A, s, alpha) with S = sqrt(s) * R for s > 0.

    R is a sum of groups exp(rate * s) * Laurent polynomial in s, with
    polynomial dependence on A and alpha.  It stays real and finite for
    negative s and negative kappa^2, which the stationarity solver needs to
    locate and report inadmissible roots.
    """

    def __init__(self, fam: CoefficientFamily, kappa_sq: float, max_alpha_power: int | None = None):
        self.kappa_sq = float(kappa_sq)
        self.max_alpha_power = max_alpha_power
        groups: dict = {}
        for (n, m, j, phase), amp in _symbolic_integrable(fam, max_alpha_power).terms.items():
            if (phase == COS) != (n % 2 == 0):
                continue
            for kk, ecoef in _moment_table(n):
                if j == 0 and kk > 0:
                    continue
                half = (n + kk) // 2
                base = SQRT_PI / math.sqrt(m) * ecoef * float(j) ** kk * (0.5 / m) ** half
                for (ea, eal, ew, ek), c in amp.terms.items():
                    if (ek + kk) % 2:
                        raise AssertionError("odd kappa power in averaged action")
                    coef = c * base * self.kappa_sq ** ((ek + kk) // 2)
                    if coef == 0.0:
                        continue
                    key = (ea, eal, half - ew)
                    bucket = groups.setdefault((j * j, m), {})
                    bucket[key] = bucket.get(key, 0.0) + coef
        self.groups = {g: {k: c for k, c in terms.items() if c != 0.0}
                       for g, terms in sorted(groups.items())}
        exps = [k for terms in self.groups.values() for k in terms]
        self._max_a = max((e[0] for e in exps), default=0)
        self._max_al = max((e[1] for e in exps), default=0)
        self._min_q = min((e[2] for e in exps), default=0)
        self._max_q = max((e[2] for e in exps), default=0)

    def rate(self, group: tuple[int, int]) -> float:
        j2, m = group
        return -j2 * self.kappa_sq / (4.0 * m)

    @staticmethod
    def _powers(x, top: int) -> list:
        table = [1.0]
        for _ in range(top):
            table.append(table[-1] * x)
        return table

    def _eval(self, A, s, alpha, absolute: bool = False):
        s_exp = s
        if absolute:
            A, s, alpha = abs(A), abs(s), abs(alpha)
        Ap = self._powers(A, self._max_a)
        alp = self._powers(alpha, self._max_al)
        sp = {0: 1.0}
        if self._max_q > 0:
            for q, v in enumerate(self._powers(s, self._max_q)[1:], start=1):
                sp[q] = v
        if self._min_q < 0:
            inv = 1.0 / s
            for q, v in enumerate(self._powers(inv, -self._min_q)[1:], start=1):
                sp[-q] = v
        total = 0.0
        for group, terms in self.groups.items():
            inner = 0.0
            for (ea, eal, q), c in terms.items():
                if absolute:
                    c = abs(c)
                inner = c * Ap[ea] * alp[eal] * sp[q] + inner
            rate = self.rate(group)
            if rate != 0.0:
                inner = inner * dual.exp(rate * s_exp)
            total = inner + total
        return total

    def __call__(self, A, s, alpha=0.0):
        return self._eval(A, s, alpha)

    def magnitude(self, A, s, alpha=0.0):
        """Sum of absolute values of all summands; a scale for residuals."""
        return self._eval(A, s, alpha, absolute=True)

    def action(self, A, s, alpha=0.0):
        return dual.sqrt(s) * self._eval(A, s, alpha)
