import numpy as np
import pytest
import sympy as sp

from varsol.family import family_from_strings, preset
from varsol.fels import (FelsReport, build_F, condition1_holds, condition2_terms, fels_check, sample_jets,
                         total_derivative)
from varsol.poly import MultiPoly, RationalFn

from conftest import JET_SYMBOLS, random_jet, sympy_euler_lagrange

V = ("u", "up", "upp", "uppp")


def _rf(name):
    return RationalFn(MultiPoly.var(V, name), MultiPoly.const(V, 1.0), 0)


def test_F_solves_the_equation(rng):
    from varsol.family import Jet, el_residual

    fam = preset("example2", d1=1.5, d2=0.4, d3=0.3)
    F = build_F(fam).F
    jet = random_jet(rng, 1000, 0.8)
    u4 = F({"u": jet.u0, "up": jet.u1, "upp": jet.u2, "uppp": jet.u3})
    res = el_residual(fam, Jet(None, jet.u0, jet.u1, jet.u2, jet.u3, u4))
    lead = np.abs(1.5 - 0.4 * jet.u0 - 0.3 * jet.u1) * np.abs(u4) + 1.0
    assert np.max(np.abs(res) / lead) < 1e-10


def test_F_of_first_preset():
    fam = preset("example1", d1=1.2, d2=2.0, d3=0.5, mu=0.7)
    F = build_F(fam).F
    pt = {"u": 0.3, "up": -0.4, "upp": 0.9, "uppp": 1.1}
    want = (2 * 0.5 * 0.9 * 1.1 - 0.9 * (1.2 - 2 * 0.7 * 0.3) + 0.7 * 0.16) / (2.0 - 0.5 * -0.4)
    assert F(pt) == pytest.approx(want, rel=1e-13)


def test_constant_leading_coefficient_gives_polynomial_F():
    F = build_F(family_from_strings("1", "1", "u^2", "up^2", {})).F
    assert F.denominator.is_constant()


def test_total_derivative_examples():
    form = build_F(preset("example1", d1=1, d2=1, d3=1, mu=1))
    pt = {"u": 0.2, "up": 0.5, "upp": -0.3, "uppp": 0.7}
    assert total_derivative(_rf("u"), form)(pt) == pytest.approx(0.5)
    assert total_derivative(_rf("uppp"), form)(pt) == pytest.approx(form.F(pt))
    assert total_derivative(_rf("u") * _rf("up"), form)(pt) == pytest.approx(0.25 + 0.2 * -0.3)


def test_condition1_structural():
    for fam in (preset("example1", d1=1, d2=1, d3=1, mu=1), preset("example2", d1=1, d2=1, d3=1),
                family_from_strings("1 + u*up", "2 + upp^2", "u^3", "up^2*u", {})):
        assert condition1_holds(build_F(fam))


def _sympy_condition2(fam_strings, params, pt):
    """Condition-2 summands derived independently in sympy at one jet."""
    _, el = sympy_euler_lagrange(*fam_strings, params)
    u0, u1, u2, u3, u4 = JET_SYMBOLS
    F = sp.solve(el, u4)[0]
    D = lambda g: g.diff(u0) * u1 + g.diff(u1) * u2 + g.diff(u2) * u3 + g.diff(u3) * F  # noqa: E731
    F1, F2, F3 = F.diff(u1), F.diff(u2), F.diff(u3)
    terms = [F1, D(D(F3)) / 2, -D(F2), -sp.Rational(3, 4) * F3 * D(F3), F2 * F3 / 2, F3 ** 3 / 8]
    vals = {u0: pt["u"], u1: pt["up"], u2: pt["upp"], u3: pt["uppp"]}
    return [float(t.subs(vals)) for t in terms]


def test_condition2_terms_against_sympy():
    strings = ("-d1 + d2*u + d3*up", "1", "u^2", "up^2")
    params = {"d1": 1, "d2": 1, "d3": 1}
    fam = family_from_strings(*strings, params)
    pt = {"u": 0.35, "up": 0.9, "upp": -0.4, "uppp": 1.1}
    got = [t(pt) for t in condition2_terms(build_F(fam))]
    assert np.allclose(got, _sympy_condition2(strings, params, pt), rtol=1e-10)


def test_constant_coefficients_pass():
    rep = fels_check(family_from_strings("1", "1", "u^2", "up^2", {}), 1000, seed=0)
    assert rep.condition1_identically_zero
    assert rep.condition2_normalized < 1e-9
    assert rep.condition2_verdict == "pass"


def test_deterministic_and_scale_invariant():
    a = fels_check(preset("example2", d1=1, d2=1, d3=1), 200, seed=7)
    b = fels_check(preset("example2", d1=1, d2=1, d3=1), 200, seed=7)
    assert a == b
    scaled = family_from_strings("3*(-1 + u + up)", "1", "3*u^2", "3*up^2", {})
    c = fels_check(scaled, 200, seed=7)
    assert c.condition2_normalized == pytest.approx(a.condition2_normalized, abs=1e-12)


def test_sampling_avoids_denominator_zeros():
    form = build_F(preset("example2", d1=0.0, d2=1, d3=1))
    pts = sample_jets(form, 500, seed=3)
    q = np.abs(form.F.base(pts))
    assert q.min() >= 1e-2 * q.max()


def test_report_serialization():
    rep = FelsReport(True, 1e-12, 1e-15, 10, 0)
    assert rep.condition2_verdict == "pass"
    assert "condition1_verdict=pass" in rep.to_text()
    assert rep.to_csv().splitlines()[1].startswith("true,pass,")
    assert FelsReport(True, 1.0, 1e-5, 10, 0).condition2_verdict == "inconclusive"
    assert FelsReport(True, 1.0, 0.1, 10, 0).condition2_verdict == "fail"
