import math

import numpy as np
import pytest

from varsol.family import (DegenerateFamilyError, Jet, NoOscillatoryTailError, PRESETS, el_residual,
                           family_from_strings, lagrangian_partials, linearized_dispersion, preset, with_params)
from varsol.poly import MultiPoly, parse_poly

from conftest import random_jet, sympy_euler_lagrange

ONES = Jet(0.0, 1.0, 1.0, 1.0, 1.0, 1.0)


def eq2_left_side(j: Jet, d1, d2, d3, mu):
    # hand-written fourth-order equation for the first preset
    return j.u4 * (d2 - d3 * j.u1) - 2 * d3 * j.u2 * j.u3 + j.u2 * (d1 - 2 * mu * j.u0) - mu * j.u1 ** 2


def test_presets_match_explicit_expressions():
    fam = preset("example1", d1=1, d2=2, d3=3, mu=4)
    same = family_from_strings("d2 - d3*up", "1", "-(mu/2)*u^2", "-(d1/2)*up^2",
                               {"d1": 1, "d2": 2, "d3": 3, "mu": 4})
    assert fam.lagrangian == same.lagrangian
    L = parse_poly("(d2 - d3*up)*upp^2/2 - (mu/2)*u^2*upp - (d1/2)*up^2", ("u", "up", "upp"), fam.params)
    assert fam.lagrangian == L


def test_degenerate_family():
    with pytest.raises(DegenerateFamilyError, match="degenerate"):
        family_from_strings("0", "1", "u^2", "up^2", {})
    with pytest.raises(DegenerateFamilyError):
        family_from_strings("1", "0", "u^2", "up^2", {})


def test_partials_examples():
    P = lagrangian_partials(preset("example1", d1=1, d2=2, d3=3, mu=1))
    V = ("u", "up", "upp")
    assert P["L_upp_upp"] == parse_poly("2 - 3*up", V, {})
    assert P["L_upp_upp_upp"].is_zero()
    P2 = lagrangian_partials(preset("example2", d1=1, d2=2, d3=3))
    assert P2["L_u_upp"] == parse_poly("2*upp + 2*u", V, {})


def test_residual_examples():
    assert el_residual(preset("example1", d1=1, d2=1, d3=1, mu=1), ONES) == pytest.approx(-4.0, abs=1e-14)
    zero = Jet(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert el_residual(preset("example2", d1=1, d2=2, d3=3), zero) == 0.0


def test_example2_residual_against_sympy():
    # with c4 = u''^2/2 the expansion is (-d1+d2 u)u'''' + 2 d2 u' u''' + 1.5 d2 u''^2 + (4u - 2)u'' + 2u'^2 (+ d3 terms)
    fam = preset("example2", d1=1, d2=1, d3=0)
    assert el_residual(fam, ONES) == pytest.approx(7.5, abs=1e-14)
    f, _ = sympy_euler_lagrange(*PRESETS["example2"].values(), {"d1": 1, "d2": 1, "d3": 0})
    assert f(1, 1, 1, 1, 1) == pytest.approx(7.5)


def test_eq2_reproduction(rng):
    for _ in range(20):
        d1, d2, d3, mu = rng.uniform(-3, 3, 4)
        fam = preset("example1", d1=d1, d2=d2, d3=d3, mu=mu)
        jet = random_jet(rng, 1000, 2.0)
        got = el_residual(fam, jet)
        want = eq2_left_side(jet, d1, d2, d3, mu)
        scale = np.maximum(np.abs(want), 1.0)
        assert np.max(np.abs(got - want) / scale) < 1e-12


@pytest.mark.parametrize("coeffs, params", [
    (PRESETS["example2"], {"d1": 1.3, "d2": -0.7, "d3": 2.1}),
    ({"c1": "1 + u^2 - up", "c2": "2 + upp", "c3": "u*up^2", "c5": "u^3*up + up^4"}, {}),
    ({"c1": "a*u*up + 3", "c2": "upp^2 - 1", "c3": "u^2 - up^2", "c5": "b*u^2*up^2"}, {"a": 0.5, "b": -1.5}),
])
def test_residual_against_sympy(coeffs, params, rng):
    fam = family_from_strings(**coeffs, params=params)
    f, _ = sympy_euler_lagrange(coeffs["c1"], coeffs["c2"], coeffs["c3"], coeffs["c5"], params)
    jet = random_jet(rng, 500, 1.5)
    got = el_residual(fam, jet)
    want = f(jet.u0, jet.u1, jet.u2, jet.u3, jet.u4)
    assert np.allclose(got, want, rtol=1e-11, atol=1e-11)


def test_linearity(rng):
    a = family_from_strings("2 + u", "1", "u^2", "up^2", {})
    b = family_from_strings("1 - up", "1", "u*up", "u^2*up^2", {})
    summed = family_from_strings("3 + u - up", "1", "u^2 + u*up", "up^2 + u^2*up^2", {})
    jet = random_jet(rng, 200)
    assert np.allclose(el_residual(summed, jet), el_residual(a, jet) + el_residual(b, jet), rtol=1e-12, atol=1e-12)


def test_null_lagrangian_invariance(rng):
    base = {"c1": "2 - up", "c2": "1", "c3": "u^2", "c5": "up^2"}
    V = ("u", "up")
    for _ in range(5):
        terms = {(int(i), int(j)): float(c) for i, j, c in zip(rng.integers(0, 4, 4), rng.integers(0, 4, 4),
                                                              rng.uniform(-2, 2, 4))}
        g = MultiPoly(V, terms)
        c3 = parse_poly(base["c3"], V, {}) + g.diff("up")
        c5 = parse_poly(base["c5"], V, {}) + MultiPoly.var(V, "up") * g.diff("u")
        shifted = family_from_strings(base["c1"], base["c2"], c3.to_expr(), c5.to_expr(), {})
        plain = family_from_strings(**base, params={})
        jet = random_jet(rng, 300)
        a, b = el_residual(shifted, jet), el_residual(plain, jet)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.max(np.abs(b)))


def test_overall_scaling(rng):
    lam = 3.7
    a = family_from_strings("2 - up", "1", "u^2", "up^2", {})
    b = family_from_strings(f"{lam}*(2 - up)", "1", f"{lam}*u^2", f"{lam}*up^2", {})
    jet = random_jet(rng, 200)
    assert np.allclose(el_residual(b, jet), lam * el_residual(a, jet), rtol=1e-13)


def test_with_params_rebinds():
    fam = preset("example1", d1=1, d2=1, d3=1, mu=1)
    other = with_params(fam, d1=2.0)
    assert other.params["d1"] == 2.0 and fam.params["d1"] == 1.0
    assert other.lagrangian == preset("example1", d1=2, d2=1, d3=1, mu=1).lagrangian


def test_dispersion():
    assert linearized_dispersion(preset("example1", d1=2, d2=3, d3=1, mu=1)).kappa() == pytest.approx(
        math.sqrt(2 / 3), rel=1e-12)
    assert linearized_dispersion(preset("example2", d1=5, d2=2, d3=0)).kappa() == pytest.approx(
        math.sqrt(2 / 5), rel=1e-12)
    with pytest.raises(NoOscillatoryTailError):
        linearized_dispersion(preset("example1", d1=-1, d2=1, d3=1, mu=1)).kappa()


def test_dispersion_rejects_linear_terms():
    with pytest.raises(ValueError, match="linear"):
        linearized_dispersion(family_from_strings("1", "1", "u", "up^2", {}))
