"""Shared fixtures and independent oracles (sympy derivations, quadrature)."""

from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from varsol.family import Jet

Z = sp.Symbol("z")
JET_SYMBOLS = sp.symbols("u0:5")


def sympy_euler_lagrange(c1: str, c2: str, c3: str, c5: str, params: dict):
    """EL expression derived by sympy from L = c1*c4 + c3*u'' + c5, as a numpy function of (u0..u4)."""
    u, up, upp = sp.symbols("u up upp")
    local = {k: sp.nsimplify(v) for k, v in params.items()}
    local.update(u=u, up=up, upp=upp)
    parse = lambda s: sp.sympify(s.replace("^", "**"), locals=local)  # noqa: E731
    c4 = sp.integrate(sp.integrate(parse(c2), upp), upp)
    L = parse(c1) * c4 + parse(c3) * upp + parse(c5)
    U = sp.Function("U")(Z)
    Lz = L.subs({upp: U.diff(Z, 2), up: U.diff(Z), u: U}, simultaneous=True)
    el = sp.euler_equations(Lz, U, Z)[0].lhs
    expr = el
    for k in range(4, 0, -1):
        expr = expr.subs(U.diff(Z, k), JET_SYMBOLS[k])
    expr = sp.expand(expr.subs(U, JET_SYMBOLS[0]))
    return sp.lambdify(JET_SYMBOLS, expr, "numpy"), expr


def random_jet(rng, n, scale=1.0) -> Jet:
    vals = rng.uniform(-scale, scale, (5, n))
    return Jet(None, *vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
