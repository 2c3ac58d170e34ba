import math

import numpy as np
import pytest

from varsol.accuracy import QuadratureError, ansatz_jet, quadrature_action, residual_scan
from varsol.averaging import AnsatzParams, assemble_action, select_kappa
from varsol.family import el_residual, family_from_strings, preset
from varsol.solver import solve_embedded, solve_regular


def test_jet_examples():
    j = ansatz_jet(AnsatzParams(1.0, 1.0), 0.0)
    assert (j.u0, j.u1, j.u2, j.u3, j.u4) == (1.0, 0.0, -2.0, 0.0, 12.0)
    j = ansatz_jet(AnsatzParams(0.0, 1.0, 1.0, 1.0), 0.0)
    assert (j.u0, j.u1, j.u2, j.u3, j.u4) == (1.0, 0.0, -1.0, 0.0, 1.0)
    far = ansatz_jet(AnsatzParams(1.0, 1.0), 40.0)
    assert max(abs(x) for x in (far.u0, far.u1, far.u2, far.u3, far.u4)) < 1e-300
    with pytest.raises(ValueError):
        ansatz_jet(AnsatzParams(1.0, 0.0), 0.0)


def test_jet_derivatives_against_finite_differences():
    p = AnsatzParams(0.8, 1.7, 0.3, 1.3)
    z, h = 0.37, 1e-4
    vals = [ansatz_jet(p, z + k * h) for k in (-2, -1, 0, 1, 2)]
    u = [v.u0 for v in vals]
    assert (u[3] - u[1]) / (2 * h) == pytest.approx(vals[2].u1, rel=1e-7)
    assert (u[3] - 2 * u[2] + u[1]) / h**2 == pytest.approx(vals[2].u2, rel=1e-6)
    up2 = [v.u2 for v in vals]
    assert (up2[3] - up2[1]) / (2 * h) == pytest.approx(vals[2].u3, rel=1e-6)
    assert (up2[3] - 2 * up2[2] + up2[1]) / h**2 == pytest.approx(vals[2].u4, rel=1e-5)


def test_exact_solution_has_zero_residual():
    # linear family: u = cos(kappa z) solves the linearized (here exact) equation
    fam = family_from_strings("1", "1", "0*u^2", "-(d1/2)*up^2", {"d1": 2.0})
    k = math.sqrt(2.0)
    z = np.linspace(-3, 3, 61)
    assert np.max(np.abs(el_residual(fam, ansatz_jet(AnsatzParams(0.0, 1.0, 0.7, k), z)))) < 1e-13


def test_quadrature_examples():
    fam = preset("example1", d1=1, d2=1, d3=1, mu=1)
    want = math.sqrt(math.pi) * (18 * math.sqrt(2) + 8 * math.sqrt(3)) / 36
    assert quadrature_action(fam, AnsatzParams(1.0, 1.0)) == pytest.approx(want, rel=1e-10)
    assert quadrature_action(fam, AnsatzParams(0.0, 1.0)) == 0.0
    p = AnsatzParams(0.9, 1.4, 0.01, 1.0)
    assert quadrature_action(fam, p) == pytest.approx(assemble_action(fam, p), rel=1e-6)


def test_window_independence():
    fam = preset("example2", d1=5, d2=2, d3=0)
    p = AnsatzParams(1.1, 1.6, 0.2, select_kappa(fam))
    tol = 1e-9
    a = quadrature_action(fam, p, tol)
    b = quadrature_action(fam, p, tol, window_scale=2.0)
    assert abs(a - b) < tol * max(1.0, abs(a))


def test_quadrature_failure_is_reported():
    fam = preset("example1", d1=1, d2=1, d3=1, mu=1)
    with pytest.raises(QuadratureError):
        quadrature_action(fam, AnsatzParams(1.0, 1.0), tol=1e-15, limit=1)


def test_scan_grid_shape_and_symmetry():
    fam = preset("example1", d1=1, d2=5, d3=0, mu=1)
    root = solve_regular(fam).admissible()[0]
    z = np.linspace(-3, 3, 31)
    grid = residual_scan(fam, root, z, ("d1", np.linspace(0.5, 3, 5)))
    assert grid.values.shape == (31, 5)
    assert np.all(grid.values >= 0)
    assert np.max(np.abs(grid.values - grid.values[::-1])) <= 1e-12 * np.max(grid.values)
    rows = grid.to_csv().splitlines()
    assert rows[0].startswith("z\\d1,0.5,") and len(rows) == 32


def test_scan_marks_missing_columns():
    fam = preset("example1", d1=1, d2=1, d3=1, mu=1)
    root = solve_regular(fam).admissible()[0]
    # d1 < 0 flips the sign of s: no admissible regular root there
    grid = residual_scan(fam, root, np.linspace(-1, 1, 5), ("d1", [1.0, -1.0, 2.0]))
    assert list(grid.missing) == [False, True, False]
    assert math.isnan(grid.max_over_z()[1])
    assert grid.to_csv().splitlines()[1].split(",")[2] == ""


def test_embedded_scan():
    fam = preset("example2", d1=5, d2=2, d3=0)
    root = solve_embedded(fam).admissible()[0]
    grid = residual_scan(fam, root, np.linspace(-3, 3, 11), ("d2", [2.0, 2.2]))
    assert not grid.missing.any()
    assert grid.roots[0].s == pytest.approx(root.s, rel=1e-12)
