"""Direct accuracy checks for variational solutions.

The trial function is substituted into the full fourth-order equation and the
pointwise residual is tabulated; ``quadrature_action`` integrates the
Lagrangian numerically as an independent check on the closed-form action.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .averaging import AnsatzParams, check_secular
from .family import CoefficientFamily, Jet, el_residual, with_params
from .poly import eval_poly
from .solver import StartGrid, StationaryResult, solve_embedded, solve_regular

DEFAULT_Z = np.linspace(-3.0, 3.0, 121)


class QuadratureError(RuntimeError):
    pass


def ansatz_jet(p: AnsatzParams, z) -> Jet:
    """Exact derivatives of A exp(-z^2/s) + alpha cos(kappa z) up to fourth order."""
    if p.s == 0:
        raise ValueError("s = 0: the Gaussian core is undefined")
    z = np.asarray(z, dtype=float)
    w = 1.0 / p.s
    g = p.A * np.exp(-w * z * z)
    z2 = z * z
    core = (
        g,
        -2.0 * w * z * g,
        (4.0 * w**2 * z2 - 2.0 * w) * g,
        (-8.0 * w**3 * z2 * z + 12.0 * w**2 * z) * g,
        (16.0 * w**4 * z2 * z2 - 48.0 * w**3 * z2 + 12.0 * w**2) * g,
    )
    k = p.kappa
    c, s = p.alpha * np.cos(k * z), p.alpha * np.sin(k * z)
    tail = (c, -k * s, -k**2 * c, k**3 * s, k**4 * c)
    u = [a + b for a, b in zip(core, tail)]
    if z.ndim == 0:
        u = [float(x) for x in u]
        z = float(z)
    return Jet(z, *u)


@dataclass
class ResidualGrid:
    """|EL residual| at ansatz jets; ``values[i, j]`` is z[i] at axis value j (NaN = missing)."""

    z: np.ndarray
    axis_name: str
    axis_values: np.ndarray
    values: np.ndarray
    roots: list

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values).all(axis=0)

    def max_over_z(self) -> np.ndarray:
        out = np.full(len(self.axis_values), np.nan)
        ok = ~self.missing
        out[ok] = self.values[:, ok].max(axis=0)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"z\\{self.axis_name}"] + [f"{v:.17g}" for v in self.axis_values])
        for i, z in enumerate(self.z):
            row = ["" if math.isnan(v) else f"{v:.17g}" for v in self.values[i]]
            writer.writerow([f"{z:.17g}"] + row)
        return buf.getvalue()


def _resolve(fam: CoefficientFamily, mode: str, previous: StationaryResult | None):
    solve = solve_regular if mode == "regular" else solve_embedded
    candidates = []
    if previous is not None:
        candidates = solve(fam, StartGrid.single(previous.A, previous.s), classify=False).admissible()
    if not candidates:
        candidates = solve(fam, classify=False).admissible()
    if not candidates:
        return None
    if previous is None:
        return candidates[0]
    return min(candidates, key=lambda r: math.hypot(r.A - previous.A, r.s - previous.s))


def residual_scan(fam: CoefficientFamily, solution: StationaryResult, z_range: Sequence[float] | None,
                  param_axis: tuple[str, Sequence[float]], alpha: float | None = None) -> ResidualGrid:
    """Residual grid with (A, s) re-solved at every value on the parameter axis.

    Each solve starts from the previous root and falls back to the default
    grid; a value without an admissible root leaves its column missing.
    """
    z = DEFAULT_Z if z_range is None else np.asarray(z_range, dtype=float)
    name, axis = param_axis
    axis = np.asarray(axis, dtype=float)
    mode = "regular" if solution.mode == "regular" else "embedded"
    values = np.full((len(z), len(axis)), np.nan)
    roots: list = []
    previous = solution
    for j, v in enumerate(axis):
        member = with_params(fam, **{name: float(v)})
        root = _resolve(member, mode, previous)
        roots.append(root)
        if root is None:
            continue
        previous = root
        p = root.params
        if alpha is not None:
            p = AnsatzParams(p.A, p.s, alpha, p.kappa)
        values[:, j] = np.abs(el_residual(member, ansatz_jet(p, z)))
    return ResidualGrid(z, name, axis, values, roots)


def _kappa_floor(p: AnsatzParams) -> float:
    return max(float(p.kappa), 1.0)


def quadrature_action(fam: CoefficientFamily, p: AnsatzParams, tol: float = 1e-10,
                      window_scale: float = 1.0, limit: int = 2000) -> float:
    """Numerical action: integral of L(core + tail) - L(tail) over a finite window."""
    if p.alpha != 0:
        check_secular(fam, p)
    L = fam.lagrangian
    tail = AnsatzParams(0.0, p.s, p.alpha, p.kappa)

    def density(z):
        full = ansatz_jet(p, z)
        bare = ansatz_jet(tail, z)
        return (eval_poly(L, {"u": full.u0, "up": full.u1, "upp": full.u2})
                - eval_poly(L, {"u": bare.u0, "up": bare.u1, "upp": bare.u2}))

    Z = window_scale * (12.0 * math.sqrt(abs(p.s)) + 40.0 / _kappa_floor(p))
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in ((-Z, 0.0), (0.0, Z)):
            try:
                part, _ = integrate.quad(density, a, b, epsabs=tol, epsrel=tol, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"adaptive quadrature did not converge: {exc}") from exc
            total += part
    return total
