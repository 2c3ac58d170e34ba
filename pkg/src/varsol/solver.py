"""Stationary points of the averaged action by batched damped Newton.

All starts of a grid run together: the unknowns are numpy arrays, and the
gradient and Jacobian come from nested dual numbers pushed through the
reduced action R (S = sqrt(s) * R), which stays analytic for s < 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .averaging import AnsatzParams, ReducedAction, select_kappa
from .dual import Dual, hessian
from .family import CoefficientFamily, NoOscillatoryTailError, linearized_dispersion

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
DEDUP_RTOL = 1e-6
MAX_ITER = 200


class NoAdmissibleRootError(RuntimeError):
    pass


@dataclass(frozen=True)
class StartGrid:
    A_values: tuple
    s_values: tuple

    @classmethod
    def default(cls, fam: CoefficientFamily, mirror_s: bool = False,
                kappa_sq: float | None = None) -> "StartGrid":
        """Fixed amplitude and width grid; with ``kappa_sq`` also widths on the tail's scale 1/|kappa^2|."""
        p = fam.params
        d1, mu = p.get("d1", 1.0), p.get("mu", 1.0)
        scale = max(1.0, abs(d1 / mu)) if mu != 0 else 1.0
        base = (0.1, 0.5, 1.0, 2.0, 5.0)
        A = tuple(sorted(sign * v * scale for v in base for sign in (-1.0, 1.0)))
        s = {0.5, 1.0, 5.0, 20.0, 50.0}
        if kappa_sq:
            s |= {c / abs(kappa_sq) for c in (0.5, 1.0, 2.0, 5.0)}
        if mirror_s:
            s |= {-v for v in s}
        return cls(A, tuple(sorted(s)))

    @classmethod
    def single(cls, A: float, s: float) -> "StartGrid":
        return cls((A,), (s,))

    def points(self) -> np.ndarray:
        return np.array([(a, s) for a in self.A_values for s in self.s_values], dtype=float)


@dataclass
class StationaryResult:
    mode: str
    params: AnsatzParams
    gradient_residual: tuple
    unsolved_equation_residual: float | None
    admissible: bool
    iterations: int
    start_point: AnsatzParams
    tail_admissible: bool = True
    kappa_squared: float = 0.0
    extremum: str = ""

    @property
    def A(self) -> float:
        return self.params.A

    @property
    def s(self) -> float:
        return self.params.s


class RootList(list):
    """Roots found from a start grid; ``skipped`` lists (start, reason) pairs."""

    def __init__(self, items=(), skipped=()):
        super().__init__(items)
        self.skipped = list(skipped)

    def admissible(self) -> list:
        return [r for r in self if r.admissible]


class StationarySystem:
    """Equations dR/dx_e for e in ``equations`` over unknowns (A, s) at fixed alpha.

    The s-equation is dR/ds + R/(2s) = s^(-1/2) dS/ds, so every equation is
    the action gradient up to a positive factor whenever s > 0.
    """

    def __init__(self, reduced: ReducedAction, equations: Sequence[str], alpha: float = 0.0):
        self.R = reduced
        self.equations = tuple(equations)
        self.alpha = alpha

    def _pass(self, A, s, eq: str, outer: str | None):
        one, zero = np.ones_like(A), np.zeros_like(A)

        def seed(name, value):
            inner = one if eq == name else zero
            if outer is None:
                return Dual(value, inner)
            return Dual(Dual(value, inner), Dual(one if outer == name else zero, zero))

        return self.R(seed("A", A), seed("s", s), seed("alpha", self.alpha + zero))

    def evaluate(self, x: np.ndarray, jacobian: bool = True):
        """Residuals G (n, m), scaled residuals (n, m) and, optionally, J (n, m, 2)."""
        A, s = x[:, 0], x[:, 1]
        n, m = len(A), len(self.equations)
        G = np.empty((n, m))
        J = np.empty((n, m, 2)) if jacobian else None
        R0 = None
        for i, eq in enumerate(self.equations):
            if not jacobian:
                out = self._pass(A, s, eq, None)
                R0, dR = out.val, out.eps
                G[:, i] = dR + R0 / (2 * s) if eq == "s" else dR
                continue
            for j, outer in enumerate(("A", "s")):
                out = self._pass(A, s, eq, outer)
                R0, dR = out.val.val, out.val.eps
                dRo, d2R = out.eps.val, out.eps.eps
                if eq == "s":
                    G[:, i] = dR + R0 / (2 * s)
                    J[:, i, j] = d2R + dRo / (2 * s) - (R0 / (2 * s * s) if outer == "s" else 0.0)
                else:
                    G[:, i] = dR
                    J[:, i, j] = d2R
        scaled = np.abs(G) * self.normalizer(x)
        return G, scaled, J

    def normalizer(self, x: np.ndarray) -> np.ndarray:
        """Per-equation factors turning |dR/dx_e| into a dimensionless residual |x_e dR/dx_e| / |R|."""
        A, s = x[:, 0], x[:, 1]
        mag = np.asarray(self.R.magnitude(A, s, self.alpha)) * np.ones(len(A))
        mag = np.where(mag > 0, mag, 1.0)
        weights = np.stack([np.abs(s) if e == "s" else np.abs(A) for e in self.equations], axis=1)
        return weights / mag[:, None]


def damped_newton(system: StationarySystem, starts: np.ndarray, max_iter: int = MAX_ITER,
                  tol: float = 1e-13):
    """Run all starts at once.  Returns (x, scaled_residual, iterations, status).

    Status is one of converged, stalled, singular, diverged, trivial (drifting
    onto the A = 0 line of roots) or max_iter.
    """
    x = starts.astype(float).copy()
    bound = 1e3 * np.maximum(np.abs(starts).max(axis=0), 1.0)
    a_floor = 1e-8 * max(float(np.abs(starts[:, 0]).max()), 1e-300)
    n = len(x)
    status = np.array(["running"] * n, dtype=object)
    iters = np.zeros(n, dtype=int)
    resid = np.full((n, len(system.equations)), np.inf)
    square = len(system.equations) == 2
    for it in range(max_iter):
        idx = np.flatnonzero(status == "running")
        if idx.size == 0:
            break
        xa = x[idx]
        with np.errstate(all="ignore"):
            G, scaled, J = system.evaluate(xa)
        resid[idx] = scaled
        bad = ~np.isfinite(G).all(axis=1) | ~np.isfinite(J).all(axis=(1, 2))
        done = (scaled.max(axis=1) < tol) & ~bad
        status[idx[done]] = "converged"
        status[idx[bad]] = "diverged"
        live = ~done & ~bad
        if not live.any():
            continue
        idx, xa, G, J, scaled = idx[live], xa[live], G[live], J[live], scaled[live]
        iters[idx] = it + 1
        if square:
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            jscale = np.abs(J).reshape(len(idx), -1).max(axis=1) ** 2
            singular = ~(np.abs(det) > 1e-14 * jscale)
            safe = np.where(singular, 1.0, det)
            step = np.stack([
                (-G[:, 0] * J[:, 1, 1] + G[:, 1] * J[:, 0, 1]) / safe,
                (-G[:, 1] * J[:, 0, 0] + G[:, 0] * J[:, 1, 0]) / safe,
            ], axis=1)
        else:
            # Gauss-Newton on the normalized residuals; raw ones vanish along A = 0
            with np.errstate(all="ignore"):
                w = system.normalizer(xa)
            Jw, Gw = J * w[:, :, None], G * w
            JT = np.transpose(Jw, (0, 2, 1))
            N = JT @ Jw
            det = np.linalg.det(N)
            singular = ~(np.abs(det) > 1e-28 * np.abs(N).reshape(len(idx), -1).max(axis=1) ** 2)
            N[singular] = np.eye(2)
            step = -np.linalg.solve(N, (JT @ Gw[:, :, None]))[:, :, 0]
        if singular.any():
            status[idx[singular]] = "singular" if it == 0 else "stalled"
        ok = ~singular
        idx, xa, step, scaled = idx[ok], xa[ok], step[ok], scaled[ok]
        if idx.size == 0:
            continue
        # the normalization is frozen at the current iterate so the Newton step is a descent direction
        with np.errstate(all="ignore"):
            norm = system.normalizer(xa)
        merit0 = (scaled ** 2).sum(axis=1)
        lam = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        trial = xa.copy()
        for _ in range(40):
            pending = ~accepted
            if not pending.any():
                break
            cand = xa[pending] + lam[pending, None] * step[pending]
            with np.errstate(all="ignore"):
                Gc, _, _ = system.evaluate(cand, jacobian=False)
            with np.errstate(all="ignore"):
                merit = ((Gc * norm[pending]) ** 2).sum(axis=1)
            good = np.isfinite(merit) & (merit < merit0[pending])
            where = np.flatnonzero(pending)
            trial[where[good]] = cand[good]
            accepted[where[good]] = True
            lam[where[~good]] *= 0.5
        x[idx[accepted]] = trial[accepted]
        stuck = ~accepted
        if square:
            # no descent left: accept only if already at the root up to rounding
            at_root = stuck & (scaled.max(axis=1) < RESIDUAL_TOL)
            status[idx[at_root]] = "converged"
            status[idx[stuck & ~at_root]] = "stalled"
        else:
            rel_step = lam * np.abs(step).max(axis=1) / np.maximum(np.abs(xa).max(axis=1), 1e-300)
            status[idx[stuck | (accepted & (rel_step < 1e-13))]] = "converged"
        runaway = ~np.isfinite(x[idx]).all(axis=1) | (np.abs(x[idx]) > bound).any(axis=1)
        status[idx[runaway]] = "diverged"
        trivial = ~runaway & (np.abs(x[idx, 0]) < a_floor)
        status[idx[trivial]] = "trivial"
    status[status == "running"] = "max_iter"
    # final residuals at the returned points
    with np.errstate(all="ignore"):
        _, final, _ = system.evaluate(x, jacobian=False)
    return x, final, iters, status


def _dedupe(points: list[tuple[np.ndarray, int]], rtol: float = DEDUP_RTOL) -> list[int]:
    keep: list[int] = []
    for i, (p, _) in enumerate(points):
        if all(np.linalg.norm(p - points[k][0]) > rtol * max(np.linalg.norm(p), np.linalg.norm(points[k][0]))
               for k in keep):
            keep.append(i)
    return keep


def _solve(fam: CoefficientFamily, mode: str, reduced: ReducedAction, equations: Sequence[str],
           starts: StartGrid, diagnostic: str | None, tail_admissible: bool, kappa_sq: float,
           classify: bool = True) -> RootList:
    system = StationarySystem(reduced, equations)
    start_pts = starts.points()
    x, resid, iters, status = damped_newton(system, start_pts)
    a_scale = max((abs(a) for a in starts.A_values), default=1.0)
    skipped = []
    found = []
    for i in range(len(x)):
        if status[i] != "converged" or not np.isfinite(resid[i]).all():
            skipped.append((tuple(start_pts[i]), str(status[i])))
            continue
        if resid[i].max() >= RESIDUAL_TOL and len(equations) == 2:
            skipped.append((tuple(start_pts[i]), "residual"))
            continue
        if abs(x[i, 0]) < 1e-8 * a_scale or abs(x[i, 1]) < 1e-12:
            continue
        found.append((x[i], i))
    keep = _dedupe(found)
    kappa = math.sqrt(kappa_sq) if kappa_sq > 0 else 0.0
    results = []
    for k in keep:
        xi, i = found[k]
        A, s = float(xi[0]), float(xi[1])
        unsolved = None
        if diagnostic is not None:
            _, sc, _ = StationarySystem(reduced, (diagnostic,)).evaluate(xi[None, :], jacobian=False)
            unsolved = float(sc[0, 0])
        res = tuple(float(v) for v in resid[i])
        results.append(StationaryResult(
            mode=mode,
            params=AnsatzParams(A, s, 0.0, kappa),
            gradient_residual=res,
            unsolved_equation_residual=unsolved,
            admissible=bool(s > 0 and max(res) < RESIDUAL_TOL),
            iterations=int(iters[i]),
            start_point=AnsatzParams(float(start_pts[i, 0]), float(start_pts[i, 1]), 0.0, kappa),
            tail_admissible=tail_admissible,
            kappa_squared=kappa_sq,
        ))
    results.sort(key=lambda r: (r.A, r.s))
    if classify:
        for r in results:
            r.extremum = classify_stationary(fam, r, reduced)
    for start, reason in skipped:
        log.debug("start %s skipped: %s", start, reason)
    return RootList(results, skipped)


def solve_regular(fam: CoefficientFamily, starts: StartGrid | None = None, seed: int = 0,
                  classify: bool = True) -> RootList:
    """Roots of dS/dA = dS/ds = 0 for the pure Gaussian trial function (alpha = 0).

    ``seed`` is accepted for interface symmetry; the start grid is deterministic.
    """
    starts = starts or StartGrid.default(fam)
    reduced = fam.cached(("reduced", 0.0, 0), lambda: ReducedAction(fam, 0.0, max_alpha_power=0))
    return _solve(fam, "regular", reduced, ("A", "s"), starts, None, True, 0.0, classify)


def embedded_kappa_squared(fam: CoefficientFamily) -> tuple[float, bool]:
    """(kappa^2, tail_admissible); kappa^2 may be negative when no real tail exists."""
    try:
        kappa = select_kappa(fam)
        return kappa * kappa, True
    except NoOscillatoryTailError:
        return linearized_dispersion(fam).kappa_squared(), False


def solve_embedded(fam: CoefficientFamily, starts: StartGrid | None = None, seed: int = 0,
                   least_squares: bool = False, classify: bool = True) -> RootList:
    """Embedded solitary wave: alpha = 0 with dS/dA = dS/dalpha = 0.

    dS/ds is reported as ``unsolved_equation_residual``.  With
    ``least_squares`` all three equations are fitted in the Gauss-Newton sense.
    """
    k2, tail_ok = embedded_kappa_squared(fam)
    starts = starts or StartGrid.default(fam, mirror_s=True, kappa_sq=k2)
    reduced = fam.cached(("reduced", k2, 1), lambda: ReducedAction(fam, k2, max_alpha_power=1))
    if least_squares:
        return _solve(fam, "embedded-lstsq", reduced, ("A", "alpha", "s"), starts, None, tail_ok, k2,
                      classify)
    return _solve(fam, "embedded", reduced, ("A", "alpha"), starts, "s", tail_ok, k2, classify)


def classify_stationary(fam: CoefficientFamily, result: StationaryResult,
                        reduced: ReducedAction | None = None, rtol: float = 1e-12) -> str:
    """max / min / saddle / degenerate from the (A, s) Hessian of the action."""
    p = result.params
    if reduced is None:
        reduced = ReducedAction(fam, result.kappa_squared, max_alpha_power=0)
    if p.s <= 0:
        # the action itself is complex here; classify its analytic continuation R
        f = lambda A, s: reduced(A, s, 0.0)  # noqa: E731
    else:
        f = lambda A, s: reduced.action(A, s, 0.0)  # noqa: E731
    value, g, h = hessian(f, [p.A, p.s])
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    scale = np.abs(h).max() ** 2
    if scale == 0 or abs(det) < rtol * scale:
        return "degenerate"
    eig = np.linalg.eigvalsh(h)
    if eig.min() > 0:
        return "min"
    if eig.max() < 0:
        return "max"
    return "saddle"
