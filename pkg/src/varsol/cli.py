"""Command-line runner: ``varsol <config> [--task T] [--set k=v]... [--out DIR] [--svg] [--seed N]``.

Exit status: 0 success, 1 usage or config error, 2 numerical failure
(no admissible root, imaginary tail wavenumber, quadrature failure),
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .accuracy import QuadratureError, quadrature_action, residual_scan
from .averaging import AnsatzParams, SecularResidualError, assemble_action, select_kappa
from .config import TASKS, ConfigError, RunConfig, apply_override, load_config, validate
from .family import (DegenerateFamilyError, NoOscillatoryTailError, el_parts, el_polynomial,
                     linearized_dispersion)
from .fels import FAIL_THRESHOLD, PASS_THRESHOLD, build_F, fels_check
from .poly import ParseError, UnboundError
from .solver import (DEDUP_RTOL, MAX_ITER, RESIDUAL_TOL, StartGrid, embedded_kappa_squared, solve_embedded,
                     solve_regular)

log = logging.getLogger("varsol")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_QUAD_TOL = 1e-10
SECULAR_RTOL = 1e-8


class NumericalFailure(RuntimeError):
    """Task ran but produced no usable result; artifacts are still written."""


class InvariantViolation(RuntimeError):
    pass


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else f"{x:.17g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# -- tasks ---------------------------------------------------------------
# each returns (csv text, svg writer or None, optional failure message)

def _task_derive_ode(cfg: RunConfig, fam):
    lead, rest = el_parts(fam)
    F = build_F(fam).F
    rows = [
        ("lagrangian", fam.lagrangian.to_expr()),
        ("c4", fam.c4.to_expr()),
        ("el_leading", lead.to_expr()),
        ("el_rest", rest.to_expr()),
        ("el", el_polynomial(fam).to_expr()),
        ("F_numerator", F.numerator.to_expr()),
        ("F_denominator", F.denominator.to_expr()),
    ]
    try:
        disp = linearized_dispersion(fam)
        rows += [(f"dispersion_k2^{i}", _num(c)) for i, c in enumerate(disp.coeffs)]
    except ValueError as exc:
        rows.append(("dispersion", f"unavailable: {exc}"))
    return _csv(("quantity", "expression"), rows), None, None


def _task_fels(cfg: RunConfig, fam):
    report = fels_check(fam, n_samples=int(cfg.option("n_samples", 1000)), seed=cfg.seed)
    return report.to_csv(), None, None


def _starts(cfg: RunConfig, fam, mirror: bool):
    default = StartGrid.default(fam, mirror_s=mirror,
                                kappa_sq=embedded_kappa_squared(fam)[0] if mirror else None)
    A = cfg.option("starts_A")
    s = cfg.option("starts_s")
    if A is None and s is None:
        return default
    return StartGrid(tuple(A or default.A_values), tuple(s or default.s_values))


def _solve(cfg: RunConfig, fam, mode: str):
    if mode == "regular":
        return solve_regular(fam, _starts(cfg, fam, False), seed=cfg.seed)
    return solve_embedded(fam, _starts(cfg, fam, True), seed=cfg.seed,
                          least_squares=bool(cfg.option("least_squares", False)))


def _check_results(results) -> None:
    for r in results:
        if r.admissible and not (r.s > 0 and max(r.gradient_residual) < RESIDUAL_TOL):
            raise InvariantViolation(f"root flagged admissible but fails the admissibility test: {r}")


def _results_csv(fam, results, kappa_default: float | None) -> str:
    names = sorted(fam.params)
    header = ["mode", *names, "kappa", "A", "s", "alpha", "grad_res_1", "grad_res_2",
              "unsolved_res", "admissible", "extremum", "iterations"]
    rows = []
    for r in results:
        if r.mode == "regular":
            kappa = kappa_default
        else:
            kappa = math.sqrt(r.kappa_squared) if r.kappa_squared > 0 else None
        res = list(r.gradient_residual) + [None, None]
        unsolved = r.unsolved_equation_residual
        if r.mode == "embedded-lstsq":
            unsolved = r.gradient_residual[2]
        rows.append([r.mode, *(_num(fam.params[n]) for n in names), _num(kappa), _num(r.A), _num(r.s),
                     _num(r.params.alpha), _num(res[0]), _num(res[1]), _num(unsolved),
                     _num(r.admissible), r.extremum, _num(r.iterations)])
    return _csv(header, rows)


def _optional_kappa(fam) -> float | None:
    try:
        return select_kappa(fam)
    except (NoOscillatoryTailError, SecularResidualError, ValueError):
        return None


def _task_solve(cfg: RunConfig, fam, mode: str):
    results = _solve(cfg, fam, mode)
    _check_results(results)
    text = _results_csv(fam, results, _optional_kappa(fam) if mode == "regular" else None)

    def svg(path):
        from .plots import profile_svg

        profile_svg(results.admissible(), path)

    failure = None
    if not results.admissible():
        failure = f"no admissible {mode} root found ({len(results)} inadmissible, {len(results.skipped)} starts skipped)"
    elif mode == "embedded" and not all(r.tail_admissible for r in results):
        failure = ("tail wavenumber is imaginary (kappa^2 = "
                   f"{results[0].kappa_squared:.6g}); the tail cannot oscillate")
    return text, svg, failure


def _task_scan(cfg: RunConfig, fam):
    mode = cfg.option("mode", "regular")
    results = _solve(cfg, fam, mode)
    admissible = results.admissible()
    if not admissible:
        raise NumericalFailure(f"no admissible {mode} root to start the scan from")
    axis = cfg.option("axis", "d1")
    if axis not in fam.params:
        raise ConfigError(f"[task] axis {axis!r} is not a bound parameter")
    axis_values = np.linspace(cfg.option("axis_min", 0.5), cfg.option("axis_max", 10.0),
                              int(cfg.option("axis_points", 101)))
    z = np.linspace(cfg.option("z_min", -3.0), cfg.option("z_max", 3.0), int(cfg.option("z_points", 121)))
    grid = residual_scan(fam, admissible[0], z, (axis, axis_values), alpha=cfg.option("alpha"))
    if np.any(grid.values < 0):
        raise InvariantViolation("negative entry in residual grid")

    def svg(path):
        from .plots import heatmap_svg

        heatmap_svg(grid, path)

    missing = int(grid.missing.sum())
    failure = f"{missing} axis values without an admissible root" if missing == len(axis_values) else None
    if missing:
        log.warning("%d of %d axis values have no admissible root", missing, len(axis_values))
    return grid.to_csv(), svg, failure


def _task_action(cfg: RunConfig, fam):
    A, s = cfg.option("A", 1.0), cfg.option("s", 1.0)
    alpha = cfg.option("alpha", 0.0)
    kappa = cfg.option("kappa")
    if kappa is None:
        kappa = select_kappa(fam) if alpha != 0 else 0.0
    tol = cfg.option("tol", DEFAULT_QUAD_TOL)
    p = AnsatzParams(A, s, alpha, kappa)
    closed = float(assemble_action(fam, p, SECULAR_RTOL))
    numeric = quadrature_action(fam, p, tol)
    rel = abs(closed - numeric) / max(abs(closed), abs(numeric), 1e-300)
    header = ("A", "s", "alpha", "kappa", "action_closed_form", "action_quadrature", "relative_difference")
    return _csv(header, [[_num(v) for v in (A, s, alpha, kappa, closed, numeric, rel)]]), None, None


def run_task(cfg: RunConfig):
    fam = cfg.build_family()
    task = cfg.task_name
    if task == "derive-ode":
        return _task_derive_ode(cfg, fam)
    if task == "fels-check":
        return _task_fels(cfg, fam)
    if task == "solve-regular":
        return _task_solve(cfg, fam, "regular")
    if task == "solve-embedded":
        return _task_solve(cfg, fam, "embedded")
    if task == "scan-residual":
        return _task_scan(cfg, fam)
    if task == "action-eval":
        return _task_action(cfg, fam)
    raise InvariantViolation(f"unhandled task {task}")


def manifest_text(cfg: RunConfig, outputs: list[str], status: int) -> str:
    lines = [
        "tool=varsol",
        f"version={__version__}",
        f"task={cfg.task_name}",
        f"config_sha256={cfg.digest()}",
        f"seed={cfg.seed}",
        f"residual_tol={RESIDUAL_TOL!r}",
        f"dedup_rtol={DEDUP_RTOL!r}",
        f"max_iter={MAX_ITER}",
        f"fels_pass_threshold={PASS_THRESHOLD!r}",
        f"fels_fail_threshold={FAIL_THRESHOLD!r}",
        f"secular_rtol={SECULAR_RTOL!r}",
        f"quadrature_tol={cfg.option('tol', DEFAULT_QUAD_TOL)!r}",
        f"outputs={','.join(outputs)}",
        f"exit_status={status}",
        f"timestamp={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}",
    ]
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varsol", description="Variational solitary-wave workbench.")
    ap.add_argument("config", help="run configuration file")
    ap.add_argument("--task", choices=TASKS, help="override [task] task")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config value; KEY may be section.key")
    ap.add_argument("--out", help="output directory (default: [output] dir or ./varsol-out)")
    ap.add_argument("--svg", action="store_true", help="also write an SVG plot")
    ap.add_argument("--seed", type=int, help="override [task] seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _configure(args) -> RunConfig:
    cfg = load_config(args.config)
    for item in args.overrides:
        apply_override(cfg, item)
    if args.task:
        cfg.task["task"] = args.task
    if args.seed is not None:
        cfg.task["seed"] = args.seed
    if args.out:
        cfg.output["dir"] = args.out
    if args.svg:
        cfg.output["svg"] = True
    validate(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _configure(args)
    except ConfigError as exc:
        print(f"varsol: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(cfg.output.get("dir", "varsol-out"))
    status, failure, text, svg = EXIT_OK, None, None, None
    try:
        text, svg, failure = run_task(cfg)
        if failure:
            status = EXIT_NUMERIC
    except (ConfigError, ParseError, UnboundError, DegenerateFamilyError) as exc:
        print(f"varsol: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, NoOscillatoryTailError, SecularResidualError, QuadratureError) as exc:
        status, failure = EXIT_NUMERIC, str(exc)
    except InvariantViolation as exc:
        status, failure = EXIT_INTERNAL, f"internal invariant violated: {exc}"
    except Exception as exc:  # noqa: BLE001 - anything unexpected is a bug
        log.exception("unexpected failure")
        status, failure = EXIT_INTERNAL, f"internal error: {exc!r}"

    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.task_name
    outputs = []
    if text is None:
        text = _csv(("status", "message"), [("failed", failure or "")])
    (out / f"{stem}.csv").write_text(text)
    outputs.append(f"{stem}.csv")
    if svg is not None and cfg.output.get("svg", False):
        svg(out / f"{stem}.svg")
        outputs.append(f"{stem}.svg")
    (out / "manifest.txt").write_text(manifest_text(cfg, outputs, status))
    if failure:
        print(f"varsol: {failure}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
