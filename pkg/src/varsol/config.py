"""Run configuration files.

A config has four sections::

    [family]   preset = "example1"   or   c1 = "...", c2 = "...", c3 = "...", c5 = "..."
    [params]   d1 = 1.0 ...
    [task]     task = "solve-regular", seed = 0, plus task options
    [output]   dir = "out", svg = false

The syntax is the TOML subset of sections, ``key = value`` pairs, double-quoted
strings and ``#`` comments.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .family import (PRESET_PARAMS, PRESETS, U_VARS, UPP_VARS, CoefficientFamily, family_from_strings,
                     preset)
from .poly import ParameterSet, ParseError, UnboundError, parse_poly

TASKS = ("derive-ode", "fels-check", "solve-regular", "solve-embedded", "scan-residual", "action-eval")

FAMILY_KEYS = {"preset": str, "c1": str, "c2": str, "c3": str, "c5": str}
OUTPUT_KEYS = {"dir": str, "svg": bool}
TASK_KEYS = {
    "task": str,
    "seed": int,
    # solver
    "starts_A": list,
    "starts_s": list,
    "least_squares": bool,
    # fels-check
    "n_samples": int,
    # scan-residual
    "mode": str,
    "axis": str,
    "axis_min": float,
    "axis_max": float,
    "axis_points": int,
    "z_min": float,
    "z_max": float,
    "z_points": int,
    # action-eval (alpha also applies to scan-residual)
    "A": float,
    "s": float,
    "alpha": float,
    "kappa": float,
    "tol": float,
}
SECTIONS = {"family": FAMILY_KEYS, "params": None, "task": TASK_KEYS, "output": OUTPUT_KEYS}


class ConfigError(ValueError):
    """Config file could not be parsed or failed validation."""


@dataclass
class RunConfig:
    family: dict
    params: dict
    task: dict
    output: dict = field(default_factory=dict)

    @property
    def task_name(self) -> str:
        return self.task["task"]

    @property
    def seed(self) -> int:
        return int(self.task.get("seed", 0))

    def option(self, key: str, default: Any = None) -> Any:
        return self.task.get(key, default)

    def canonical(self) -> str:
        """Stable JSON of everything that affects results (output location excluded)."""
        data = {"family": self.family, "params": self.params, "task": self.task}
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def build_family(self) -> CoefficientFamily:
        fam = self.family
        if "preset" in fam:
            return preset(fam["preset"], self.params)
        try:
            return family_from_strings(fam["c1"], fam["c2"], fam["c3"], fam["c5"], self.params)
        except (ParseError, UnboundError) as exc:
            params = ParameterSet(self.params)
            for key, vars in (("c1", U_VARS), ("c2", UPP_VARS), ("c3", U_VARS), ("c5", U_VARS)):
                try:
                    parse_poly(fam[key], vars, params)
                except (ParseError, UnboundError) as inner:
                    raise ConfigError(f"[family] {key}: {inner}") from inner
            raise ConfigError(f"[family] {exc}") from exc


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    sections = {}
    for name, body in raw.items():
        if name not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{name}]")
        if not isinstance(body, dict):
            raise ConfigError(f"{source}: {name} must be a section")
        sections[name] = dict(body)
    cfg = RunConfig(
        family=sections.get("family", {}),
        params=sections.get("params", {}),
        task=sections.get("task", {}),
        output=sections.get("output", {}),
    )
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def _check_type(section: str, key: str, value: Any, kind: type) -> Any:
    where = f"[{section}] {key}"
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{where}: must be finite")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or not value or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(f"{where}: expected a non-empty list of numbers")
        return [float(v) for v in value]
    if not isinstance(value, kind):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {value!r}")
    return value


def validate(cfg: RunConfig) -> None:
    for section, allowed in (("family", FAMILY_KEYS), ("task", TASK_KEYS), ("output", OUTPUT_KEYS)):
        body = getattr(cfg, section)
        for key in list(body):
            if key not in allowed:
                raise ConfigError(f"[{section}] unknown key {key!r}")
            body[key] = _check_type(section, key, body[key], allowed[key])
    for key in list(cfg.params):
        cfg.params[key] = _check_type("params", key, cfg.params[key], float)

    task = cfg.task.get("task")
    if task is None:
        raise ConfigError("[task] task is required")
    if task not in TASKS:
        raise ConfigError(f"[task] task must be one of {', '.join(TASKS)}; got {task!r}")
    if cfg.task.get("mode", "regular") not in ("regular", "embedded"):
        raise ConfigError("[task] mode must be \"regular\" or \"embedded\"")

    fam = cfg.family
    coeffs = [k for k in ("c1", "c2", "c3", "c5") if k in fam]
    if "preset" in fam:
        if coeffs:
            raise ConfigError("[family] give either preset or coefficient expressions, not both")
        if fam["preset"] not in PRESETS:
            raise ConfigError(f"[family] preset must be one of {sorted(PRESETS)}; got {fam['preset']!r}")
        missing = [p for p in PRESET_PARAMS[fam["preset"]] if p not in cfg.params]
        if missing:
            raise ConfigError(f"[params] preset {fam['preset']} needs {', '.join(missing)}")
    elif len(coeffs) != 4:
        absent = [k for k in ("c1", "c2", "c3", "c5") if k not in fam]
        raise ConfigError(f"[family] missing coefficient expressions: {', '.join(absent)}")


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(cfg: RunConfig, assignment: str) -> None:
    """Apply ``key=value`` or ``section.key=value``; bare keys are routed by name."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, text = (part.strip() for part in assignment.split("=", 1))
    if "." in key:
        section, key = key.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"--set: unknown section {section!r}")
    elif key in FAMILY_KEYS:
        section = "family"
    elif key in TASK_KEYS:
        section = "task"
    elif key in OUTPUT_KEYS:
        section = "output"
    else:
        section = "params"
    body = getattr(cfg, section)
    if section == "family" and key == "preset":
        for k in ("c1", "c2", "c3", "c5"):
            body.pop(k, None)
    elif section == "family":
        body.pop("preset", None)
    allowed = SECTIONS[section]
    value = _parse_value(text)
    if allowed is not None and allowed.get(key) is str and not isinstance(value, str):
        value = text
    body[key] = value
