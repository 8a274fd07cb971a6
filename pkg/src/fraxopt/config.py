"""JSON run configuration: schema, parsing and the bundled example instance.

Example (the bundled ``headneck.json``)::

    {
      "schema_version": 1,
      "tumor": {"alpha0": 0.35, "beta0": 0.035},
      "proliferation": {"t_lag": 7, "t_double": 2},
      "oars": [{"name": "spinal cord", "alpha_over_beta": 3,
                "tolerance_dose": 45, "conventional_fractions": 35}, ...],
      "n_max": 100,
      "grid": {"t_lag": [...], "t_double": [...], "delta": [...], "theta": [...]},
      "options": {"seed": 0, "samples_per_oar": 5}
    }

Each OAR gives its ratio either as ``rho`` (Gy^-1) or ``alpha_over_beta``
(Gy), plus optional ``rho_min``/``rho_max``. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .experiments import SweepGrid
from .model import InputError, OarSpec, ProblemInstance, ProliferationParams, TumorParams

SCHEMA_VERSION = 1
DEFAULT_N_MAX = 100
BUNDLED = ("headneck.json",)

_pos = {"type": "number", "exclusiveMinimum": 0}
_unit = {"type": "number", "minimum": 0, "maximum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "tumor", "proliferation", "oars"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tumor": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha0", "beta0"],
            "properties": {"alpha0": _pos, "beta0": _pos},
        },
        "proliferation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_lag", "t_double"],
            "properties": {"t_lag": {"type": "integer", "minimum": 0}, "t_double": _pos},
        },
        "oars": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "tolerance_dose", "conventional_fractions"],
                "oneOf": [{"required": ["rho"]}, {"required": ["alpha_over_beta"]}],
                "properties": {
                    "name": {"type": "string"},
                    "rho": _pos,
                    "alpha_over_beta": _pos,
                    "rho_min": {"type": "number", "minimum": 0},
                    "rho_max": _pos,
                    "tolerance_dose": _pos,
                    "conventional_fractions": {"type": "integer", "minimum": 1},
                },
            },
        },
        "n_max": {"type": "integer", "minimum": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_lag": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
                "t_double": {"type": "array", "minItems": 1, "items": _pos},
                "delta": {"type": "array", "minItems": 1, "items": _unit},
                "theta": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
            },
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer"},
                "samples_per_oar": {"type": "integer", "minimum": 2},
                "gamma": {"type": "array", "minItems": 1, "items": _pos},
                "joint": {"type": "boolean"},
                "max_scenarios": {"type": "integer", "minimum": 1},
                "n_forced": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(InputError):
    """Configuration failed schema or semantic validation."""


@dataclass(frozen=True)
class RunConfig:
    instance: ProblemInstance
    grid: Optional[SweepGrid] = None
    options: dict = field(default_factory=dict)


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if err is not None:
        raise ConfigError(f"{_path(err.absolute_path)}: {err.message}")

    oars = []
    for i, o in enumerate(data["oars"]):
        rho = o["rho"] if "rho" in o else 1.0 / o["alpha_over_beta"]
        try:
            oars.append(
                OarSpec(
                    name=o["name"],
                    rho_nominal=rho,
                    tolerance_dose=o["tolerance_dose"],
                    conventional_fractions=o["conventional_fractions"],
                    rho_min=o.get("rho_min"),
                    rho_max=o.get("rho_max"),
                )
            )
        except InputError as exc:
            raise ConfigError(f"oars[{i}]: {exc}") from None
    prolif = data["proliferation"]
    instance = ProblemInstance(
        tumor=TumorParams(data["tumor"]["alpha0"], data["tumor"]["beta0"]),
        proliferation=ProliferationParams(prolif["t_lag"], prolif["t_double"]),
        oars=oars,
        n_max=data.get("n_max", DEFAULT_N_MAX),
    )
    grid = None
    if "grid" in data:
        g = data["grid"]
        defaults = SweepGrid()
        try:
            grid = SweepGrid(
                t_lag_values=tuple(g.get("t_lag", defaults.t_lag_values)),
                t_double_values=tuple(g.get("t_double", defaults.t_double_values)),
                delta_values=tuple(g.get("delta", defaults.delta_values)),
                theta_values=tuple(g.get("theta", defaults.theta_values)),
            )
        except InputError as exc:
            raise ConfigError(f"grid: {exc}") from None
    return RunConfig(instance, grid, dict(data.get("options", {})))


def bundled_text(name: str) -> str:
    return resources.files("fraxopt").joinpath("data", name).read_text(encoding="utf-8")


def load_config(path) -> RunConfig:
    """Parse a config file; bare names of bundled configs also resolve."""
    p = Path(path)
    if p.exists():
        return parse_config(p.read_text(encoding="utf-8"))
    if str(path) in BUNDLED:
        return parse_config(bundled_text(str(path)))
    raise ConfigError(f"config file not found: {path}")


def head_and_neck(t_lag: int = 7, t_double: float = 2, n_max: int = DEFAULT_N_MAX) -> ProblemInstance:
    """The four-OAR head-and-neck instance with nominal ratios."""
    inst = parse_config(bundled_text("headneck.json")).instance
    return replace(inst, proliferation=ProliferationParams(t_lag, t_double), n_max=n_max)
