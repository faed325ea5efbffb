"""JSON experiment configs: parsing, validation, canonical serialisation."""

from __future__ import annotations

import hashlib
import json
import math
import re
from pathlib import Path

import jsonschema

from .experiments import ExperimentConfig, PemSettings, rao_garnier
from .lti import RationalTransferFunction
from .pem import GaussNewtonOptions
from .signals import Component, MultisineSignal, SamplingGrid


class ConfigError(ValueError):
    pass


_number = {"type": "number"}
_freq = {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "string"}]}
_coeffs = {"type": "array", "items": _number, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["input", "grid"],
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["frf", "pem"]},
        "system": {
            "anyOf": [
                {"type": "null"},
                {"const": "rao_garnier"},
                {
                    "type": "object",
                    "required": ["numerator", "denominator"],
                    "additionalProperties": False,
                    "properties": {"numerator": _coeffs, "denominator": _coeffs},
                },
            ]
        },
        "input": {
            "type": "object",
            "required": ["dc_amplitude"],
            "additionalProperties": False,
            "properties": {
                "dc_amplitude": _number,
                "components": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["frequency"],
                        "additionalProperties": False,
                        "properties": {
                            "amplitude": _number,
                            "frequency": _freq,
                            "phase": _number,
                        },
                    },
                },
            },
        },
        "grid": {
            "type": "object",
            "required": ["period", "count"],
            "additionalProperties": False,
            "properties": {
                "period": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "snr_db": {"type": ["number", "null"]},
        "noise_std": {"type": ["number", "null"], "minimum": 0},
        "runs": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "n_grid": {
            "type": ["array", "null"],
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "checks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"leakage": {"type": "boolean"}},
        },
        "pem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "numerator_degree": {"type": ["integer", "null"], "minimum": 0},
                "denominator_degree": {"type": ["integer", "null"], "minimum": 0},
                "init_perturbation": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "theta_init": {"type": ["array", "null"], "items": _number},
                "max_iterations": {"type": "integer", "minimum": 1},
                "step_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "residual_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "damping": {"type": "number", "minimum": 0},
            },
        },
    },
}

_PI_RE = re.compile(
    r"^\s*(?P<num>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9]*\.?[0-9]+))?\s*$"
)


def parse_frequency(value) -> float:
    """Rad/s from a number or a multiple of pi such as ``"5pi"`` or ``"7pi/2"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip().lower()
    m = _PI_RE.match(text)
    if m:
        num = float(m["num"]) if m["num"] else 1.0
        den = float(m["den"]) if m["den"] else 1.0
        if den == 0:
            raise ConfigError(f"bad frequency {value!r}")
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"bad frequency {value!r}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {exc.message}") from None
    try:
        sysd = data.get("system")
        if sysd == "rao_garnier":
            system = rao_garnier()
        elif sysd is None:
            system = None
        else:
            system = RationalTransferFunction(tuple(sysd["numerator"]), tuple(sysd["denominator"]))
        ind = data["input"]
        comps = tuple(
            Component(c.get("amplitude", 1.0), parse_frequency(c["frequency"]), c.get("phase", 0.0))
            for c in ind.get("components", [])
        )
        u = MultisineSignal(ind["dc_amplitude"], comps)
        grid = SamplingGrid(data["grid"]["period"], data["grid"]["count"])
        p = data.get("pem", {})
        gn = GaussNewtonOptions(
            **{k: p[k] for k in ("max_iterations", "step_tolerance", "residual_tolerance", "damping")
               if k in p}
        )
        theta_init = p.get("theta_init")
        pem = PemSettings(
            numerator_degree=p.get("numerator_degree"),
            denominator_degree=p.get("denominator_degree"),
            options=gn,
            init_perturbation=p.get("init_perturbation", 0.10),
            theta_init=tuple(theta_init) if theta_init is not None else None,
        )
        return ExperimentConfig(
            input=u,
            grid=grid,
            system=system,
            snr_db=data.get("snr_db", 10.0),
            noise_std=data.get("noise_std"),
            runs=data.get("runs", 1),
            master_seed=data.get("master_seed", 0),
            mode=data.get("mode", "frf"),
            pem=pem,
            n_grid=tuple(data["n_grid"]) if data.get("n_grid") else None,
            tol=data.get("tol"),
            check_leakage=data.get("checks", {}).get("leakage", False),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical JSON-compatible form; floats round-trip exactly through ``json``."""
    u = cfg.input
    o = cfg.pem.options
    return {
        "mode": cfg.mode,
        "system": None if cfg.system is None else {
            "numerator": list(cfg.system.numerator),
            "denominator": list(cfg.system.denominator),
        },
        "input": {
            "dc_amplitude": u.dc_amplitude,
            "components": [
                {"amplitude": c.amplitude, "frequency": c.angular_frequency, "phase": c.phase}
                for c in u.components
            ],
        },
        "grid": {"period": cfg.grid.period, "count": cfg.grid.count},
        "snr_db": cfg.snr_db,
        "noise_std": cfg.noise_std,
        "runs": cfg.runs,
        "master_seed": cfg.master_seed,
        "n_grid": list(cfg.n_grid) if cfg.n_grid else None,
        "tol": cfg.tol,
        "checks": {"leakage": cfg.check_leakage},
        "pem": {
            "numerator_degree": cfg.pem.numerator_degree,
            "denominator_degree": cfg.pem.denominator_degree,
            "init_perturbation": cfg.pem.init_perturbation,
            "theta_init": list(cfg.pem.theta_init) if cfg.pem.theta_init is not None else None,
            "max_iterations": o.max_iterations,
            "step_tolerance": o.step_tolerance,
            "residual_tolerance": o.residual_tolerance,
            "damping": o.damping,
        },
    }


def dumps(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2)


def digest(cfg: ExperimentConfig) -> str:
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(data)
