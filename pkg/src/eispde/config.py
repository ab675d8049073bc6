"""TOML model/experiment configuration.

Recognised tables and keys (anything else is rejected by name)::

    [space]        kind = "laplacian" | "generic"; n; eigenvalues (generic); alpha (generic)
    [drift]        kind = "linear_diagonal" | "nemytskii_lipschitz"; c; a; f
    [sigma0]       gain (number or per-mode list)
    [sigma1]       kind = "zero" | "linear" | "sin"; scale
    [constants]    theta1; theta2; delta1; delta2
    [assumptions]  alpha; gamma; L1; L2   (declared values override derived ones)
    [experiment]   see ``EXPERIMENT_KEYS``
"""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .model import ModelError, ModelSpec, linear_drift, make_model, nemytskii_drift
from .spectral_space import SpectralSpace, laplacian_space


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


SCHEMA = {
    "space": {"kind", "n", "eigenvalues", "alpha"},
    "drift": {"kind", "c", "a", "f"},
    "sigma0": {"gain"},
    "sigma1": {"kind", "scale"},
    "constants": {"theta1", "theta2", "delta1", "delta2"},
    "assumptions": {"alpha", "gamma", "L1", "L2"},
    "experiment": None,
}

EXPERIMENT_KEYS = {
    "seed", "paths", "dt", "steps", "record_every", "radius", "cap",
    "dt_ladder", "n_ladder", "ladder", "horizon", "directions", "threshold",
    "base_dt", "name", "delta_scale",
}


def load_config(path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    check_config(cfg)
    return cfg


def check_config(cfg: dict):
    for table, body in cfg.items():
        if table not in SCHEMA:
            raise ConfigError(f"unknown config table {table!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{table!r} must be a table")
        allowed = SCHEMA[table] if table != "experiment" else EXPERIMENT_KEYS
        for key in body:
            if key not in allowed:
                raise ConfigError(f"unknown config key {table}.{key}")


def _get(cfg, dotted, default=dataclasses.MISSING, kind=float):
    table, key = dotted.split(".")
    body = cfg.get(table, {})
    if key not in body:
        if default is dataclasses.MISSING:
            raise ConfigError(f"missing config key {dotted}")
        return default
    value = body[key]
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind is list:
            return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"config key {dotted} has invalid value {value!r}") from None
    return value


def build_space(cfg) -> SpectralSpace:
    kind = _get(cfg, "space.kind", kind=str)
    if kind == "laplacian":
        n = _get(cfg, "space.n", kind=int)
        if n < 1:
            raise ConfigError("config key space.n must be >= 1")
        return laplacian_space(n)
    if kind == "generic":
        lam = _get(cfg, "space.eigenvalues", kind=list)
        n = _get(cfg, "space.n", len(lam), kind=int)
        if n != len(lam):
            raise ConfigError("config key space.n disagrees with len(space.eigenvalues)")
        try:
            return SpectralSpace(np.array(lam), _get(cfg, "space.alpha", min(lam) if lam else 1.0))
        except ValueError as exc:
            raise ConfigError(f"space.eigenvalues: {exc}") from None
    raise ConfigError(f"config key space.kind has unknown value {kind!r}")


def build_model(cfg) -> ModelSpec:
    space = build_space(cfg)
    alpha = _get(cfg, "assumptions.alpha", None)
    if alpha is not None:
        try:
            space = SpectralSpace(space.eigenvalues, alpha, space.kind)
        except ValueError as exc:
            raise ConfigError(f"assumptions.alpha: {exc}") from None
    kind = _get(cfg, "drift.kind", kind=str)
    c = _get(cfg, "drift.c")
    f = _get(cfg, "drift.f", 0.0)
    if kind == "linear_diagonal":
        drift = linear_drift(c, f)
    elif kind == "nemytskii_lipschitz":
        drift = nemytskii_drift(c, _get(cfg, "drift.a", 0.0), f)
    else:
        raise ConfigError(f"config key drift.kind has unknown value {kind!r}")
    L1 = _get(cfg, "assumptions.L1", None)
    if L1 is not None:
        drift = dataclasses.replace(drift, L1=L1)
    gain = cfg.get("sigma0", {}).get("gain", 1.0)
    try:
        sigma0 = np.broadcast_to(np.asarray(gain, dtype=float), (space.n,))
    except (TypeError, ValueError):
        raise ConfigError(f"config key sigma0.gain has invalid value {gain!r}") from None
    try:
        return make_model(
            space, drift, sigma0=sigma0,
            sigma1_kind=_get(cfg, "sigma1.kind", "zero", kind=str),
            sigma1_scale=_get(cfg, "sigma1.scale", 0.0),
            theta1=_get(cfg, "constants.theta1"),
            theta2=_get(cfg, "constants.theta2"),
            delta1=_get(cfg, "constants.delta1", None),
            delta2=_get(cfg, "constants.delta2", None),
            L2=_get(cfg, "assumptions.L2", None),
            gamma=_get(cfg, "assumptions.gamma", None),
        )
    except ModelError as exc:
        raise ConfigError(str(exc)) from None


def experiment_value(cfg, key, default=dataclasses.MISSING, kind=float):
    return _get(cfg, f"experiment.{key}", default, kind)
