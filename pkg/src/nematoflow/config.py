"""Run configuration: sectioned key-value files, parse-validate-reject.

The format is INI with case-sensitive keys and no interpolation.  There is
no expression language: parameter functions are chosen by name with numeric
coefficients, e.g.

    mu_s = 1.0                       (constant)
    gamma = affine(c0=1.0, c_theta=0.05, c_tau=0.0)
    alpha_0 = arrhenius(prefactor=1.0, activation=0.1)

Any unknown section or key, missing required key, or malformed value is a
hard error naming the offending key path.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict

from .consistency import SamplingSpec
from .grid import Grid
from .material import (FreeEnergy, MaterialModel, ParamRule, ParameterSet,
                       free_energy_from_name, FREE_ENERGY_CATALOG, PARAM_NAMES)
from .solver import ScenarioConfig, StepConfig


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


_REQUIRED = object()

# schema: section -> key -> (type tag, default) where _REQUIRED marks keys a
# command must supply (enforced by the builder that consumes the section)
_SCHEMA: Dict[str, Dict[str, tuple]] = {
    "material": {
        "free_energy": ("str", _REQUIRED),
        "a": ("float", None), "k": ("float", None),
        "k0": ("float", None), "k1": ("float", None),
        "rho": ("float", 1.0),
        "n_dim": ("int", 2),
        **{name: ("rule", None) for name in PARAM_NAMES},
    },
    "grid": {
        "Nx": ("int", _REQUIRED), "Ny": ("int", _REQUIRED),
        "Lx": ("float", _REQUIRED), "Ly": ("float", _REQUIRED),
    },
    "time": {
        "dt": ("float", _REQUIRED), "t_end": ("float", _REQUIRED),
        "cfl_safety": ("float", 0.9), "output_every": ("float", 0.1),
    },
    "scenario": {
        "name": ("str", _REQUIRED), "amplitude": ("float", 0.02),
        "seed": ("int", 1234), "theta_star": ("float", 1.5),
        "d_angle": ("float", 0.0),
    },
    "run": {
        "mode": ("str", "nonisothermal"),
    },
    "toggles": {
        "renormalize_director": ("bool", True),
        "theta_floor": ("float", 1e-10),
    },
    "output": {
        "directory": ("str", _REQUIRED),
        "snapshot_every": ("float", 0.0),
    },
    "check": {
        "theta_min": ("float", 0.5), "theta_max": ("float", 3.0),
        "tau_max": ("float", 2.0),
        "rho_min": ("float", None), "rho_max": ("float", None),
        "samples": ("int", 4096), "seed_offset": ("int", 0),
        "output_csv": ("str", "consistency_report.csv"),
    },
    "symbol": {
        "samples": ("int", 10000), "dim": ("int", 2), "seed": ("int", 1234),
        "output_csv": ("str", "symbol_sweep.csv"),
    },
}

_RULE_RE = re.compile(r"^([a-z_]+)\((.*)\)$")
_PARAM_DEFAULTS = {"mu_s": 1.0, "mu_b": 0.0, "mu_V": 0.0, "mu_D": 0.0,
                   "mu_P": 0.0, "mu_L": 0.0, "mu_0": 0.0, "alpha_0": 1.0,
                   "alpha_1": 0.0, "gamma": 1.0}


def _parse_rule(text: str, keypath: str) -> ParamRule:
    text = text.strip()
    try:
        return ParamRule.constant(float(text))
    except ValueError:
        pass
    m = _RULE_RE.match(text)
    if not m:
        raise ConfigError(f"{keypath}: expected a number or form(name=value, ...), "
                          f"got {text!r}")
    form, body = m.group(1), m.group(2)
    kwargs = {}
    if body.strip():
        for part in body.split(","):
            if "=" not in part:
                raise ConfigError(f"{keypath}: malformed coefficient {part.strip()!r}")
            key, val = part.split("=", 1)
            try:
                kwargs[key.strip()] = float(val)
            except ValueError:
                raise ConfigError(f"{keypath}: coefficient {key.strip()!r} "
                                  f"is not a number ({val.strip()!r})") from None
    try:
        if form == "constant":
            return ParamRule.constant(**kwargs)
        if form == "affine":
            return ParamRule.affine(**kwargs)
        if form == "arrhenius":
            return ParamRule.arrhenius(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{keypath}: {exc}") from None
    raise ConfigError(f"{keypath}: unknown rule form {form!r} "
                      f"(available: constant, affine, arrhenius)")


def _convert(raw: str, type_tag: str, keypath: str):
    raw = raw.strip()
    try:
        if type_tag == "float":
            return float(raw)
        if type_tag == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if type_tag == "bool":
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if type_tag == "str":
            return raw
        if type_tag == "rule":
            return _parse_rule(raw, keypath)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"{keypath}: cannot parse {raw!r} as {type_tag}") from None
    raise ConfigError(f"{keypath}: unhandled type {type_tag}")


@dataclass
class RunConfig:
    """Typed view of a parsed configuration file."""

    path: Path
    values: Dict[str, Dict[str, object]]

    def _require(self, section: str, key: str):
        value = self.values.get(section, {}).get(key)
        if value is None or value is _REQUIRED:
            raise ConfigError(f"missing required key [{section}].{key} in {self.path}")
        return value

    def get(self, section: str, key: str):
        return self.values.get(section, {}).get(key)

    def has_section(self, section: str) -> bool:
        return section in self.values

    # -- builders -----------------------------------------------------------

    def build_free_energy(self) -> FreeEnergy:
        name = self._require("material", "free_energy")
        if name not in FREE_ENERGY_CATALOG:
            raise ConfigError(f"[material].free_energy: unknown form {name!r} "
                              f"(catalog: {', '.join(sorted(FREE_ENERGY_CATALOG))})")
        _, keys = FREE_ENERGY_CATALOG[name]
        coeffs = {}
        for key in keys:
            value = self.get("material", key)
            if value is not None:
                coeffs[key] = value
        stray = [k for k in ("a", "k", "k0", "k1")
                 if k not in keys and self.get("material", k) is not None]
        if stray:
            raise ConfigError(f"[material].{stray[0]}: not a coefficient of "
                              f"free energy {name!r}")
        return free_energy_from_name(name, **coeffs)

    def build_parameter_set(self) -> ParameterSet:
        rules = {}
        for name in PARAM_NAMES:
            rule = self.get("material", name)
            rules[name] = rule if rule is not None \
                else ParamRule.constant(_PARAM_DEFAULTS[name])
        return ParameterSet(rho=self.get("material", "rho"),
                            n_dim=self.get("material", "n_dim"), **rules)

    def build_material(self) -> MaterialModel:
        return MaterialModel(self.build_free_energy(), self.build_parameter_set())

    def build_grid(self) -> Grid:
        try:
            return Grid(Lx=self._require("grid", "Lx"), Ly=self._require("grid", "Ly"),
                        Nx=self._require("grid", "Nx"), Ny=self._require("grid", "Ny"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"[grid]: {exc}") from None

    def build_scenario(self) -> ScenarioConfig:
        return ScenarioConfig(
            name=self._require("scenario", "name"),
            amplitude=self.get("scenario", "amplitude"),
            seed=self.get("scenario", "seed"),
            theta_star=self.get("scenario", "theta_star"),
            d_angle=self.get("scenario", "d_angle"))

    def build_step_config(self) -> StepConfig:
        mode = self.get("run", "mode") if self.has_section("run") else "nonisothermal"
        if mode not in ("nonisothermal", "isothermal"):
            raise ConfigError(f"[run].mode: must be nonisothermal or isothermal, "
                              f"got {mode!r}")
        try:
            return StepConfig(
                dt=self._require("time", "dt"),
                t_end=self._require("time", "t_end"),
                cfl_safety=self.get("time", "cfl_safety"),
                output_every=self.get("time", "output_every"),
                renormalize_director=self.get("toggles", "renormalize_director")
                if self.has_section("toggles") else True,
                theta_floor=self.get("toggles", "theta_floor")
                if self.has_section("toggles") else 1e-10,
                isothermal=(mode == "isothermal"),
                snapshot_every=self.get("output", "snapshot_every")
                if self.has_section("output") else 0.0)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"[time]: {exc}") from None

    def output_directory(self) -> Path:
        return Path(self._require("output", "directory"))

    def sampling_spec(self) -> SamplingSpec:
        get = lambda key: self.get("check", key)
        rho_min, rho_max = get("rho_min"), get("rho_max")
        if (rho_min is None) != (rho_max is None):
            raise ConfigError("[check].rho_min and [check].rho_max "
                              "must be given together")
        rho_range = (rho_min, rho_max) if rho_min is not None else None
        try:
            return SamplingSpec(
                theta_range=(get("theta_min"), get("theta_max")),
                tau_range=(0.0, get("tau_max")),
                rho_range=rho_range,
                n_samples=get("samples"),
                seed_offset=get("seed_offset"))
        except ValueError as exc:
            raise ConfigError(f"[check]: {exc}") from None


def parse_config(path) -> RunConfig:
    """Parse and validate a configuration file against the schema."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    values: Dict[str, Dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] in {path}")
        schema = _SCHEMA[section]
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key [{section}].{key} in {path}")
            type_tag, _ = schema[key]
            values[section][key] = _convert(raw, type_tag, f"[{section}].{key}")
    # fill defaults for present sections
    for section, section_values in values.items():
        for key, (type_tag, default) in _SCHEMA[section].items():
            if key not in section_values and default is not _REQUIRED \
                    and default is not None:
                section_values[key] = default
    # sections with pure defaults are considered present on demand
    for section in ("check", "symbol", "run", "toggles"):
        if section not in values:
            values[section] = {
                key: default for key, (type_tag, default) in _SCHEMA[section].items()
                if default is not _REQUIRED and default is not None}
    return RunConfig(path=path, values=values)
