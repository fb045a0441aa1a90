"""Run configuration: a TOML document with one table per section.

Example::

    scenario = "simulate"
    seed = 1

    [domain]
    lengths = ["pi"]
    sizes = [64]

    [params]
    lam = 1.0
    kappa = 1.0
    q = 4.0
    T = 1.0
    dt = 1e-3

    [initial]
    kind = "eigenmode"
    modes = [[1, 0.5, 0.0]]

Every key is checked against :data:`SCHEMA`; unknown keys, wrong types and
duplicate keys are rejected with the line they appear on. Lengths accept
numbers or the strings ``"pi"``, ``"2*pi"``, ``"pi/8"``, ``"3*pi/2"``.
"""
from __future__ import annotations

import copy
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError, SupercriticalExponent
from .evolution import SCHEMES, EvolutionParams, Forcing, critical_exponent
from .field_algebra import ComplexField, eigenmode, random_field
from .spectral_core import Domain

__all__ = ["SCENARIOS", "SCHEMA", "RunConfig", "parse_config", "parse_config_text", "build_initial", "build_forcing"]

SCENARIOS = ("simulate", "fixed_point", "verify", "blowup", "certify", "sweep")

_NUM = (int, float)
# section -> key -> (types, default); None as default means "required"
SCHEMA: dict[str, dict[str, tuple[tuple, object]]] = {
    "": {
        "scenario": ((str,), "simulate"),
        "seed": ((int,), 0),
        "out": ((str,), "cgllab-out"),
    },
    "domain": {
        "lengths": ((list,), None),
        "sizes": ((list,), None),
    },
    "params": {
        "lam": (_NUM, 1.0),
        "alpha": (_NUM, 0.0),
        "kappa": (_NUM, 1.0),
        "beta": (_NUM, 0.0),
        "gamma": (_NUM, 0.0),
        "q": (_NUM, 4.0),
        "T": (_NUM, 1.0),
        "dt": (_NUM, 1e-3),
        "scheme": ((str,), "semi_implicit"),
        "nonlinear_sign": ((int,), 1),
    },
    "initial": {
        "kind": ((str,), "eigenmode"),
        "modes": ((list,), [[1, 1.0, 0.0]]),
        "amplitude": (_NUM, 1.0),
        "decay": (_NUM, 1.0),
        "seed": ((int,), -1),
        "path": ((str,), ""),
    },
    "forcing": {
        "kind": ((str,), "zero"),
        "modes": ((list,), []),
        "path": ((str,), ""),
    },
    "output": {
        "save_every": ((int,), 1),
    },
    "fixed_point": {
        "S": (_NUM, 0.5),
        "tol": (_NUM, 1e-10),
        "max_iter": ((int,), 50),
    },
    "blowup": {
        "theta": (_NUM, 1e8),
        "growth": (_NUM, 0.1),
        "rel_tol": (_NUM, 0.05),
        "max_levels": ((int,), 8),
    },
    "certify": {
        "trials": ((int,), 200),
        "radius": (_NUM, 0.0),
    },
    "sweep": {
        "kappa": ((list,), [0.5, 1.0, 2.0, 4.0, 8.0]),
        "amplitude": ((list,), [0.1, 1.0, 10.0]),
        "mode": ((int,), 1),
    },
    "verify": {
        "fast": ((bool,), False),
    },
}

_PI = re.compile(r"^\s*(?:(\d+(?:\.\d*)?)\s*\*\s*)?pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def _line_of(text: str, section: str, key: str) -> int | None:
    current = ""
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_.]+)\s*\]", s)
        if m:
            current = m.group(1)
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return no
        if section and current == "" and re.match(rf"^{re.escape(section)}\.{re.escape(key)}\s*=", s):
            return no
    return None


def _err(text: str, section: str, key: str, msg: str) -> ConfigurationError:
    line = _line_of(text, section, key)
    where = f"{section}.{key}" if section else key
    prefix = f"line {line}: " if line else ""
    return ConfigurationError(f"{prefix}field {where}: {msg}")


def _length(value, text: str) -> float:
    if isinstance(value, bool):
        raise _err(text, "domain", "lengths", "lengths must be numbers or pi expressions")
    if isinstance(value, _NUM):
        return float(value)
    if isinstance(value, str):
        m = _PI.match(value)
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * np.pi / den
    raise _err(text, "domain", "lengths", f"cannot read length {value!r}")


@dataclass
class RunConfig:
    """Validated configuration. ``resolved`` echoes every key with defaults applied."""

    scenario: str
    seed: int
    out: str
    domain: Domain
    params: EvolutionParams
    sections: dict
    resolved: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]

    def with_overrides(self, seed: int | None = None, dt: float | None = None, out: str | None = None,
                       scenario: str | None = None) -> "RunConfig":
        resolved = copy.deepcopy(self.resolved)
        if seed is not None:
            resolved["seed"] = int(seed)
        if dt is not None:
            resolved["params"]["dt"] = float(dt)
        if out is not None:
            resolved["out"] = str(out)
        if scenario is not None:
            resolved["scenario"] = scenario
        return _build(resolved, "")


def _check_types(doc: dict, text: str) -> dict:
    resolved: dict = {}
    for key, val in doc.items():
        if isinstance(val, dict):
            if key not in SCHEMA or key == "":
                raise _err(text, "", key, "unknown section")
            continue
        if key not in SCHEMA[""]:
            raise _err(text, "", key, "unknown key")
    for section, spec in SCHEMA.items():
        src = doc if section == "" else doc.get(section, {})
        if section and not isinstance(src, dict):
            raise _err(text, "", section, "expected a table")
        out = {}
        for key, val in src.items():
            if section == "" and isinstance(val, dict):
                continue
            if key not in spec:
                raise _err(text, section, key, "unknown key")
            types, _ = spec[key]
            if isinstance(val, bool) and bool not in types:
                raise _err(text, section, key, f"expected {'/'.join(t.__name__ for t in types)}, got bool")
            if not isinstance(val, types):
                raise _err(text, section, key,
                           f"expected {'/'.join(t.__name__ for t in types)}, got {type(val).__name__}")
            out[key] = val
        for key, (types, default) in spec.items():
            if key not in out:
                if default is None:
                    raise _err(text, section, key, "required")
                out[key] = copy.deepcopy(default)
            elif types == _NUM:
                out[key] = float(out[key])
        resolved[section] = out
    flat = resolved.pop("")
    flat.update(resolved)
    return flat


def _build(resolved: dict, text: str) -> RunConfig:
    scen = resolved["scenario"]
    if scen not in SCENARIOS:
        raise _err(text, "", "scenario", f"must be one of {SCENARIOS}")
    dom = resolved["domain"]
    lengths = [_length(v, text) for v in dom["lengths"]]
    sizes = dom["sizes"]
    if not all(isinstance(n, int) and not isinstance(n, bool) for n in sizes):
        raise _err(text, "domain", "sizes", "sizes must be integers")
    if len(lengths) != len(sizes):
        raise _err(text, "domain", "sizes", "lengths and sizes must have the same length")
    dim = len(lengths)
    p = resolved["params"]
    if dim >= 1 and not p["q"] < critical_exponent(dim):
        err = SupercriticalExponent(p["q"], dim)
        line = _line_of(text, "params", "q")
        err.args = ((f"line {line}: " if line else "") + f"field params.q: {err.args[0]}",)
        raise err
    try:
        domain = Domain(tuple(lengths), tuple(sizes))
    except (ValueError, TypeError) as exc:
        raise _err(text, "domain", "lengths", str(exc)) from None
    if p["scheme"] not in SCHEMES:
        raise _err(text, "params", "scheme", f"must be one of {SCHEMES}")
    try:
        params = EvolutionParams(**p)
    except ConfigurationError as exc:
        raise ConfigurationError(f"section params: {exc}") from None
    init = resolved["initial"]
    if init["kind"] not in ("eigenmode", "random", "file"):
        raise _err(text, "initial", "kind", "must be eigenmode, random or file")
    if init["kind"] == "eigenmode":
        _check_modes(init["modes"], dim, text, "initial")
    if init["kind"] == "file" and not init["path"]:
        raise _err(text, "initial", "path", "required for kind = file")
    if init["kind"] == "random" and init["decay"] < 0:
        raise _err(text, "initial", "decay", "must be non-negative")
    forc = resolved["forcing"]
    if forc["kind"] not in ("zero", "constant", "sampled"):
        raise _err(text, "forcing", "kind", "must be zero, constant or sampled")
    if forc["kind"] == "constant":
        _check_modes(forc["modes"], dim, text, "forcing")
    if forc["kind"] == "sampled" and not forc["path"]:
        raise _err(text, "forcing", "path", "required for kind = sampled")
    fp = resolved["fixed_point"]
    if fp["tol"] <= 0 or fp["S"] <= 0 or fp["max_iter"] < 1:
        raise _err(text, "fixed_point", "tol", "S, tol and max_iter must be positive")
    if resolved["output"]["save_every"] < 1:
        raise _err(text, "output", "save_every", "must be at least 1")
    if resolved["certify"]["trials"] < 1:
        raise _err(text, "certify", "trials", "must be positive")
    sw = resolved["sweep"]
    for key in ("kappa", "amplitude"):
        if not sw[key] or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in sw[key]):
            raise _err(text, "sweep", key, "must be a non-empty list of numbers")
    sections = {k: v for k, v in resolved.items() if isinstance(v, dict)}
    return RunConfig(scen, int(resolved["seed"]), resolved["out"], domain, params, sections, resolved)


def _check_modes(modes, dim: int, text: str, section: str) -> None:
    for entry in modes:
        ok = (isinstance(entry, list) and len(entry) == dim + 2
              and all(isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in entry[:dim])
              and all(isinstance(v, _NUM) and not isinstance(v, bool) for v in entry[dim:]))
        if not ok:
            raise _err(text, section, "modes", f"each entry must be [k_1, ..., k_{dim}, re, im]")


def parse_config_text(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None
    return _build(_check_types(doc, text), text)


def parse_config(source) -> RunConfig:
    """Parse a configuration from a path, or from stdin when ``source`` is ``"-"``."""
    if source == "-" or source is None:
        return parse_config_text(sys.stdin.read())
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def _mode_sum(domain: Domain, modes) -> ComplexField:
    dim = domain.dim
    total = ComplexField(np.zeros((2,) + domain.shape), domain)
    for entry in modes:
        k = tuple(entry[:dim])
        try:
            total = total + eigenmode(domain, k, complex(entry[dim], entry[dim + 1]))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
    return total


def build_initial(cfg: RunConfig) -> ComplexField:
    init = cfg.section("initial")
    dom = cfg.domain
    if init["kind"] == "eigenmode":
        return _mode_sum(dom, init["modes"])
    if init["kind"] == "random":
        seed = cfg.seed if init["seed"] < 0 else init["seed"]
        return random_field(dom, seed=seed, decay=init["decay"], amplitude=init["amplitude"])
    try:
        data = np.load(init["path"])
    except OSError as exc:
        raise ConfigurationError(f"cannot read initial field {init['path']}: {exc}") from None
    if data.shape != (2,) + dom.shape:
        raise ConfigurationError(f"initial field has shape {data.shape}, expected {(2,) + dom.shape}")
    return ComplexField(np.asarray(data, float), dom)


def build_forcing(cfg: RunConfig) -> Forcing:
    forc = cfg.section("forcing")
    dom = cfg.domain
    if forc["kind"] == "zero":
        return Forcing.zero(dom)
    if forc["kind"] == "constant":
        return Forcing.constant(_mode_sum(dom, forc["modes"]))
    try:
        with np.load(forc["path"]) as npz:
            times, samples = npz["times"], npz["samples"]
    except (OSError, KeyError) as exc:
        raise ConfigurationError(f"cannot read forcing samples {forc['path']}: {exc}") from None
    try:
        F = Forcing.sampled(times, samples, dom)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    if not F.covers(cfg.params.T):
        raise ConfigurationError("forcing samples must cover [0, T]")
    return F
