"""TOML run configuration.

Example::

    rho = 0.35

    [distribution]
    kind = "gaussian-copula"     # or "uniform", "beta"
    r = 0.5
    y_alpha = 2.0
    y_beta = 2.0

    [value_function]
    kind = "crra"                # or "sqrt", "log1p"
    gamma = 0.3

    [priority]                   # exactly two of c1, c2, p
    c2 = 0.38
    p = 0.36

    [sweep]                      # cartesian product of c2 and p ...
    c2 = [0.3, 0.4]
    p = [0.3, 0.4]
    # pairs = [[0.3, 0.4], ...]  # ... or explicit (c2, p) pairs

    [verify]
    grid_n = 200
    mc_n = 1000000
    seed = 1

    [simulate]
    n = 100000
    seed = 1
    regime = "both"              # "single", "priority" or "both"

    [figure]
    fixture = "inverse-square"   # omit to draw the solved system
    scale = 0.35
    c = 0.65
    c1 = 0.8
    resolution = 200

    [output]
    dir = "out"

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import distributions
from .errors import ConfigError, DomainError, FastTrackError
from .model import UtilityParams, ValueFunction

_TOP_KEYS = {"rho", "t", "distribution", "value_function", "priority", "sweep",
             "verify", "simulate", "figure", "output"}
_SECTION_KEYS = {
    "distribution": {"kind", "r", "y_alpha", "y_beta", "theta_alpha", "theta_beta"},
    "value_function": {"kind", "gamma"},
    "priority": {"c1", "c2", "p"},
    "sweep": {"c2", "p", "pairs"},
    "verify": {"grid_n", "mc_n", "seed"},
    "simulate": {"n", "seed", "regime"},
    "figure": {"fixture", "scale", "c", "c1", "resolution"},
    "output": {"dir"},
}


def _number(section, key, value, lo=-math.inf, hi=math.inf, *, integer=False, open_lo=False, open_hi=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    if integer and not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    bad_lo = value <= lo if open_lo else value < lo
    bad_hi = value >= hi if open_hi else value > hi
    if not math.isfinite(value) or bad_lo or bad_hi:
        lb = "(" if open_lo else "["
        rb = ")" if open_hi else "]"
        raise ConfigError(f"{section}.{key}={value!r} outside {lb}{lo}, {hi}{rb}")
    return value


def _unit(section, key, value):
    return float(_number(section, key, value, 0.0, 1.0))


@dataclass
class RunConfig:
    rho: float = 0.35
    t: float = 1.0
    distribution: dict = field(default_factory=lambda: {"kind": "uniform"})
    value_function: dict = field(default_factory=lambda: {"kind": "sqrt"})
    priority: dict = field(default_factory=dict)
    sweep_pairs: list = field(default_factory=list)
    grid_n: int = 200
    mc_n: int = 1_000_000
    seed: int = 1
    sim_n: int = 100_000
    sim_seed: int = 1
    sim_regime: str = "both"
    figure: dict = field(default_factory=dict)
    out_dir: Optional[str] = None

    def dist(self):
        return distributions.from_descriptor(self.distribution)

    def value_fn(self) -> ValueFunction:
        return ValueFunction.from_descriptor(self.value_function["kind"], self.value_function.get("gamma"))

    def params(self) -> UtilityParams:
        return UtilityParams(self.t)


def parse_config(raw: dict) -> RunConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, allowed in _SECTION_KEYS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = set(section) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")

    cfg = RunConfig()
    if "rho" in raw:
        rho = raw["rho"]
        if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not 0.0 < rho < 1.0:
            raise ConfigError(f"capacity rho must lie in (0, 1), got {rho!r}")
        cfg.rho = float(rho)
    if "t" in raw:
        cfg.t = float(_number("top", "t", raw["t"]))

    if "distribution" in raw:
        desc = dict(raw["distribution"])
        for key in set(desc) - {"kind"}:
            lo, hi = (-1.0, 1.0) if key == "r" else (0.0, math.inf)
            desc[key] = float(_number("distribution", key, desc[key], lo, hi, open_lo=True, open_hi=True))
        cfg.distribution = desc
    if "value_function" in raw:
        cfg.value_function = dict(raw["value_function"])
    try:
        cfg.dist()
        cfg.value_fn()
    except (DomainError, FastTrackError) as exc:
        raise ConfigError(str(exc)) from None

    prio = raw.get("priority", {})
    cfg.priority = {k: _unit("priority", k, x) for k, x in prio.items()}
    if prio and len(prio) != 2:
        raise ConfigError(f"[priority] must fix exactly two of c1, c2, p, got {sorted(prio)}")
    if "c1" in cfg.priority and "c2" in cfg.priority and not cfg.priority["c2"] < cfg.priority["c1"]:
        raise ConfigError(
            f"degenerate system: c2={cfg.priority['c2']} must be below c1={cfg.priority['c1']}"
        )

    sweep = raw.get("sweep", {})
    if "pairs" in sweep:
        if "c2" in sweep or "p" in sweep:
            raise ConfigError("[sweep] takes either pairs or c2/p lists, not both")
        pairs = sweep["pairs"]
    elif sweep:
        pairs = [(c2, p) for c2 in sweep.get("c2", []) for p in sweep.get("p", [])]
    else:
        pairs = []
    for pair in pairs:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"sweep pair must be [c2, p], got {pair!r}")
    cfg.sweep_pairs = [(_unit("sweep", "c2", a), _unit("sweep", "p", b)) for a, b in pairs]

    ver = raw.get("verify", {})
    if "grid_n" in ver:
        cfg.grid_n = _number("verify", "grid_n", ver["grid_n"], 2, integer=True)
    if "mc_n" in ver:
        cfg.mc_n = _number("verify", "mc_n", ver["mc_n"], 1, integer=True)
    if "seed" in ver:
        cfg.seed = _number("verify", "seed", ver["seed"], 0, 2**64 - 1, integer=True)

    sim = raw.get("simulate", {})
    if "n" in sim:
        cfg.sim_n = _number("simulate", "n", sim["n"], 1, integer=True)
    if "seed" in sim:
        cfg.sim_seed = _number("simulate", "seed", sim["seed"], 0, 2**64 - 1, integer=True)
    if "regime" in sim:
        if sim["regime"] not in ("single", "priority", "both"):
            raise ConfigError(f"simulate.regime must be single, priority or both, got {sim['regime']!r}")
        cfg.sim_regime = sim["regime"]

    fig = dict(raw.get("figure", {}))
    if "fixture" in fig and fig["fixture"] != "inverse-square":
        raise ConfigError(f"unknown figure fixture {fig['fixture']!r}")
    for key in ("c", "c1"):
        if key in fig:
            fig[key] = _unit("figure", key, fig[key])
    if "scale" in fig:
        fig["scale"] = float(_number("figure", "scale", fig["scale"], 0.0, open_lo=True))
    if "resolution" in fig:
        fig["resolution"] = _number("figure", "resolution", fig["resolution"], 2, integer=True)
    cfg.figure = fig

    out = raw.get("output", {})
    if "dir" in out:
        if not isinstance(out["dir"], str):
            raise ConfigError("output.dir must be a string")
        cfg.out_dir = out["dir"]
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return parse_config(raw)


SHIPPED_DIR = Path(__file__).parent / "configs"


def shipped_configs() -> list:
    return sorted(SHIPPED_DIR.glob("*.toml"))
