"""Experiment configuration: typed parameters, file and CLI overrides.

Precedence, lowest first: built-in defaults, per-experiment defaults, the
``--config`` file, ``--set key=value`` pairs, then the dedicated ``--seed``
and ``--out`` flags. The file is flat ``key = value`` text; ``#`` starts a
comment and an optional ``[section]`` header is ignored. Sweeps accept a
comma list (``2, 4, 8``) or a dyadic range (``8..64`` = 8, 16, 32, 64).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from ..errors import ConfigError
from ..geometry import GAMMA_DEFAULT, NU_MINUS_DEFAULT, NU_PLUS_DEFAULT

EXPERIMENTS = ("cokernel", "concentration", "symbol-order", "bg-check", "deform-bounds",
               "regimes", "schwarz", "sf-cycle", "verify-all")
OUT_ENV = "Z2GLUE_OUT"


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("boolean is not an integer")
    f = float(v)
    if f != int(f):
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _sweep(conv: Callable) -> Callable:
    def parse(v):
        if isinstance(v, (list, tuple)):
            return tuple(conv(x) for x in v)
        s = str(v).strip()
        if ".." in s:
            lo, hi = (conv(x) for x in s.split(".."))
            if not 0 < lo <= hi:
                raise ValueError(f"bad dyadic range {s!r}")
            out = [lo]
            while out[-1] * 2 <= hi:
                out.append(out[-1] * 2)
            return tuple(out)
        items = [x for x in s.replace(" ", "").strip("()[]").split(",") if x]
        if not items:
            raise ValueError("empty sweep")
        return tuple(conv(x) for x in items)
    return parse


@dataclass(frozen=True)
class Param:
    parse: Callable[[Any], Any]
    default: Any
    valid: Callable[[Any], bool]
    rule: str


def _pos(x) -> bool:
    return x > 0


PARAMS: dict[str, Param] = {
    "seed": Param(_int, 0, lambda x: x >= 0, "non-negative integer"),
    "resolution": Param(float, 1.0, lambda x: 0 < x <= 1, "in (0, 1]"),
    "epsilon": Param(float, 1e-2, lambda x: 0 < x < 1, "in (0, 1)"),
    "gamma": Param(float, GAMMA_DEFAULT, lambda x: 0 < x <= 0.1, "in (0, 0.1]"),
    "kappa": Param(float, 1.0, _pos, "positive"),
    "R0": Param(float, 1.0, _pos, "positive"),
    "r0": Param(float, 1.0, _pos, "positive"),
    "R0_sweep": Param(_sweep(float), (0.5, 1.0, 2.0, 4.0, 10.0), lambda x: all(v > 0 for v in x),
                      "positive reals"),
    "nu_plus": Param(float, NU_PLUS_DEFAULT, lambda x: -0.5 < x <= 0.5, "in (-1/2, 1/2]"),
    "nu_minus": Param(float, NU_MINUS_DEFAULT, lambda x: -0.5 < x <= 0.5, "in (-1/2, 1/2]"),
    "nu": Param(float, 0.5, lambda x: -0.5 < x <= 0.5, "in (-1/2, 1/2]"),
    "n_t": Param(_int, 32, lambda x: x >= 4 and x & (x - 1) == 0, "power of two >= 4"),
    "n_theta": Param(_int, 8, lambda x: x >= 4 and x & (x - 1) == 0, "power of two >= 4"),
    "n_r": Param(_int, 200, lambda x: 3 <= x <= 1 << 16, "integer in [3, 65536]"),
    "n_r_levels": Param(_sweep(_int), (64, 128, 256, 512), lambda x: all(n >= 3 for n in x),
                        "radial node counts >= 3"),
    "r_out": Param(float, 3.0, _pos, "positive"),
    "ells": Param(_sweep(_int), (1, 2, 4, 8), lambda x: all(v != 0 for v in x), "nonzero integers"),
    "radii": Param(_sweep(float), (0.5, 0.75), lambda x: all(v > 0 for v in x), "positive reals"),
    "ps": Param(_sweep(_int), (8, 16, 32, 64), lambda x: len(x) >= 2 and all(v > 0 for v in x),
                "at least two positive integers"),
    "steps": Param(_sweep(float), (1e-3, 1e-4), lambda x: len(x) >= 2 and all(0 < v < 0.1 for v in x),
                   "at least two steps in (0, 0.1)"),
    "cs": Param(_sweep(float), (1, 2, 3, 4, 6, 8), lambda x: all(v > 0 for v in x), "positive reals"),
    "tol": Param(float, 0.02, _pos, "positive"),
    "n": Param(_int, 255, lambda x: x >= 15 and x % 2 == 1, "odd integer >= 15"),
    "overlaps": Param(_sweep(float), (0.1, 0.2, 0.3), lambda x: all(0 < v < 0.45 for v in x),
                      "reals in (0, 0.45)"),
    "cycles": Param(_int, 30, lambda x: 4 <= x <= 10_000, "integer in [4, 10000]"),
    "k": Param(_int, 4, lambda x: x >= 1, "positive integer"),
    "k_prime": Param(_int, 4, lambda x: x >= 1, "positive integer"),
    "coupling": Param(float, 0.1, lambda x: x >= 0, "non-negative"),
    "mass": Param(float, 1.0, lambda x: x >= 0, "non-negative"),
}

EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "cokernel": {},
    "concentration": {"ells": (2, 4, 8), "radii": (0.25, 0.5), "r_out": 14.0, "n_r": 2048},
    "symbol-order": {},
    "bg-check": {"steps": (1e-2, 1e-3, 1e-4, 1e-5)},
    "deform-bounds": {"epsilon": 0.05},
    "regimes": {},
    "schwarz": {},
    "sf-cycle": {"cycles": 15},
    "verify-all": {},
}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    out_root: Path = Path("runs")
    source: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.params[key]

    @property
    def seed(self) -> int:
        return self.params["seed"]

    def echo(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.params.items())}


def _apply(params: dict, source: dict, key: str, raw, origin: str) -> None:
    if key not in PARAMS:
        raise ConfigError(key, f"unknown parameter (from {origin})")
    spec = PARAMS[key]
    try:
        value = spec.parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None
    if not spec.valid(value):
        raise ConfigError(key, f"{value!r} out of range; expected {spec.rule}")
    params[key] = value
    source[key] = origin


def read_config_file(path) -> dict[str, str]:
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[z2glue]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case (R0 vs r0)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    out = {}
    for section in cp.sections():
        out.update(cp[section])
    return out


def parse_set(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError("--set", f"expected key=value, got {item!r}")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def load_config(experiment: str, config_file=None, sets=(), seed=None, out=None) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    params, source = {}, {}
    for k, spec in PARAMS.items():
        params[k], source[k] = spec.default, "default"
    for k, v in EXPERIMENT_DEFAULTS[experiment].items():
        _apply(params, source, k, v, f"{experiment} default")
    if config_file is not None:
        for k, v in read_config_file(config_file).items():
            _apply(params, source, k, v, str(config_file))
    for item in sets:
        k, v = parse_set(item)
        _apply(params, source, k, v, "--set")
    if seed is not None:
        _apply(params, source, "seed", seed, "--seed")
    root = Path(out) if out is not None else Path(os.environ.get(OUT_ENV, "runs"))
    return ExperimentConfig(experiment, params, root, source)
