"""Scenario files: a JSON description of one run, validated and turned into solver inputs."""

import copy
import json
import math
from dataclasses import dataclass

import jsonschema
import numpy as np

from .linear import AlgebraicDecay, ExponentialDecay, ForcingSpec
from .modal import Params
from .nonlinear import PSGE, LinearForcing
from .sine import SineSpectrum, SpatialGrid, analyze

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_MODE = {"type": "integer", "minimum": 1}

_DATA_PRESET = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "zero"}}, "additionalProperties": False},
        {"properties": {"kind": {"const": "single_mode"}, "n": _MODE, "amplitude": {"type": "number"}},
         "required": ["n"], "additionalProperties": False},
        {"properties": {"kind": {"const": "polynomial"}, "amplitude": {"type": "number"}},
         "additionalProperties": False},
        {"properties": {"kind": {"const": "coefficients"},
                        "values": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
         "required": ["values"], "additionalProperties": False},
        {"properties": {"kind": {"const": "random"}, "n_modes": _MODE, "amplitude": {"type": "number"}},
         "required": ["n_modes"], "additionalProperties": False},
    ],
}

_SOURCE = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "none"}}, "additionalProperties": False},
        {"properties": {"kind": {"const": "constant_in_t"}, "amplitude": {"type": "number"}, "mode": _MODE},
         "additionalProperties": False},
        {"properties": {"kind": {"const": "exp_decay"}, "C": {"type": "number"}, "delta": _POS, "mode": _MODE},
         "required": ["delta"], "additionalProperties": False},
        {"properties": {"kind": {"const": "algebraic"}, "h": {"type": "number"}, "k": _POS, "alpha": _POS,
                        "mode": _MODE},
         "required": ["alpha"], "additionalProperties": False},
        {"properties": {"kind": {"const": "psge"}, "gamma": {"type": "number"},
                        "bias_sign": {"enum": [-1, 1]}},
         "required": ["gamma"], "additionalProperties": False},
    ],
}

SCHEMA = {
    "type": "object",
    "required": ["params", "T"],
    "additionalProperties": False,
    "properties": {
        "params": {
            "type": "object",
            "required": ["epsilon", "a", "c", "ell"],
            "additionalProperties": False,
            "properties": {"epsilon": _POS, "a": _POS, "c": _POS, "ell": _POS},
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"g0": _DATA_PRESET, "g1": _DATA_PRESET},
        },
        "source": _SOURCE,
        "grid": {"type": "object", "additionalProperties": False,
                 "properties": {"m": {"type": "integer", "minimum": 3}}},
        "T": _POS,
        "solver": {"enum": ["spectral", "picard", "march", "fd", "compare"]},
        "seed": {"type": "integer"},
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_modes": {"type": ["integer", "null"], "minimum": 1},
                "quadrature_dt": _POS,
                "march_dt": _POS,
                "corrector_iters": {"type": "integer", "minimum": 1},
                "picard_tol": _POS,
                "picard_max_iter": {"type": "integer", "minimum": 1},
                "fd_dt": _POS,
                "fd_theta": {"type": "number", "minimum": 0.5, "maximum": 1},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"compare": _POS, "homogeneous": _POS, "exponential": _POS, "algebraic": _POS},
        },
        "decay": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {
                "scenario": {"enum": ["auto", "homogeneous", "exponential", "algebraic"]},
                "window": {"type": ["array", "null"], "items": _NONNEG, "minItems": 2, "maxItems": 2},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_times": {"type": "integer", "minimum": 2},
                "solution": {"type": ["string", "null"]},
                "sup_norms": {"type": "string"},
                "report": {"type": "string"},
                "comparison": {"type": "string"},
            },
        },
    },
}

DEFAULTS = {
    "initial": {"g0": {"kind": "zero"}, "g1": {"kind": "zero"}},
    "source": {"kind": "none"},
    "grid": {"m": 63},
    "solver": "spectral",
    "seed": 0,
    "numerics": {
        "n_modes": None,
        "quadrature_dt": 1e-3,
        "march_dt": 1e-2,
        "corrector_iters": 2,
        "picard_tol": 1e-10,
        "picard_max_iter": 50,
        "fd_dt": 1e-3,
        "fd_theta": 0.5,
    },
    "tolerances": {"compare": 1e-3, "homogeneous": 0.02, "exponential": 0.05, "algebraic": 0.1},
    "decay": None,
    "output": {
        "n_times": 101,
        "solution": "solution.csv",
        "sup_norms": "sup_norms.csv",
        "report": "decay_report.csv",
        "comparison": "comparison.csv",
    },
}


class ConfigError(ValueError):
    """Schema or consistency violation; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(raw):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        # oneOf failures are unreadable; report the preset kind instead
        if err.validator == "oneOf" and isinstance(err.instance, dict):
            message = f"invalid fields for kind {err.instance.get('kind')!r}"
        else:
            message = err.message
        raise ConfigError(path, message)


def canonicalize(raw):
    """Validate ``raw`` and fill defaults; the result is what a run actually uses."""
    validate(raw)
    cfg = _merge(DEFAULTS, raw)
    if cfg["decay"] is not None:
        cfg["decay"] = _merge({"scenario": "auto", "window": None}, cfg["decay"])
    validate(cfg)
    return cfg


def read_raw(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path} ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"not valid JSON ({exc})") from exc


def load(path):
    return canonicalize(read_raw(path))


def dump(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class Scenario:
    config: dict
    params: Params
    grid: SpatialGrid
    g0: SineSpectrum
    g1: SineSpectrum
    source: object  # None, LinearForcing or PSGE
    T: float
    solver: str

    @property
    def linear(self):
        return self.source is None or isinstance(self.source, LinearForcing)

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.config["output"]["n_times"])


def _data(preset, params, grid, rng, path):
    kind = preset["kind"]
    ell = params.ell
    if kind == "zero":
        return SineSpectrum.zeros(ell)
    if kind == "single_mode":
        return SineSpectrum.single_mode(ell, preset["n"], preset.get("amplitude", 1.0))
    if kind == "polynomial":
        x = grid.nodes
        n = min(grid.m, 256)
        return analyze(preset.get("amplitude", 1.0) * x * (ell - x), grid, n)
    if kind == "coefficients":
        return SineSpectrum(ell, preset["values"])
    if kind == "random":
        n = np.arange(1, preset["n_modes"] + 1)
        return SineSpectrum(ell, preset.get("amplitude", 1.0) * rng.standard_normal(n.size) / n**2)
    raise ConfigError(path, f"unknown data preset {kind!r}")


def _shape(mode, ell):
    g = mode * math.pi / ell
    return lambda x: np.sin(g * x)


def _source(spec, params):
    kind = spec["kind"]
    if kind == "none":
        return None
    if kind == "psge":
        return PSGE(spec["gamma"], float(spec.get("bias_sign", -1)))
    shape = _shape(spec.get("mode", 1), params.ell)
    if kind == "constant_in_t":
        amp = spec.get("amplitude", 1.0)
        return LinearForcing(ForcingSpec(lambda x, t: amp * shape(x)))
    if kind == "exp_decay":
        C, delta = spec.get("C", 1.0), spec["delta"]
        return LinearForcing(ForcingSpec(lambda x, t: C * math.exp(-delta * t) * shape(x),
                                         ExponentialDecay(C, delta)))
    if kind == "algebraic":
        h, k, alpha = spec.get("h", 1.0), spec.get("k", 1.0), spec["alpha"]
        return LinearForcing(ForcingSpec(lambda x, t: h * shape(x) / (k + t) ** (1.0 + alpha),
                                         AlgebraicDecay(h, k, alpha)))
    raise ConfigError("source.kind", f"unknown source {kind!r}")


def build(cfg) -> Scenario:
    p = cfg["params"]
    params = Params(p["epsilon"], p["a"], p["c"], p["ell"])
    grid = SpatialGrid(params.ell, cfg["grid"]["m"])
    rng = np.random.default_rng(cfg["seed"])
    g0 = _data(cfg["initial"]["g0"], params, grid, rng, "initial.g0")
    g1 = _data(cfg["initial"]["g1"], params, grid, rng, "initial.g1")
    source = _source(cfg["source"], params)
    if cfg["solver"] == "spectral" and not (source is None or isinstance(source, LinearForcing)):
        raise ConfigError("solver", "the spectral solver is linear; use picard or march for a psge source")
    window = (cfg.get("decay") or {}).get("window")
    if window is not None and not window[0] < window[1] <= cfg["T"]:
        raise ConfigError("decay.window", f"need t_lo < t_hi <= T, got {window}")
    return Scenario(cfg, params, grid, g0, g1, source, float(cfg["T"]), cfg["solver"])
