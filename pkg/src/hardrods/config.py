"""Experiment configs: TOML (or JSON) files with one experiment each.

Layout::

    kind = "lln"
    name = "lln-ladder"
    seed = 4

    [model]
    family = "homogeneous_box"

    [params]
    eps = [0.1, 0.01, 0.001, 0.0001]

Unknown keys and wrongly typed values are rejected with the offending field
named.  Missing params take the defaults of the experiment kind.
"""

from __future__ import annotations

import copy
import json
import sys
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_BOX = {"family": "homogeneous_box"}
_RAMP = {"family": "tanh_ramp"}

DEFAULTS: dict = {
    "oracle-check": {"configs": 500, "max_particles": 20, "t_max": 10.0, "tolerance": 1e-9},
    "collision-table": {"fast": [0.0, 1.0, 1.0], "slow": [2.0, 0.0, 1.5], "probe": 0.25},
    "group-laws": {
        "configs": 200, "max_particles": 20, "t_max": 5.0, "micro_tolerance": 1e-9,
        "grid_model": _RAMP, "n_v": 24, "n_r": 6, "q_lo": -20.0, "q_hi": 20.0, "n_q": 401,
        "interior": [-10.0, 10.0], "s": 0.5, "t": 0.7, "grid_tolerance": 1e-6,
    },
    "lln": {"eps": [0.1, 0.01, 0.001, 0.0001], "replicas": 100,
            "points": [[1.0, 1.0], [0.5, -1.5], [2.0, 0.5], [0.0, 2.0]],
            "sigmas": 4.0, "slope_range": [0.4, 0.6]},
    "quasiparticle-lln": {"eps": 1e-3, "replicas": 200, "sigmas": 4.0,
                          "fixtures": [{"model": _BOX, "labels": [[0.5, 1.0, 1.0]], "microscopic": True}]},
    "macro-compare": {"eps": 1e-3, "replicas": 300, "sigmas": 4.0, "t": 1.0, "pad": 2.0,
                      "route_tolerance": 1e-6, "models": [],
                      "observables": [{"kind": "constant", "a": -1.0, "b": 1.5}]},
    "fluct": {"eps": 1e-2, "replicas": 2000, "points": [[2.0, 0.3], [3.0, -0.5], [1.0, 0.0], [2.5, 0.8]],
              "cov_sigmas": 5.0, "moment_sigmas": 4.0},
    "brownian": {"eps": 1e-2, "replicas": 2000, "x": 0.0, "v": 0.0, "times": [0.0, 1.0, 2.0, 3.0],
                 "var_sigmas": 5.0, "corr_sigmas": 4.0, "closed_form": None},
    "pde-residual": {
        "characteristics": [{"model": _BOX, "labels": [[0.0, 1.0, 1.0]]}], "step": 1e-3,
        "char_tolerance": 1e-6, "n_v": 24, "n_r": 6, "q_lo": -20.0, "q_hi": 20.0,
        "n_q": [101, 201, 401, 801], "dt_ratio": 1.0, "t": 1.0, "interior": [-8.0, 8.0],
        "min_slope": 1.8, "continuity_tolerance": 1e-5,
    },
    "evolve": {"n_v": 24, "n_r": 6, "q_lo": -20.0, "q_hi": 20.0, "n_q": 401, "interior": [-10.0, 10.0],
               "times": [0.5, 1.0], "tolerance": 1e-6, "write_grids": True},
    "quadrature-check": {"segments": 10, "extent": 3.0, "moments": [1, 2], "sides": ["both"],
                         "samples": 20000, "sigmas": 4.0, "models": []},
}

TOP_LEVEL = {"kind", "name", "seed", "threads", "out_dir", "model", "params"}


def _type_ok(value, default) -> bool:
    if default is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, type(default))


def validate(raw: dict, source: str = "<config>") -> dict:
    """Check a parsed config and fill in defaults; raises ``ConfigError`` naming the field."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a table")
    for key in raw:
        if key not in TOP_LEVEL:
            raise ConfigError(f"{source}: unknown top-level field {key!r}")
    kind = raw.get("kind")
    if kind not in DEFAULTS:
        raise ConfigError(f"{source}: field 'kind' must be one of {sorted(DEFAULTS)}, got {kind!r}")
    seed = raw.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        raise ConfigError(f"{source}: field 'seed' must be a nonnegative integer")
    threads = raw.get("threads")
    if threads is not None and not (isinstance(threads, int) and threads >= 1):
        raise ConfigError(f"{source}: field 'threads' must be a positive integer")
    name = raw.get("name", kind)
    if not isinstance(name, str):
        raise ConfigError(f"{source}: field 'name' must be a string")
    model = raw.get("model", {"family": "homogeneous_box"})
    if not isinstance(model, dict):
        raise ConfigError(f"{source}: field 'model' must be a table")
    params_in = raw.get("params", {})
    if not isinstance(params_in, dict):
        raise ConfigError(f"{source}: field 'params' must be a table")
    params = copy.deepcopy(DEFAULTS[kind])
    for key, value in params_in.items():
        if key not in params:
            raise ConfigError(f"{source}: unknown field 'params.{key}' for kind {kind!r}")
        if not _type_ok(value, params[key]):
            raise ConfigError(f"{source}: field 'params.{key}' has type {type(value).__name__}, "
                              f"expected {type(params[key]).__name__}")
        params[key] = float(value) if isinstance(params[key], float) else value
    for key in ("replicas", "configs", "segments", "samples"):
        if key in params and params[key] < 1:
            raise ConfigError(f"{source}: field 'params.{key}' must be at least 1")
    if "eps" in params:
        eps = params["eps"] if isinstance(params["eps"], list) else [params["eps"]]
        if not all(isinstance(e, (int, float)) and e > 0 for e in eps):
            raise ConfigError(f"{source}: field 'params.eps' must be positive")
    out = {"kind": kind, "name": name, "seed": seed, "model": model, "params": params}
    if threads is not None:
        out["threads"] = threads
    if "out_dir" in raw:
        out["out_dir"] = str(raw["out_dir"])
    return out


def load(path) -> dict:
    """Parse and validate a ``.toml`` or ``.json`` experiment file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return validate(raw, str(path))
