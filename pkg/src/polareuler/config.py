"""Run configuration: strict JSON with a fixed schema.

The config file is a JSON object; every key must be known (typos are
errors, not silently ignored defaults).  `--override a.b=value` entries
use dotted paths and JSON-parsed values.  The sha256 hash of the
canonical serialization stamps every output for reproducibility.
"""

import copy
import hashlib
import json

SCHEMA_VERSION = 1

# section -> key -> default.  None means "derive at run time".
DEFAULTS = {
    "construction": {
        "beta": 0.5,
        "delta": 0.05,
        "lam": 4.0,
        "N": None,
        "amp_boost": 1.0,
        "grid_n": 3200,
        "grid_pad": 1.5,
        "k_max": None,
    },
    "evolve": {
        "t_end": 1.0,
        "cfl": 0.5,
        "dt": None,
        "n_monitors": 11,
        "guard_factor": 4.0,
        "max_steps": 500000,
        "dealias": True,
        "filter_strength": 0.0,
    },
    "sobolev": {
        "s_values": [0.5],
        "method": "hankel",
        "tail_rtol": 1e-7,
        "panels_per_period": 2,
        "box_n": 256,
    },
    "diagnostics": {
        "pseudo_error": True,
        "decomposition": True,
        "inflation": True,
        "h1_budget_check": True,
    },
    "gluing": {
        "J": 2,
        "v_max": 1.0,
        "lam_growth": 1.5,
        "J_max": 6,
    },
    "sweep": {
        "axis": "N",
        "values": [8, 16, 32],
        "mode": "decay",
        "probe_radius": 1.0 / 24.0,
    },
    "decay": {
        "N_values": [4, 8, 16, 32],
        "support": [1.0, 2.0],
        "probe_radius": 1.0 / 24.0,
    },
    "loglip": {
        "n_pairs": 200,
        "r_probe": 1.0,
    },
    "seed": 0,
    "schema_version": SCHEMA_VERSION,
}


class ConfigError(ValueError):
    pass


def _check_known(data, defaults, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"expected object at '{path or '<root>'}'")
    for key, val in data.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key '{path}{key}'")
        if isinstance(defaults[key], dict):
            _check_known(val, defaults[key], path=f"{path}{key}.")


def _merge(defaults, data):
    out = copy.deepcopy(defaults)
    for key, val in data.items():
        if isinstance(defaults.get(key), dict):
            out[key] = _merge(defaults[key], val)
        else:
            out[key] = val
    return out


def load_config(path=None, overrides=()):
    """Parse a JSON config file, apply dotted overrides, fill defaults."""
    data = {}
    if path is not None:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    _check_known(data, DEFAULTS)
    cfg = _merge(DEFAULTS, data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        dotted, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw                        # bare strings allowed
        node = cfg
        parts = dotted.split(".")
        walk = DEFAULTS
        for p in parts[:-1]:
            if p not in walk or not isinstance(walk[p], dict):
                raise ConfigError(f"unknown config key '{dotted}'")
            walk = walk[p]
            node = node[p]
        if parts[-1] not in walk:
            raise ConfigError(f"unknown config key '{dotted}'")
        node[parts[-1]] = value
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version {cfg['schema_version']} != {SCHEMA_VERSION}"
        )
    for s in cfg["sobolev"]["s_values"]:
        if not (-1.0 < s <= 1.0):
            raise ConfigError(f"sobolev s value {s} outside (-1, 1]")
    return cfg


def serialize(cfg):
    """Canonical serialization: sorted keys, tight separators."""
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()[:16]
