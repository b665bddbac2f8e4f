"""JSON configuration documents: typed per-command blocks, unknown keys rejected,
complex numbers written as [re, im].
"""
from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import ConfigError

CONFIG_SCHEMA = "ecmcurve-config/1"

# kinds: int, float, bool, str, complex, clist (list of complex), flist, strlist, cases
_CURVE_CASE = {
    "name": ("str", "case"),
    "tau": ("complex", [0.0, 0.8]),
    "nu": ("complex", None),
    "p": ("clist", None),
    "z": ("clist", None),
    "M": ("int", 64),
    "l_range": ("int", 3),
    "tol": ("float", 1e-8),
}

BLOCKS = {
    "global": {
        "seed": ("int", 0),
        "threads": ("int", 1),
    },
    "involution-check": {
        "d_max": ("int", 4),
        "expect_triples": ("int", None),
        "expect_orbits": ("int", None),
    },
    "curve-scan": {
        "cases": ("cases", None),
    },
    "qcurve-solve": {
        "Y_roots": ("clist", None),
        "hbar": ("complex", [1.0, 0.0]),
        "n": ("complex", None),
        "qe": ("complex", [0.05, 0.0]),
        "D": ("int", 1),
        "w0": ("complex", [0.3, 0.4]),
        "r": ("int", 1),
        "M": ("int", 40),
        "seed_psi": ("str", "unit"),
        "pairings": ("strlist", ["YX", "YZ"]),
        "tol": ("float", 1e-10),
        "reduction_min": ("float", 1e6),
        "ratio_min": ("float", 10.0),
        "negative_control": ("bool", True),
        "golden": ("str", None),
    },
    "toda-verify": {
        "a": ("clist", None),
        "hbar": ("complex", [1.0, 0.0]),
        "L_values": ("flist", [1e-2, 1e-3]),
        "P": ("int", 4),
        "Pp": ("int", 4),
        "w_points": ("clist", [[1.3, 0.1], [1.9, -0.2], [2.3, 0.2], [2.8, 0.05], [3.4, 0.3]]),
        "window": ("clist", [[-2.0, -1.0], [6.0, 1.0]]),
        "seeds": ("clist", []),
        "expect_root": ("complex", None),
        "expect_root_tol": ("float", None),
        "tq_tol": ("float", 1e-8),
        "slope_tol": ("float", 0.2),
        "flat_tol": ("float", 1e-8),
        "bethe_tol": ("float", 1e-6),
    },
    "observables-eval": {
        "q_roots": ("clist", None),
        "random_degree": ("int", None),
        "hbar": ("complex", [1.0, 0.0]),
        "n": ("complex", [0.5, 0.0]),
        "D": ("int", 2),
        "grid": ("clist", None),
        "telescoping_tol": ("float", 1e-13),
        "hand_tol": ("float", 1e-12),
    },
}


def _complex(v, path):
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        raise ConfigError(f"{path}: complex numbers must be written as [re, im], got {v!r}")
    raise ConfigError(f"{path}: expected [re, im], got {v!r}")


def _coerce(kind, v, path):
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{path}: expected integer, got {v!r}")
        return v
    if kind == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}: expected number, got {v!r}")
        return float(v)
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(f"{path}: expected true/false, got {v!r}")
        return v
    if kind == "str":
        if not isinstance(v, str):
            raise ConfigError(f"{path}: expected string, got {v!r}")
        return v
    if kind == "complex":
        return _complex(v, path)
    if kind in ("clist", "flist", "strlist"):
        if not isinstance(v, list):
            raise ConfigError(f"{path}: expected a list, got {v!r}")
        sub = {"clist": "complex", "flist": "float", "strlist": "str"}[kind]
        return [_coerce(sub, x, f"{path}[{i}]") for i, x in enumerate(v)]
    if kind == "cases":
        if not isinstance(v, list) or not v:
            raise ConfigError(f"{path}: expected a non-empty list of cases")
        return [_block(_CURVE_CASE, c, f"{path}[{i}]") for i, c in enumerate(v)]
    raise AssertionError(kind)


def _block(schema, raw, path):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in raw and raw[key] is not None:
            out[key] = _coerce(kind, raw[key], f"{path}.{key}")
        else:
            out[key] = _coerce(kind, default, f"{path}.{key}") if isinstance(default, list) and kind != "cases" else default
    return out


def parse_config(doc: dict, command: str) -> tuple[dict, dict]:
    """Validate a whole document and return (global block, command block)."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    allowed = set(BLOCKS) | {"schema"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"config: unknown top-level key(s) {unknown}")
    if "schema" in doc and doc["schema"] != CONFIG_SCHEMA:
        raise ConfigError(f"config.schema: expected {CONFIG_SCHEMA!r}, got {doc['schema']!r}")
    blocks = {name: _block(schema, doc.get(name, {}), name) for name, schema in BLOCKS.items() if name in doc or name == "global"}
    if command not in blocks:
        raise ConfigError(f"config: no {command!r} block")
    glob = blocks["global"]
    env = os.environ.get("ECMCURVE_THREADS")
    if env is not None:
        try:
            glob["threads"] = int(env)
        except ValueError as exc:
            raise ConfigError(f"ECMCURVE_THREADS must be an integer, got {env!r}") from exc
    for name, blk in blocks.items():
        for key, (kind, default) in BLOCKS[name].items():
            if default is None and blk[key] is None and key in _REQUIRED.get(name, ()):
                raise ConfigError(f"{name}.{key}: required")
    return glob, blocks[command]


_REQUIRED = {
    "curve-scan": ("cases",),
    "qcurve-solve": ("Y_roots", "n"),
    "toda-verify": ("a",),
}


def load_config(path, command: str) -> tuple[dict, dict, dict]:
    """Read a JSON file; returns (raw document, global block, command block)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    glob, block = parse_config(doc, command)
    return doc, glob, block


def shipped_config(name: str) -> Path:
    return Path(__file__).parent / "configs" / name
