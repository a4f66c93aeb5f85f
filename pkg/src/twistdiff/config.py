"""JSON run configuration: strict schema, flag overrides win.

A config file looks like

    {
      "epsilon": 0.02,
      "s": 1.0,
      "samples": 20000,
      "seed": 7,
      "beta": 0.05,
      "theta0": null,
      "r0": 0.5,
      "threads": 1,
      "out": "hist.csv",
      "system": {"builtin": "cos_sin"}
    }

The "system" entry is either a builtin name (with optional "params") or
an explicit potential table: each of u_plus ... w_minus is a list of
terms {"k": int, "re": [poly], "im": [poly]} giving the ascending-power
polynomial of the Fourier coefficient c_k(r) (negative k filled in by
conjugate symmetry).  Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json

from .dynamics import MapSystem
from .errors import ConfigError
from .potentials import SystemPotentials, TrigPotential
from .systems import BUILTIN_SYSTEMS

_TOP_KEYS = {"epsilon", "s", "samples", "seed", "beta", "theta0", "r0",
             "threads", "out", "system", "a", "l"}
_SYSTEM_KEYS = {"builtin", "params", "u_plus", "u_minus", "v_plus",
                "v_minus", "w_plus", "w_minus"}
_POT_NAMES = ("u_plus", "u_minus", "v_plus", "v_minus", "w_plus", "w_minus")
_TERM_KEYS = {"k", "re", "im"}

DEFAULTS = {
    "epsilon": 0.02,
    "s": 1.0,
    "samples": 10000,
    "seed": 0,
    "beta": 0.05,
    "theta0": None,
    "r0": 0.5,
    "threads": 1,
    "out": None,
    "a": 0.55,
    "l": 7,
    "system": {"builtin": "cos_sin"},
}


def load_config(path):
    """Parse and validate a config file; returns defaults merged with it."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    _validate_system(cfg["system"])
    return cfg


def _validate_system(sys_cfg):
    if not isinstance(sys_cfg, dict):
        raise ConfigError("'system' must be a JSON object")
    unknown = set(sys_cfg) - _SYSTEM_KEYS
    if unknown:
        raise ConfigError(f"unknown system keys: {sorted(unknown)}")
    if "builtin" in sys_cfg:
        if sys_cfg["builtin"] not in BUILTIN_SYSTEMS:
            raise ConfigError(
                f"unknown builtin system {sys_cfg['builtin']!r}; "
                f"choose from {sorted(BUILTIN_SYSTEMS)}")
        extra = set(sys_cfg) - {"builtin", "params"}
        if extra:
            raise ConfigError(
                f"builtin system takes no potential table: {sorted(extra)}")
        return
    missing = [n for n in _POT_NAMES if n not in sys_cfg]
    if missing:
        raise ConfigError(f"system table missing potentials: {missing}")
    for name in _POT_NAMES:
        terms = sys_cfg[name]
        if not isinstance(terms, list):
            raise ConfigError(f"system.{name} must be a list of terms")
        for t in terms:
            if not isinstance(t, dict) or set(t) - _TERM_KEYS or "k" not in t:
                raise ConfigError(
                    f"bad term in system.{name}: {t!r} "
                    "(expected {'k', 're', 'im'})")


def _build_potential(terms):
    coeffs = {}
    for t in terms:
        k = int(t["k"])
        re = t.get("re", [0.0])
        im = t.get("im", [0.0])
        n = max(len(re), len(im))
        re = list(re) + [0.0] * (n - len(re))
        im = list(im) + [0.0] * (n - len(im))
        coeffs[k] = [complex(a, b) for a, b in zip(re, im)]
    return TrigPotential(coeffs) if coeffs else TrigPotential.zero()


def build_system(cfg) -> MapSystem:
    """Instantiate the MapSystem described by a validated config."""
    sys_cfg = cfg["system"]
    eps = float(cfg["epsilon"])
    if "builtin" in sys_cfg:
        params = dict(sys_cfg.get("params", {}))
        try:
            return BUILTIN_SYSTEMS[sys_cfg["builtin"]](
                eps, a=float(cfg["a"]), l=int(cfg["l"]), **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad builtin system parameters: {exc}")
    try:
        pots = SystemPotentials(
            *[_build_potential(sys_cfg[name]) for name in _POT_NAMES])
        return MapSystem(pots, eps=eps, a=float(cfg["a"]), l=int(cfg["l"]))
    except ValueError as exc:
        raise ConfigError(f"bad system definition: {exc}")


def apply_overrides(cfg, args, names):
    """Copy non-None CLI flag values over config entries (flags win)."""
    out = dict(cfg)
    for name in names:
        val = getattr(args, name, None)
        if val is not None:
            key = "epsilon" if name == "epsilon" else name
            out[key] = val
    return out
