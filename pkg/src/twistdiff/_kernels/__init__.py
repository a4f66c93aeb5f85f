"""Backend selection: compiled Cython core with a pure-numpy fallback.

The active backend is chosen at import time; set the environment
variable ``TWISTDIFF_BACKEND=fallback`` (or ``cython``) to force one.
"""

import os

from . import fallback

try:
    from . import _core
except ImportError:  # pragma: no cover - depends on build environment
    _core = None

_forced = os.environ.get("TWISTDIFF_BACKEND", "").strip().lower()
if _forced == "fallback":
    _active = fallback
    BACKEND = "fallback"
elif _forced == "cython":
    if _core is None:
        raise ImportError(
            "TWISTDIFF_BACKEND=cython requested but the compiled core "
            "is not available")
    _active = _core
    BACKEND = "cython"
else:
    _active = _core if _core is not None else fallback
    BACKEND = "cython" if _core is not None else "fallback"


def available_backends():
    names = ["fallback"]
    if _core is not None:
        names.insert(0, "cython")
    return names


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _active
    if name == "fallback":
        return fallback
    if name == "cython" and _core is not None:
        return _core
    raise ValueError(f"unknown or unavailable backend: {name!r}")


def run_paths(pot_arrays, eps, theta0, r0, omegas, record=False,
              backend=None):
    mod = get_backend(backend)
    return mod.run_paths(*pot_arrays, eps, theta0, r0, omegas, record)


def run_exits(pot_arrays, eps, theta0, r0, omegas, lo, hi, close_tol,
              backend=None):
    mod = get_backend(backend)
    return mod.run_exits(*pot_arrays, eps, theta0, r0, omegas, lo, hi,
                         close_tol)


def system_arrays(potentials):
    """The 12 (real, imag) coefficient matrices consumed by the kernels."""
    out = []
    for pot in (potentials.u_plus, potentials.u_minus,
                potentials.v_plus, potentials.v_minus,
                potentials.w_plus, potentials.w_minus):
        re, im = pot.kernel_rows()
        out.append(re)
        out.append(im)
    return tuple(out)
