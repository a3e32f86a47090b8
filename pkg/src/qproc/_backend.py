"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise (or when
the environment variable ``QPROC_PURE_PYTHON`` is set to a truthy value) the
numpy fallback is used.  ``use_backend`` switches explicitly, which the
benchmark and the backend-parity tests rely on.
"""
import os

from . import _kernels_py

_compiled = None
try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_active = None
name = None


def available():
    """Names of the backends that can be selected."""
    return ["python"] + (["cython"] if _compiled is not None else [])


def use_backend(which):
    """Select ``"cython"`` or ``"python"``; returns the previous backend name."""
    global _active, name
    prev = name
    if which == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _compiled
    elif which == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {which!r}")
    name = which
    return prev


def kernels():
    return _active


_forced = os.environ.get("QPROC_PURE_PYTHON", "").strip().lower() in ("1", "true", "yes")
use_backend("python" if (_forced or _compiled is None) else "cython")
