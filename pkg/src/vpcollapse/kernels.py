"""Backend selection for the particle kernels.

The compiled extension ``_kernels_c`` is used when it imports; otherwise the
numpy fallback.  ``VPCOLLAPSE_BACKEND=python`` forces the fallback and
``VPCOLLAPSE_BACKEND=cython`` makes a missing extension an import error.
"""
import importlib
import os

from . import _kernels_py

__all__ = ["backend", "get_backend", "available_backends"]


def _load_compiled():
    try:
        return importlib.import_module("vpcollapse._kernels_c")
    except ImportError:
        return None


def available_backends():
    names = ["python"]
    if _load_compiled() is not None:
        names.insert(0, "cython")
    return names


def get_backend(name=None):
    name = (name or os.environ.get("VPCOLLAPSE_BACKEND", "auto")).lower()
    if name == "python":
        return _kernels_py
    compiled = _load_compiled()
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels requested but vpcollapse._kernels_c is not built")
        return compiled
    if name != "auto":
        raise ValueError(f"unknown backend {name!r}")
    return compiled if compiled is not None else _kernels_py


backend = get_backend()
