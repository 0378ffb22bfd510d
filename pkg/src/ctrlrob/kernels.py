"""Backend selection for the graph kernels.

The compiled extension ``ctrlrob._kernels`` is used when it imports; otherwise,
or when ``CTRLROB_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the pure-Python module ``ctrlrob._pykernels`` is used.
"""
import importlib
import os

from . import _pykernels


def _load_compiled():
    try:
        return importlib.import_module("ctrlrob._kernels")
    except ImportError:
        return None


_compiled = _load_compiled()

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if os.environ.get("CTRLROB_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]
max_matching = _impl.max_matching
betweenness = _impl.betweenness


def get_backend(name):
    """Return the kernel module registered under ``name`` ("python" or "cython")."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise LookupError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
