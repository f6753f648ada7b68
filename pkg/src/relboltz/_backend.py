"""Kernel backend selection.

The compiled extension is used when it imports; set ``RELBOLTZ_PURE_PYTHON=1``
to force the numpy implementation.
"""
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)


def _load_compiled():
    if os.environ.get("RELBOLTZ_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError as exc:
        log.info("compiled kernels unavailable (%s); using numpy fallback", exc)
        return None
    return _ckernels


compiled = _load_compiled()
kernels = compiled if compiled is not None else _pykernels
NAME = "cython" if compiled is not None else "numpy"


def get(name=None):
    """Return a kernel module by name ('cython', 'numpy') or the active one."""
    if name is None:
        return kernels
    if name == "numpy":
        return _pykernels
    if name == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
