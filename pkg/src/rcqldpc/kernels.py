"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it is importable; the
numpy implementation in ``_pykernels`` is the fallback.  Setting
``RCQLDPC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

try:
    if os.environ.get("RCQLDPC_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels
except ImportError:
    _ckernels = None

_default = _ckernels if _ckernels is not None else _pykernels
BACKEND = _default.NAME


def available():
    return [m.NAME for m in (_ckernels, _pykernels) if m is not None]


def get_backend(name=None):
    """The kernel module called ``name`` ('cython' or 'python'), default if ``None``."""
    if name is None:
        return _default
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def osa_starts(llr, l_s):
    return _default.osa_starts(llr, l_s)
