"""Backend selection for the quadrature kernels.

The compiled extension is used when it is importable, unless the
environment variable ``SOGPE_PURE_PYTHON`` is set to a non-empty value
other than ``0``.
"""

import os

from . import _kernels_py

_force_python = os.environ.get("SOGPE_PURE_PYTHON", "") not in ("", "0")

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_impl = _compiled if (_compiled is not None and not _force_python) else _kernels_py
BACKEND = "cython" if _impl is _compiled else "python"
PAIRS = _kernels_py.PAIRS

weighted_mass_data = _impl.weighted_mass_data
quartic_integrals = _impl.quartic_integrals


def get_backend(name):
    """Return the kernel module called ``name`` ('cython' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
