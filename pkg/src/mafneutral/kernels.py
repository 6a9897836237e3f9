"""Batch statistic kernels, compiled when available.

The compiled extension is chosen at import time. Setting the environment
variable ``MAFNEUTRAL_PURE_PYTHON=1`` forces the numpy fallback, which is
also used automatically when the extension was not built.
"""

import os

import numpy as np

from . import _pykernels
from .stats import Method

__all__ = ["BACKEND", "METHOD_CODES", "batch_statistics", "count_rejections", "get_backend"]

METHOD_CODES = {
    Method.W: _pykernels.W,
    Method.T: _pykernels.T,
    Method.CHI2: _pykernels.CHI2,
    Method.CATT: _pykernels.CATT,
    Method.W_HWD: _pykernels.W_HWD,
    Method.T_HWD: _pykernels.T_HWD,
}


def _load_compiled():
    if os.environ.get("MAFNEUTRAL_PURE_PYTHON", "").strip() not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
BACKEND = "cython" if _compiled is not None else "numpy"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "numpy" or None for the default)."""
    if name is None:
        name = BACKEND
    if name == "numpy":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def _prepare(r0, r1, R, s0, s1, S, codes, params):
    r0 = np.ascontiguousarray(r0, dtype=np.int64)
    n = r0.shape[0]
    arrays = [r0]
    for x in (r1, R, s0, s1, S):
        arrays.append(np.ascontiguousarray(np.broadcast_to(np.asarray(x, dtype=np.int64), (n,))))
    codes = np.ascontiguousarray([int(c) for c in codes], dtype=np.int64)
    params = np.ascontiguousarray(params, dtype=np.float64)
    if codes.shape != params.shape:
        raise ValueError("codes and params must have the same length")
    return arrays, codes, params


def batch_statistics(r0, r1, R, s0, s1, S, codes, params, backend=None):
    """Array of shape (len(codes), n_tables); NaN where a statistic is undefined.

    ``R`` and ``S`` may be scalars. ``params`` holds delta for W / W_HWD and
    the heterozygote score for CATT (ignored for the other methods).
    """
    arrays, codes, params = _prepare(r0, r1, R, s0, s1, S, codes, params)
    return get_backend(backend).batch_statistics(*arrays, codes, params)


def count_rejections(r0, r1, R, s0, s1, S, codes, params, crit, backend=None):
    arrays, codes, params = _prepare(r0, r1, R, s0, s1, S, codes, params)
    crit = np.ascontiguousarray(crit, dtype=np.float64)
    return get_backend(backend).count_rejections(*arrays, codes, params, crit)
