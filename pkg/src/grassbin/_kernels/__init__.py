"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
NumPy reference implementation is used. Set GRASSBIN_BACKEND=numpy to force
the fallback (useful for benchmarking and debugging).
"""

import os

from . import _ref

if os.environ.get("GRASSBIN_BACKEND", "").lower() in ("numpy", "python", "ref"):
    _impl = _ref
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND_NAME

det = _impl.det
det_minpivot = _impl.det_minpivot
joint_table = _impl.joint_table
sum_principal_minors = _impl.sum_principal_minors
p0_witness = _impl.p0_witness
loglik_grad = _impl.loglik_grad
