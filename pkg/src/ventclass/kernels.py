"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set VENTCLASS_PURE_PYTHON=1 to force the fallback (used by the benchmark
and the equivalence tests).
"""
import os

if os.environ.get("VENTCLASS_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _fastkernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

IMPL_NAME = _impl.IMPL_NAME
USING_EXTENSION = IMPL_NAME == "cython"

best_split = _impl.best_split
breath_meta = _impl.breath_meta
breath_features = _impl.breath_features
pop_var = _impl.pop_var
trailing_var = _impl.trailing_var
