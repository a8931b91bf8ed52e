"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback.  Set ``MODEBELL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("MODEBELL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

outcome_probabilities = _impl.outcome_probabilities
inverse_cdf_counts = _impl.inverse_cdf_counts

__all__ = ["BACKEND", "outcome_probabilities", "inverse_cdf_counts"]
