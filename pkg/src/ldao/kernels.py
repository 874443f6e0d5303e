"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``LDAO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
if os.environ.get("LDAO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

nearest_centroid = _impl.nearest_centroid
knn_indices = _impl.knn_indices
kde_log_sums = _impl.kde_log_sums

__all__ = ["BACKEND", "nearest_centroid", "knn_indices", "kde_log_sums"]
