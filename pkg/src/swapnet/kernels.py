"""Select the sampling kernel at import.

The compiled extension is used when it was built; setting
``SWAPNET_PURE_PYTHON=1`` forces the numpy fallback. ``BACKEND`` names the
active choice.
"""
import os

from . import _kernels_py as pure
from ._kernels_py import mix64, stream_key, uniforms

compiled = None
if os.environ.get("SWAPNET_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

if compiled is not None:
    count_below = compiled.count_below
    count_below_batch = compiled.count_below_batch
    BACKEND = "cython"
else:
    count_below = pure.count_below
    count_below_batch = pure.count_below_batch
    BACKEND = "python"

__all__ = ["BACKEND", "compiled", "count_below", "count_below_batch", "mix64", "pure", "stream_key", "uniforms"]
