"""Hot inner loops, compiled when possible.

The Cython extension is imported when it was built and
``SALIENTCROP_PURE_PYTHON`` is unset; otherwise the numpy versions are used.
``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels as python

try:
    if os.environ.get("SALIENTCROP_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

_active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

strict_local_maxima = _active.strict_local_maxima
label_components = _active.label_components
kdtree_query = _active.kdtree_query
descriptor_histogram = _active.descriptor_histogram

__all__ = [
    "BACKEND",
    "compiled",
    "python",
    "strict_local_maxima",
    "label_components",
    "kdtree_query",
    "descriptor_histogram",
]
