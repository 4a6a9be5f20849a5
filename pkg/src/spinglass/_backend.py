"""Pick the compiled kernels when available, else the numpy fallback.

Set ``SPINGLASS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

python_kernels = _pykernels
compiled_kernels = None

if os.environ.get("SPINGLASS_PURE_PYTHON") != "1":
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = kernels.BACKEND
