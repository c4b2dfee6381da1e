"""Backend selection for the scalar hot loop.

The compiled extension is preferred when importable; the pure-Python twin
is the fallback and is also forced by setting NOISELAB_PURE_PYTHON=1 in
the environment (used by the benchmark and the equivalence tests). Both
backends implement the same contract and produce bit-identical output.
"""

import os

from . import _pykernels

if os.environ.get("NOISELAB_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

scalar_path = _impl.scalar_path
STATUS_COMPLETED = _pykernels.STATUS_COMPLETED
STATUS_BLOWN_UP = _pykernels.STATUS_BLOWN_UP
STATUS_EXTINCT = _pykernels.STATUS_EXTINCT
