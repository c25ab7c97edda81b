"""Backend selection for the candidate-scoring kernels.

The compiled extension is used when it imports; set ``PARTYSOLVE_PURE=1``
to force the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("PARTYSOLVE_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

score_candidates = _impl.score_candidates
best_candidates = _impl.best_candidates
pair_weights = _impl.pair_weights
filter_candidates = _impl.filter_candidates
build_path = _impl.build_path
