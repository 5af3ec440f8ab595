"""Kernel backend selection.

The compiled extension is preferred when present; otherwise the NumPy
fallback is used. Set SUSGUARD_PURE_PYTHON=1 to force the fallback (used by
the parity tests and the benchmark).
"""

import os

if os.environ.get("SUSGUARD_PURE_PYTHON"):
    from . import fallback as backend
else:
    try:
        from . import _core as backend  # type: ignore[attr-defined]
    except ImportError:
        from . import fallback as backend


def backend_name() -> str:
    return backend.NAME


pair_sqdist = backend.pair_sqdist
min_sqdist = backend.min_sqdist
argmin_sqdist = backend.argmin_sqdist
loo_min_sqdist = backend.loo_min_sqdist
admm_chunk = backend.admm_chunk
