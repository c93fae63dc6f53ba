"""Kernel backend selection.

Prefers the compiled extension ``zicp._kernels`` and falls back to the
pure-numpy module ``zicp._kernels_py``.  ``ZICP_BACKEND`` overrides:
``py`` forces the fallback, ``c`` requires the extension, ``auto``
(default) prefers the extension when importable.
"""

import os

from . import _kernels_py

_requested = os.environ.get("ZICP_BACKEND", "auto").lower()
if _requested not in ("auto", "py", "c"):
    raise ValueError(f"ZICP_BACKEND must be auto, py or c, got {_requested!r}")

if _requested == "py":
    impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "c":
            raise
        impl = _kernels_py
        BACKEND = "python"

lgamma_vec = impl.lgamma_vec
digamma_vec = impl.digamma_vec
trigamma_vec = impl.trigamma_vec
continuous_rowterms = impl.continuous_rowterms
continuous_logweights = impl.continuous_logweights
discrete_sample_record = impl.discrete_sample_record
