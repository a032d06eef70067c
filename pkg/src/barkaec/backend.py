"""Kernel backend selection.

The hot inner loops (subband NLMS bank, GRU/FC steps, fractional
resampling) exist twice: a numba ``@njit`` build and a pure-numpy build.
Selection happens once at import time via the ``BARKAEC_BACKEND``
environment variable:

    BARKAEC_BACKEND=numba   force numba (ImportError if unavailable)
    BARKAEC_BACKEND=numpy   force the pure-numpy path
    unset / auto            numba if importable, else numpy

``barkaec.backend.kernels`` is the selected module; ``BACKEND_NAME`` tells
which one won.  Both builds implement the same functions with the same
signatures and mutate state arrays in place, so results are deterministic
within a backend.
"""

import os

_requested = os.environ.get("BARKAEC_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(f"BARKAEC_BACKEND must be auto|numba|numpy, got {_requested!r}")

if _requested == "numpy":
    from barkaec import _kernels_np as kernels

    BACKEND_NAME = "numpy"
elif _requested == "numba":
    from barkaec import _kernels_nb as kernels

    BACKEND_NAME = "numba"
else:
    try:
        from barkaec import _kernels_nb as kernels

        BACKEND_NAME = "numba"
    except ImportError:
        from barkaec import _kernels_np as kernels

        BACKEND_NAME = "numpy"


def get_kernels(name=None):
    """Return a kernel module by name ("numba"/"numpy"), default the active one.

    Used by the benchmark CLI to time both builds side by side.
    """
    if name is None:
        return kernels
    if name == "numpy":
        from barkaec import _kernels_np

        return _kernels_np
    if name == "numba":
        from barkaec import _kernels_nb

        return _kernels_nb
    raise ValueError(f"unknown backend {name!r}")
