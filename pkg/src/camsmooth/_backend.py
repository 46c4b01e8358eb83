"""Kernel backend selection.

The hot inner loops (point splatting, batched projection) ship in two
equivalent implementations: a numba-compiled one and a pure-numpy fallback.
Set ``CMS_BACKEND=numpy`` to force the fallback, ``CMS_BACKEND=numba`` to
insist on the compiled path (raises if numba is unavailable). Default is
numba when importable. Both paths produce identical images.
"""

import os

_requested = os.environ.get("CMS_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"CMS_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    NUMBA_ENABLED = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        if _requested == "numba":
            raise
        NUMBA_ENABLED = False


def active_backend() -> str:
    """Name of the kernel backend in use: 'numba' or 'numpy'."""
    return "numba" if NUMBA_ENABLED else "numpy"
