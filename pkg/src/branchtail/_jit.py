"""Backend selection.

Set ``BRANCHTAIL_DISABLE_NUMBA=1`` to force the vectorised numpy kernels even
when numba is importable.
"""
import os

_DISABLED = os.environ.get("BRANCHTAIL_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and not _DISABLED


def default_backend():
    return "numba" if NUMBA_ENABLED else "numpy"
