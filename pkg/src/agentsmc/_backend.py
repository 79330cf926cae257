"""Backend selection for the compiled kernels.

Set ``AGENTSMC_DISABLE_NUMBA=1`` to force the pure-numpy implementations,
for example on platforms without numba or when debugging.
"""
import os

_FLAG = "AGENTSMC_DISABLE_NUMBA"


def numba_disabled():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def backend_name():
    """Return ``"numba"`` or ``"numpy"`` according to the environment."""
    if numba_disabled() or not numba_available():
        return "numpy"
    return "numba"
