"""Hot kernels with interchangeable numba and numpy implementations.

Every kernel is a deterministic function of its inputs; randomness enters
only as arrays of uniforms drawn by the caller. Both backends therefore
produce the same samples for the same generator state.
"""
from .._backend import backend_name

BACKEND = backend_name()

if BACKEND == "numba":
    from ._numba import (
        condber_sample_rows,
        poibin_pmf_rows,
        sir_bif_step,
    )
else:
    from ._numpy import (  # noqa: F401
        condber_sample_rows,
        poibin_pmf_rows,
        sir_bif_step,
    )

from ._numpy import categorical_log_rows  # noqa: E402,F401

__all__ = [
    "BACKEND",
    "categorical_log_rows",
    "condber_sample_rows",
    "poibin_pmf_rows",
    "sir_bif_step",
]
