"""Double-precision trace kernels with optional numba acceleration.

The hot inner loop of band construction in double mode is the transfer
matrix recursion; it is compiled with numba unless the environment
variable STURMSPEC_NO_NUMBA is set (or numba is unavailable), in which
case a pure numpy/python reference implementation is used.  Extended
precision evaluation lives in the bands module and does not go through
these kernels.
"""

import os

from . import reference

HAS_NUMBA = False
if not os.environ.get("STURMSPEC_NO_NUMBA"):
    try:
        from . import accel  # noqa: F401

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, belt+braces
        accel = None
else:
    accel = None

if HAS_NUMBA:
    level_pass = accel.level_pass
    level_pass_grid = accel.level_pass_grid
else:
    level_pass = reference.level_pass
    level_pass_grid = reference.level_pass_grid

direct_transfer = reference.direct_transfer

__all__ = ["level_pass", "level_pass_grid", "direct_transfer", "HAS_NUMBA"]
