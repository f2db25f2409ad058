"""Trajectory-kernel selection: compiled extension if built, pure fallback.

Set SHANGOPT_PURE=1 to force the pure-Python kernels (used by the equivalence
tests and the benchmark).  Both implementations are bitwise-identical; the
compiled one is ~2 orders of magnitude faster and releases the GIL.
"""

import os

import numpy as np

from . import _pyref

try:
    from . import _fast
    HAVE_COMPILED = True
except ImportError:
    _fast = None
    HAVE_COMPILED = False

if os.environ.get("SHANGOPT_PURE") or not HAVE_COMPILED:
    _impl = _pyref
else:
    _impl = _fast

IMPLEMENTATION = _impl.IMPLEMENTATION

shang_trajectory = _impl.shang_trajectory
dl_trajectory = _impl.dl_trajectory
snag_trajectory = _impl.snag_trajectory
baseline_trajectory = _impl.baseline_trajectory


def kernel_descriptor(problem):
    """(kind, dexp, lam, cen) for kernel-routable problems, else None.

    ``cen`` doubles as the minimizer for both families (zeros for the |x|^d
    family), which is what the kernels measure energies against.
    """
    fam = getattr(problem, "family", None)
    if fam is None:
        return None
    if fam[0] == "fd":
        return 0, int(fam[1]), np.zeros(1), np.zeros(1)
    if fam[0] == "quadratic":
        lam, cen = fam[1], fam[2]
        return 1, 0, np.asarray(lam, dtype=np.float64), np.asarray(cen, dtype=np.float64)
    return None
