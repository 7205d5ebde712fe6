"""Numerical laboratory for chordal SLE, restriction martingales, Liouville
action identities, conformal moduli, loop coordinates and Ising walls."""
import os

import numba

# the TBB layer is not available everywhere; workqueue always is
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

__version__ = "0.1.0"
