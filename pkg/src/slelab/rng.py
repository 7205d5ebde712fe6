"""Counter-based random numbers (Philox4x32-10).

Every normal variate is a pure function of ``(seed, path_id, step)``, so a
path can be regenerated on its own, in any order, on any worker.
"""
import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32 on a 128-bit counter and 64-bit key.

    All arguments are uint64 holding 32-bit words.
    """
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True)
def _split(x):
    x = np.uint64(x)
    return x & _MASK, x >> _S32


@njit(cache=True)
def normal_at(seed, path_id, step):
    """Standard normal keyed by (seed, path_id, step), via Box-Muller."""
    k0, k1 = _split(seed)
    s0, s1 = _split(step)
    q0, q1 = _split(path_id)
    x0, x1, x2, x3 = philox4x32(s0, s1, q0, q1, k0, k1)
    u1 = ((x0 >> np.uint64(5)) * 67108864.0 + (x1 >> np.uint64(6))) / 9007199254740992.0
    u2 = ((x2 >> np.uint64(5)) * 67108864.0 + (x3 >> np.uint64(6))) / 9007199254740992.0
    return np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True)
def fill_normals(seed, path_id, start, out):
    for i in range(out.shape[0]):
        out[i] = normal_at(seed, path_id, start + i)
    return out


def normals(seed, path_id, n, start=0):
    """Array of ``n`` normals for one path, steps ``start .. start+n-1``."""
    return fill_normals(np.uint64(seed), np.uint64(path_id), np.uint64(start),
                        np.empty(int(n)))
