"""Discrete chordal Loewner evolution with vertical-slit steps.

A step of Loewner time ``dt`` with driving value ``w`` is the exact map
``z -> w + sqrt((z - w)**2 + 4 dt)``, the flow of dg/dt = 2/(g - w) with
``w`` frozen.  It adds ``2 dt`` to the 1/z coefficient, so the half-plane
capacity coefficient of K_t is ``2 t`` and ``time = c1 / 2`` equals ``t``.
"""
import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from .cgeom import MapPipeline, SlitRun, _sqrt_up
from .errors import EmptyDriving, NonSimpleCurve


@dataclass(frozen=True, eq=False)
class DrivingFunction:
    """Piecewise-constant driving: ``values[k]`` is held on step k.

    ``dt`` is a scalar (uniform grid) or a per-step array.
    """
    values: np.ndarray
    dt: object

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self):
        return self.values.shape[0]

    @property
    def steps(self):
        return np.broadcast_to(np.asarray(self.dt, dtype=float), self.values.shape)

    @property
    def times(self):
        """Step endpoints 0 = t_0 < t_1 < ... < t_n."""
        return np.concatenate([[0.0], np.cumsum(self.steps)])

    @property
    def horizon(self):
        return math.fsum(self.steps)

    def __add__(self, other):
        return DrivingFunction(np.concatenate([self.values, other.values]),
                               np.concatenate([self.steps, other.steps]))


@dataclass(frozen=True)
class HullTaylor:
    """Leading coefficients of g_K(z) = z + g1/z + g2/z**2 + ..."""
    g1: float
    g2: complex


@dataclass(frozen=True, eq=False)
class ChainState:
    pipeline: MapPipeline
    capacity: float
    current_drive: float
    driving: DrivingFunction

    @cached_property
    def trace(self):
        return trace(self.driving)

    @property
    def time(self):
        return self.capacity


def _check(driving):
    if driving is None or len(driving) == 0:
        raise EmptyDriving("driving function has no steps")
    if np.any(driving.steps <= 0):
        raise ValueError("step sizes must be positive")


def evolve(driving):
    """Compose the slit steps of ``driving`` into a hull uniformizer."""
    _check(driving)
    run = SlitRun(driving.values, driving.steps)
    pipe = MapPipeline().then(run)
    return ChainState(pipe, math.fsum(run.dt), float(driving.values[-1]), driving)


def capacity_time(state):
    """Time(K) read off the Laurent tail (c1 / 2)."""
    return float(state.pipeline.tail.c1.real) / 2


def taylor(state):
    if state is None:
        return HullTaylor(0.0, 0j)
    t = state.pipeline.tail
    return HullTaylor(float(t.c1.real), complex(t.c2))


@njit(cache=True)
def _tips(drive, dt):
    n = drive.shape[0]
    u = drive.astype(np.complex128)
    for j in range(n - 1, -1, -1):
        w = drive[j]
        d4 = 4.0 * dt[j]
        for k in range(j, n):
            v = u[k] - w
            u[k] = w + _sqrt_up(v * v - d4, v)
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = 0.0
    out[1:] = u
    return out


def trace(driving):
    """Tip polyline: point k is the tip of the k-th slit in the original
    half-plane, i.e. the preimage of the k-th driving value under the first
    k steps.  O(n**2)."""
    _check(driving)
    return _tips(np.ascontiguousarray(driving.values),
                 np.ascontiguousarray(driving.steps, dtype=float))


@njit(cache=True)
def _unzip(pts, tol):
    m = pts.shape[0]
    q = pts.copy()
    drive = np.empty(m)
    dt = np.empty(m)
    bad = -1
    for k in range(m):
        p = q[k]
        if p.imag <= tol:
            bad = k
            break
        w = p.real
        d = 0.25 * p.imag * p.imag
        drive[k] = w
        dt[k] = d
        d4 = 4.0 * d
        for j in range(k + 1, m):
            v = q[j] - w
            q[j] = w + _sqrt_up(v * v + d4, v)
    return drive, dt, bad


@dataclass(frozen=True, eq=False)
class UnzipResult:
    driving: DrivingFunction

    @property
    def drive(self):
        return self.driving.values

    @property
    def dt(self):
        return self.driving.steps

    @property
    def times(self):
        return self.driving.times[1:]


def unzip(polyline, tol=1e-13):
    """Driving function of a curve from 0 by successive vertical slits.

    Each mapped point p gives one step with drive Re p and duration
    (Im p)**2 / 4.  A point that lands on the real line away from the tip
    means the curve touched itself or the boundary.
    """
    z = np.asarray(polyline, dtype=complex)
    if z.shape[0] < 2:
        raise EmptyDriving("need at least two points")
    if abs(z[0]) > 1e-12:
        raise ValueError("polyline must start at 0")
    pts = np.ascontiguousarray(z[1:])
    seg = np.abs(np.diff(z)).max()
    drive, dt, bad = _unzip(pts, tol * max(1.0, seg))
    if bad >= 0:
        err = NonSimpleCurve(f"point {bad + 1} maps onto the real line")
        err.index = int(bad + 1)
        raise err
    return UnzipResult(DrivingFunction(drive, dt))


# ---------------------------------------------------------------- io

def write_trace_csv(path, trace_pts, times):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "t", "re", "im"])
        for i, (t, z) in enumerate(zip(times, trace_pts)):
            wr.writerow([i, repr(float(t)), repr(float(z.real)), repr(float(z.imag))])


def write_driving_csv(path, driving):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "w"])
        for t, w in zip(driving.times[:-1], driving.values):
            wr.writerow([repr(float(t)), repr(float(w))])


def read_trace_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
