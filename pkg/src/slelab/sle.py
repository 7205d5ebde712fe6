"""Chordal SLE_kappa sampling in the upper half-plane."""
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import loewner
from .errors import OutOfRange
from .rng import normal_at


@dataclass(frozen=True)
class SleParams:
    """theta, kappa = 4 theta, central charge c and weight h."""
    theta: float
    kappa: float
    c: float
    h: float


def params_from_theta(theta):
    """c = (3 - 2 theta)(3 - 2/theta), h = (3/theta - 2)/4, kappa = 4 theta.

    The map theta -> kappa is a bijection of (0, 1] onto (0, 4]; c and h are
    then the usual (6 - kappa)(3 kappa - 8)/(2 kappa) and (6 - kappa)/(2 kappa).
    """
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise OutOfRange(f"theta={theta} outside (0, 1]")
    c = (3 - 2 * theta) * (3 - 2 / theta)
    h = (3 / theta - 2) / 4
    return SleParams(theta, 4 * theta, c, h)


def params_from_kappa(kappa):
    if not 0.0 < kappa <= 4.0:
        raise OutOfRange(f"kappa={kappa} outside (0, 4]: only simple curves")
    return params_from_theta(kappa / 4)


@dataclass(frozen=True)
class PathBatch:
    seed: int
    n_paths: int
    dt: float
    horizon: float
    drivings: list
    traces: list


@njit(cache=True)
def _brownian(seed, path_id, n, scale):
    w = np.empty(n)
    w[0] = 0.0
    acc = 0.0
    for k in range(1, n):
        acc += scale * normal_at(seed, path_id, np.uint64(k - 1))
        w[k] = acc
    return w


def n_steps(dt, horizon):
    n = int(round(horizon / dt))
    if n < 1:
        raise ValueError("horizon shorter than one step")
    return n


def sample_driving(params, dt, horizon, seed, path_id=0):
    """Brownian driving sqrt(kappa) B held constant on steps of size dt.

    Increment k is keyed by (seed, path_id, k), so paths are independent
    streams and any path can be regenerated alone.
    """
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    n = n_steps(dt, horizon)
    scale = np.sqrt(params.kappa * dt)
    w = _brownian(np.uint64(seed), np.uint64(path_id), n, scale)
    return loewner.DrivingFunction(w, dt)


def sample_trace(params, dt, horizon, seed, path_id=0):
    return loewner.trace(sample_driving(params, dt, horizon, seed, path_id))


def sample_batch(params, dt, horizon, seed, n_paths, with_traces=True):
    drv = [sample_driving(params, dt, horizon, seed, i) for i in range(n_paths)]
    trs = [loewner.trace(d) for d in drv] if with_traces else []
    return PathBatch(seed, n_paths, dt, horizon, drv, trs)


def rescale_driving(d, lam):
    """w'(s) = sqrt(lam) w(s / lam) on the grid with steps lam * dt."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return loewner.DrivingFunction(np.sqrt(lam) * d.values, lam * np.asarray(d.dt))
