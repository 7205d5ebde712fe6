"""Critical Ising domain walls under Dobrushin boundary conditions.

Spins live on sites (x, y), 1 <= x <= W, 1 <= y <= H, inside a frame of
fixed spins: + on the left column, - on the right column, and the bottom
and top rows split at the centre (+ for x <= W/2).  The interface is the
dual-lattice path with + on its left, started on the bottom edge between
x = W/2 and W/2 + 1; at saddles it turns left.

Dual corners (cx, cy) sit between sites cx - 1, cx and cy - 1, cy, so
site (x, y) is centred at corner coordinates (x + 1/2, y + 1/2).  The
half-plane picture puts the real line through the bottom frame sites, with
0 at (W/2 + 1, 1/2), and measures in units of the width.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import brentq
from scipy.special import ellipj, ellipk

from . import loewner
from .errors import ExtractionError, NonSimpleCurve

BETA_C = 0.5 * math.log(1 + math.sqrt(2))


@dataclass(frozen=True)
class LatticeSpec:
    width: int = 64
    height: int = 64
    beta: float = BETA_C
    sweeps: int = 50
    thermalization: int = 2000
    seed: int = 0
    n_chains: int = 1
    n_samples: int = 1

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("width and height must be at least 16")
        if self.width % 2:
            raise ValueError("width must be even")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def dobrushin_frame(W, H, n=1):
    s = np.ones((n, W + 2, H + 2), dtype=np.int8)
    s[:, W + 1, :] = -1
    s[:, W // 2 + 1:W + 1, 0] = -1
    s[:, W // 2 + 1:W + 1, H + 1] = -1
    return s


def ground_state(W, H, n=1):
    s = dobrushin_frame(W, H, n)
    s[:, 1:W // 2 + 1, 1:H + 1] = 1
    s[:, W // 2 + 1:W + 1, 1:H + 1] = -1
    return s


def _sweep(s, beta, rng, masks):
    """One heat-bath sweep of all chains, checkerboard order."""
    for m in masks:
        nb = (s[:, :-2, 1:-1].astype(np.int16) + s[:, 2:, 1:-1] + s[:, 1:-1, :-2] + s[:, 1:-1, 2:])
        p = 1.0 / (1.0 + np.exp(-2.0 * beta * nb))
        u = rng.random(p.shape)
        new = np.where(u < p, 1, -1).astype(np.int8)
        inner = s[:, 1:-1, 1:-1]
        inner[:, m] = new[:, m]


def simulate(spec):
    """Heat-bath (single-site Glauber) dynamics from the ground state.

    Returns an int8 array (n_chains * n_samples, W + 2, H + 2) of frames
    taken every ``sweeps`` sweeps after ``thermalization`` sweeps; sample
    order is chain-major.
    """
    W, H = spec.width, spec.height
    rng = np.random.Generator(np.random.Philox(spec.seed))
    s = ground_state(W, H, spec.n_chains)
    X, Y = np.meshgrid(np.arange(W), np.arange(H), indexing="ij")
    masks = [((X + Y) % 2 == 0), ((X + Y) % 2 == 1)]
    for _ in range(spec.thermalization):
        _sweep(s, spec.beta, rng, masks)
    out = np.empty((spec.n_chains, spec.n_samples, W + 2, H + 2), dtype=np.int8)
    for k in range(spec.n_samples):
        if k:
            for _ in range(spec.sweeps):
                _sweep(s, spec.beta, rng, masks)
        out[:, k] = s
    return out.reshape(-1, W + 2, H + 2)


# ---------------------------------------------------------------- interface

@njit(cache=True)
def _walk(s, max_steps):
    W = s.shape[0] - 2
    H = s.shape[1] - 2
    cx = W // 2 + 1
    cy = 1
    dx, dy = 0, 1
    xs = np.empty(max_steps + 2, dtype=np.int64)
    ys = np.empty(max_steps + 2, dtype=np.int64)
    xs[0] = cx
    ys[0] = 0
    xs[1] = cx
    ys[1] = 1
    n = 2
    while cy < H + 1:
        if n >= max_steps + 2:
            return xs[:n], ys[:n], False
        # sites ahead-left and ahead-right of corner (cx, cy) for heading (dx, dy)
        # the site across the corner in direction (a, b) has index
        # (cx + (a - 1) // 2, cy + (b - 1) // 2) with a, b in {-1, 1}
        lx, ly = dx - dy, dy + dx     # ahead-left diagonal
        rx, ry = dx + dy, dy - dx     # ahead-right diagonal
        al = s[cx + (lx - 1) // 2, cy + (ly - 1) // 2]
        ar = s[cx + (rx - 1) // 2, cy + (ry - 1) // 2]
        if al < 0:
            dx, dy = -dy, dx
        elif ar < 0:
            pass
        else:
            dx, dy = dy, -dx
        cx += dx
        cy += dy
        xs[n] = cx
        ys[n] = cy
        n += 1
    return xs[:n], ys[:n], True


@dataclass
class InterfacePath:
    corners: np.ndarray   # complex corner coordinates, first = (W/2+1, 0)
    width: int
    height: int

    @property
    def n_edges(self):
        return len(self.corners) - 1

    def half_plane(self, geometry="conformal"):
        """Edge midpoints carried into the upper half-plane, from 0.

        ``geometry="affine"`` only translates and divides by the width;
        ``"conformal"`` applies the elliptic map of the box onto H that fixes
        the start and sends the top-centre to infinity.


        The real line runs through the centres of the bottom frame sites, so
        the first edge starts on it and every later midpoint lies at least
        half a spacing above.  Midpoints of distinct edges never coincide,
        so saddle revisits of a corner do not create double points.
        """
        c = self.corners - (self.width // 2 + 1 + 0.5j)
        mid = 0.5 * (c[1:] + c[:-1])
        if geometry == "affine":
            return mid / self.width
        if geometry != "conformal":
            raise ValueError("geometry must be 'affine' or 'conformal'")
        return box_to_half_plane(mid, self.width + 1, self.height + 1)

    def edge_self_avoiding(self):
        e = set()
        for a, b in zip(self.corners[:-1], self.corners[1:]):
            key = (min((a.real, a.imag), (b.real, b.imag)), max((a.real, a.imag), (b.real, b.imag)))
            if key in e:
                return False
            e.add(key)
        return True


def extract_interface(config):
    s = np.ascontiguousarray(config, dtype=np.int8)
    W, H = s.shape[0] - 2, s.shape[1] - 2
    xs, ys, ok = _walk(s, 4 * W * H)
    if not ok:
        raise ExtractionError("interface walk exceeded 4 W H steps")
    return InterfacePath(xs + 1j * ys, W, H)


def _modulus_for(aspect):
    """m = k**2 with K'(m) / (2 K(m)) = aspect."""
    f = lambda m: ellipk(1 - m) / (2 * ellipk(m)) - aspect
    return brentq(f, 1e-300, 1 - 1e-16)


def sn_complex(u, m):
    """Jacobi sn at complex u by the addition formula with real arguments."""
    x, y = np.real(u), np.imag(u)
    s, c, d, _ = ellipj(x, m)
    s1, c1, d1, _ = ellipj(y, 1 - m)
    den = c1 ** 2 + m * s ** 2 * s1 ** 2
    return (s * d1 + 1j * c * d * s1 * c1) / den


def box_to_half_plane(z, width, height):
    """Conformal map of the box |Re z| < width/2, 0 < Im z < height onto H
    with 0 -> 0 and the top centre -> infinity."""
    m = _modulus_for(height / width)
    K, Kp = ellipk(m), ellipk(1 - m)
    u = np.asarray(z).real * (2 * K / width) + 1j * np.asarray(z).imag * (Kp / height)
    return sn_complex(u, m)


# ---------------------------------------------------------------- estimator

def _driving_of(path_pts):
    """Unzip up to the first point that reaches the real line, or that the
    unzipping sends there."""
    z = np.asarray(path_pts, dtype=complex)
    bad = np.flatnonzero(z[1:].imag <= 1e-12)
    if bad.size:
        z = z[:bad[0] + 1]
    while z.size >= 3:
        try:
            return loewner.unzip(z).driving
        except NonSimpleCurve as e:
            z = z[:e.index]
    return None


def _half_height_index(p):
    """Index of the first vertex at half the height: of the box for a
    lattice interface, of the curve itself for a half-plane polyline."""
    if isinstance(p, InterfacePath):
        c = p.corners
        y = 0.5 * (c[1:].imag + c[:-1].imag) - 0.5
        return int(np.flatnonzero(y >= (p.height + 1) / 2)[0])
    y = np.asarray(p).imag
    return int(np.flatnonzero(y >= y.max() / 2)[0])


@dataclass
class Diffusivity:
    kappa: float
    ci: tuple
    r2: float
    kappa_other: float
    method: str
    window: float
    n_paths: int
    mean_drift_z: float
    lags: np.ndarray
    variogram: np.ndarray

    def to_json(self):
        return {"kappa_hat": self.kappa, "ci": list(self.ci), "r2": self.r2,
                "kappa_other": self.kappa_other, "method": self.method, "window": self.window,
                "n_paths": self.n_paths, "mean_drift_z": self.mean_drift_z}


def _grid_paths(drivings, T, m):
    """Driving values on m + 1 uniform times in [0, T]; nan past the end."""
    tg = np.linspace(0, T, m + 1)
    G = np.full((len(drivings), m + 1), np.nan)
    for i, d in enumerate(drivings):
        t = d.times
        w = np.concatenate([[0.0], d.values])
        ok = tg <= t[-1]
        G[i, ok] = np.interp(tg[ok], t, w)
    return tg, G


def _ols(x, y):
    m = np.isfinite(y)
    x, y = x[m], y[m]
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1 - np.sum((y - fit) ** 2) / ss if ss > 0 else 1.0
    return float(coef[1]), float(r2)


def _variogram(G, n_lags):
    V = np.empty(n_lags)
    for k in range(1, n_lags + 1):
        d = G[:, k:] - G[:, :-k]
        V[k - 1] = np.nanmean(d * d)
    return V


def _slope(G, tg, lags, method):
    if method == "marginal":
        return _ols(tg[1:], np.nanvar(G[:, 1:], axis=0))
    return _ols(lags, _variogram(G, lags.size))


def diffusivity(paths, quartile=0.25, m=200, n_boot=200, seed=0, min_paths=100,
                method="marginal", geometry="conformal"):
    """kappa from the linear growth of the driving variance.

    ``paths`` are half-plane polylines from 0; InterfacePath objects are
    carried over with ``geometry``.  Each is unzipped and the window [0, T]
    has T the first quartile, over paths, of the capacity time at which the
    path first reaches half height (of the box for lattice interfaces).  ``method="marginal"`` regresses Var[w(t)] on t,
    ``"variogram"`` regresses the mean squared increment on the lag, pooled
    over start times.  The interval is a percentile bootstrap over paths;
    the other estimate is reported alongside.
    """
    if method not in ("marginal", "variogram"):
        raise ValueError("method must be 'marginal' or 'variogram'")
    pts = [p.half_plane(geometry) if isinstance(p, InterfacePath) else np.asarray(p)
           for p in paths]
    if len(pts) < min_paths:
        raise ValueError(f"need at least {min_paths} paths")
    drv, ref = [], []
    for p, z in zip(paths, pts):
        d = _driving_of(z)
        if d is None:
            continue
        drv.append(d)
        ref.append(d.times[min(_half_height_index(p), len(d))])
    T = float(np.quantile(ref, quartile))
    tg, G = _grid_paths(drv, T, m)
    lags = tg[1:m // 2 + 1]
    V = _variogram(G, m // 2)
    kappa, r2 = _slope(G, tg, lags, method)
    other = _slope(G, tg, lags, "variogram" if method == "marginal" else "marginal")[0]
    # symmetry: mean of w at the window end in standard errors
    wT = G[:, -1][np.isfinite(G[:, -1])]
    sd = wT.std(ddof=1) if wT.size > 2 else 0.0
    z = float(wT.mean() / (sd / math.sqrt(wT.size))) if sd > 0 else float("nan")
    rng = np.random.Generator(np.random.Philox(seed))
    boot = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, G.shape[0], G.shape[0])
        boot[b] = _slope(G[idx], tg, lags, method)[0]
    ci = (float(np.percentile(boot, 2.5)), float(np.percentile(boot, 97.5)))
    return Diffusivity(kappa, ci, r2, other, method, T, len(drv), z, lags, V)


def write_interface_csv(path, ip, geometry="conformal"):
    """Corners and, from the first edge midpoint on, half-plane points."""
    hp = ip.half_plane(geometry)
    with open(path, "w") as fh:
        fh.write("index,cx,cy,re,im\n")
        for i, c in enumerate(ip.corners):
            z = hp[i - 1] if 1 <= i <= hp.size else complex("nan")
            fh.write(f"{i},{int(c.real)},{int(c.imag)},{z.real!r},{z.imag!r}\n")
