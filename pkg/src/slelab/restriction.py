"""Restriction martingale for chordal SLE and a reference hull A.

For a hull A attached to the real line away from 0, Phi maps H minus A onto
H with Phi(0) = 0 and Phi(z) = z + C + O(1/z).  Along an SLE path avoiding A,
h_t = g_{Phi(K_t)} o Phi o g_t^{-1} is defined near the driving point w_t and

    r_t = h_t'(w_t)**h * exp(-(c/6) int_0^t S h_s(w_s) ds)

is a martingale, killed (set to zero) when the path hits A.  With c = 0 the
avoidance probability is Phi'(0)**(5/8).

Monte Carlo does not unzip the path at each frame.  It tracks the image of
the boundary of A under g_t as a polygon (points inserted where the polygon
gets coarse) and maps that polygon out with the geodesic zipper, which gives
h_t up to an additive constant and hence H and the Schwarzian at w_t.
"""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from . import loewner
from .cgeom import Jet3, SlitElement, SlitRun, _sqrt_up, schwarzian, slit_inverse, sqrt_up
from .errors import HullHit, InvalidHull
from .rng import normal_at
from .zipper import HullMap, zip_frame


# ---------------------------------------------------------------- hulls

@dataclass(frozen=True)
class HalfDisk:
    x0: float
    rad: float

    def __post_init__(self):
        if self.x0 == 0 or not 0 <= self.rad < abs(self.x0):
            raise InvalidHull(f"half-disk ({self.x0}, {self.rad}) must avoid 0")

    @property
    def scale(self):
        return self.rad

    def mirrored(self):
        return HalfDisk(-self.x0, self.rad)

    def boundary(self, s):
        """Arc from x0 - rad (s = 0) to x0 + rad (s = 1)."""
        s = np.asarray(s, dtype=float)
        z = self.x0 + self.rad * np.exp(1j * np.pi * (1.0 - s))
        z = np.where(s == 0, self.x0 - self.rad + 0j, z)
        return np.where(s == 1, self.x0 + self.rad + 0j, z)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return (np.abs(z - self.x0) <= self.rad) & (z.imag >= 0)


@dataclass(frozen=True)
class VerticalSlit:
    x0: float
    height: float

    def __post_init__(self):
        if self.x0 == 0 or not self.height >= 0:
            raise InvalidHull(f"slit ({self.x0}, {self.height}) must avoid 0")

    @property
    def scale(self):
        return self.height

    def mirrored(self):
        return VerticalSlit(-self.x0, self.height)

    def boundary(self, s):
        """Base (s = 0) to tip (s = 1)."""
        return self.x0 + 1j * self.height * np.asarray(s, dtype=float)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.real == self.x0) & (z.imag <= self.height)

    def crossed_by(self, pts):
        """Does the polyline pts cross the slit segment?"""
        a, b = pts[:-1], pts[1:]
        side = np.sign(a.real - self.x0) * np.sign(b.real - self.x0)
        hit = side <= 0
        if not hit.any():
            return False
        a, b = a[hit], b[hit]
        dx = b.real - a.real
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(dx != 0, (self.x0 - a.real) / dx, 0.0)
        y = a.imag + lam * (b.imag - a.imag)
        return bool(np.any(y <= self.height))


def parse_hull(text):
    """'half-disk:2,1' or 'slit:2,0.5'."""
    kind, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")]
    if kind in ("half-disk", "halfdisk", "disk"):
        return HalfDisk(*vals)
    if kind in ("slit", "vertical-slit"):
        return VerticalSlit(*vals)
    raise InvalidHull(f"unknown hull kind {kind!r}")


def hull_hits(hull, pts):
    pts = np.asarray(pts, dtype=complex)
    if isinstance(hull, HalfDisk):
        if hull.contains(pts[1:]).any():
            return True
        # segment passing through the disk between samples
        a, b = pts[:-1], pts[1:]
        d = b - a
        n2 = np.maximum((d * d.conjugate()).real, 1e-300)
        lam = np.clip(((hull.x0 - a) * d.conjugate()).real / n2, 0, 1)
        return bool(np.any(np.abs(a + lam * d - hull.x0) <= hull.rad))
    return hull.crossed_by(pts)


# ---------------------------------------------------------------- maps

@dataclass(frozen=True, eq=False)
class AlphaMap:
    """Phi: H minus A -> H with Phi(0) = 0, Phi(z) = z + const + O(1/z);
    alpha = Phi^{-1}."""
    hull: object
    const: float
    d_alpha_0: float
    q_tan: float
    jet0: Jet3

    def phi(self, z):
        z = np.asarray(z, dtype=complex)
        A = self.hull
        if isinstance(A, HalfDisk):
            return z + A.rad ** 2 / (z - A.x0) + A.rad ** 2 / A.x0
        return A.x0 + sqrt_up((z - A.x0) ** 2 + A.height ** 2, z - A.x0) + self.const

    def alpha(self, u):
        u = np.asarray(u, dtype=complex)
        A = self.hull
        if isinstance(A, HalfDisk):
            # v + r^2 / v = s with v = z - x0, root outside the disk
            s = u - self.const - A.x0
            v = 0.5 * (s + sqrt_up(s * s - 4 * A.rad ** 2, s))
            return A.x0 + v
        return slit_inverse(u - self.const, SlitElement(A.x0, A.height ** 2 / 4))


def mapping_out(hull):
    """Closed-form mapping-out function of a reference hull."""
    if isinstance(hull, HalfDisk):
        x0, r = float(hull.x0), float(hull.rad)
        const = r * r / x0
        u = -x0
        jet = Jet3(0j, 1 - r * r / u ** 2, 2 * r * r / u ** 3, -6 * r * r / u ** 4)
    elif isinstance(hull, VerticalSlit):
        x0, l = float(hull.x0), float(hull.height)
        R = math.copysign(math.hypot(x0, l), -x0)  # branch value at z = 0
        const = -(x0 + R)
        # F(z) = x0 + sqrt((z - x0)^2 + l^2), derivatives at z = 0
        u = -x0
        d1 = u / R
        d2 = l * l / R ** 3
        d3 = -3 * l * l * u / R ** 5
        jet = Jet3(0j, complex(d1), complex(d2), complex(d3))
    else:
        raise InvalidHull(f"unsupported hull {hull!r}")
    dphi = jet.d1.real
    return AlphaMap(hull, const, 1 / dphi, 1 / dphi, jet)


# ---------------------------------------------------------------- frames

@dataclass(frozen=True)
class RestrictionFrame:
    t: float
    h_jet_at_w: Jet3
    H: float
    S: float


@dataclass
class MartingaleSample:
    path_id: int
    checkpoints: list = field(default_factory=list)  # (t, alive, H, schwarz_integral, r)


def initial_frame(alpha):
    """t = 0: h_0 = Phi, jet in closed form."""
    j = alpha.jet0
    return RestrictionFrame(0.0, j, float(j.d1.real), float(schwarzian(j).real))


def _image_polygon(run, hull, w, m0=64, m_max=4096, lam=0.5):
    s = np.linspace(0.0, 1.0, m0)
    P = run.apply(hull.boundary(s)) if run is not None else hull.boundary(s)
    while P.shape[0] < m_max:
        mid = 0.5 * (P[1:] + P[:-1])
        coarse = np.abs(P[1:] - P[:-1]) > lam * np.abs(mid - w)
        if not coarse.any():
            break
        sn = 0.5 * (s[1:] + s[:-1])[coarse]
        zn = hull.boundary(sn)
        Pn = run.apply(zn) if run is not None else zn
        s = np.concatenate([s, sn])
        P = np.concatenate([P, Pn])
        order = np.argsort(s, kind="stable")
        s, P = s[order], P[order]
    P[0] = P[0].real
    if isinstance(hull, HalfDisk):
        P[-1] = P[-1].real
    return P


def h_frame(trace_prefix, alpha, w_t=None, m0=64, m_max=4096):
    """Jet of h_t at the driving point for the curve ``trace_prefix``.

    g_t comes from unzipping the prefix; the boundary of A is pushed
    through g_t and mapped out by the zipper.  h_t is that map plus the
    constant of Phi at infinity.
    """
    pts = np.asarray(trace_prefix, dtype=complex)
    if hull_hits(alpha.hull, pts):
        raise HullHit("trace meets the hull")
    run = None
    w = 0.0
    t = 0.0
    if pts.shape[0] > 1:
        d = loewner.unzip(pts).driving
        run = SlitRun(d.values, d.steps)
        w = float(d.values[-1])
        t = d.horizon
    if w_t is not None:
        w = float(w_t)
    P = _image_polygon(run, alpha.hull, w, m0, m_max)
    jet = HullMap(P).jet(w)
    jet = Jet3(jet.f + alpha.const, jet.d1, jet.d2, jet.d3)
    if abs(jet.d1.imag) > 1e-8 * max(1.0, abs(jet.d1)):
        raise HullHit("derivative at the driving point is not real")
    return RestrictionFrame(t, jet, float(jet.d1.real), float(schwarzian(jet).real))


def h_frame_composed(trace_prefix, alpha, radius, n=64):
    """Second route: h = g~ o Phi o g^{-1} with both g's from unzipping,
    derivatives at w by a Cauchy integral on a circle around w (the lower
    half filled in by reflection, h being real near w)."""
    pts = np.asarray(trace_prefix, dtype=complex)
    d = loewner.unzip(pts).driving
    g = SlitRun(d.values, d.steps)
    d2 = loewner.unzip(alpha.phi(pts)).driving
    gt = SlitRun(d2.values, d2.steps)
    w = float(d.values[-1])
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    z = w + radius * np.exp(1j * th)
    up = z.imag > 0
    vals = np.empty(n, dtype=complex)
    hz = gt.apply(alpha.phi(g.inverse(z[up])))
    vals[up] = hz
    vals[~up] = np.conj(gt.apply(alpha.phi(g.inverse(np.conj(z[~up])))))
    # vals_k = sum_j a_j rho^j e^{i j th_k}, th_k offset by half a node
    c = np.fft.fft(vals) / n
    a = [c[j] * np.exp(-1j * np.pi * j / n) / radius ** j for j in range(4)]
    jet = Jet3(a[0], a[1], 2 * a[2], 6 * a[3])
    return RestrictionFrame(d.horizon, jet, float(jet.d1.real), float(schwarzian(jet).real))


def martingale_value(frames, params):
    """r_t = H_t**h * exp(-(c/6) int S dt), trapezoid over the frames."""
    if not frames:
        raise ValueError("no frames")
    t = np.array([f.t for f in frames])
    S = np.array([f.S for f in frames])
    integral = float(np.sum(0.5 * (S[1:] + S[:-1]) * np.diff(t))) if len(frames) > 1 else 0.0
    return frames[-1].H ** params.h * math.exp(-params.c / 6 * integral)


# ---------------------------------------------------------------- Monte Carlo kernel

_ALIVE, _POLYGON, _HMIN, _BASE, _BUDGET = 0, 1, 2, 3, 4


@njit(cache=True, inline="always")
def _boundary_point(kind, x0, rr, s):
    if kind == 0:
        if s == 0.0:
            return complex(x0 - rr)
        if s == 1.0:
            return complex(x0 + rr)
        return x0 + rr * np.exp(1j * np.pi * (1.0 - s))
    return x0 + 1j * rr * s


@njit(cache=True, inline="always")
def _slit_crosses(P, m, W, top):
    for j in range(m - 1):
        a = P[j]
        b = P[j + 1]
        lo = min(a.real, b.real)
        hi = max(a.real, b.real)
        if lo <= W <= hi and hi > lo:
            y = a.imag + (b.imag - a.imag) * (W - a.real) / (b.real - a.real)
            if y <= top:
                return True
    return False


@njit(cache=True)
def _run_path(seed, pid, sgn, kappa, h, cc, kind, x0, rr, m0, eps, frame_every,
              cps, stop_ratio, H_min, max_steps, m_max, lam, out):
    """One path; x0 > 0 (callers mirror).  Fills out[ncp, 4] with
    (alive, H, schwarz_integral, r) and returns (reason, steps, points)."""
    spar = np.empty(m_max)
    P = np.empty(m_max, dtype=np.complex128)
    m = m0
    for j in range(m):
        spar[j] = j / (m0 - 1.0)
        P[j] = _boundary_point(kind, x0, rr, spar[j])
    Q = np.empty(m_max, dtype=np.complex128)
    ia = np.empty(m_max)
    bb = np.empty(m_max)
    hw = np.empty(max_steps)
    hdt = np.empty(max_steps)
    ncp = cps.shape[0]
    t = 0.0
    W = 0.0
    k = 0
    H, S, Hi = zip_frame(P, m, W, Q, ia, bb)
    Sint = 0.0
    tf = 0.0
    Sf = S
    ci = 0
    stopped = False
    reason = _ALIVE
    nstep = 0
    while ci < ncp:
        at_cp = False
        if stopped:
            dt = cps[ci] - t
            at_cp = True
        else:
            d = 1e300
            for j in range(m):
                d = min(d, abs(P[j] - W))
            dt = eps * eps * d * d
            if t + dt >= cps[ci]:
                dt = cps[ci] - t
                at_cp = True
        if not stopped and dt > 0.0:
            if k + 2 >= max_steps:
                reason = _BUDGET
                break
            # symmetric splitting: half slit, Brownian kick, half slit
            d4 = 2.0 * dt
            top = 2.0 * math.sqrt(0.5 * dt)
            if _slit_crosses(P, m, W, top):
                reason = _POLYGON
                break
            for j in range(m):
                u = P[j] - W
                P[j] = W + _sqrt_up(u * u + d4, u)
            hw[k] = W
            hdt[k] = 0.5 * dt
            k += 1
            nstep += 1
            W += sgn * math.sqrt(kappa * dt) * normal_at(seed, pid, np.uint64(nstep))
            if W >= P[0].real:
                reason = _BASE
                break
            if _slit_crosses(P, m, W, top):
                reason = _POLYGON
                break
            for j in range(m):
                u = P[j] - W
                P[j] = W + _sqrt_up(u * u + d4, u)
            hw[k] = W
            hdt[k] = 0.5 * dt
            k += 1
            t += dt
            # insert boundary points where the polygon is coarse
            j = 0
            while j < m - 1 and m < m_max:
                a = P[j]
                b = P[j + 1]
                if abs(b - a) > lam * abs(0.5 * (a + b) - W):
                    sn = 0.5 * (spar[j] + spar[j + 1])
                    z = _boundary_point(kind, x0, rr, sn)
                    for s in range(k):
                        u = z - hw[s]
                        z = hw[s] + _sqrt_up(u * u + 4.0 * hdt[s], u)
                    for i in range(m, j + 1, -1):
                        P[i] = P[i - 1]
                        spar[i] = spar[i - 1]
                    P[j + 1] = z
                    spar[j + 1] = sn
                    m += 1
                else:
                    j += 1
            if nstep % frame_every == 0 or at_cp:
                H, S, Hi = zip_frame(P, m, W, Q, ia, bb)
                Sint += 0.5 * (S + Sf) * (t - tf)
                tf = t
                Sf = S
                if not H >= H_min:
                    reason = _HMIN
                    break
                dmin = 1e300
                xmin = 1e300
                xmax = -1e300
                ymax = 0.0
                for j in range(m):
                    dmin = min(dmin, abs(P[j] - W))
                    xmin = min(xmin, P[j].real)
                    xmax = max(xmax, P[j].real)
                    ymax = max(ymax, P[j].imag)
                if max(xmax - xmin, ymax) < stop_ratio * dmin:
                    stopped = True
        else:
            t += dt
        if at_cp:
            out[ci, 0] = 1.0
            out[ci, 1] = H
            out[ci, 2] = Sint
            out[ci, 3] = H ** h * math.exp(-cc / 6.0 * Sint)
            ci += 1
    for i in range(ci, ncp):
        out[i, 0] = 0.0
        out[i, 1] = np.nan
        out[i, 2] = np.nan
        out[i, 3] = 0.0
    return reason, nstep, m


@njit(cache=True, parallel=True)
def _run_batch(seed, pids, sgn, kappa, h, cc, kind, x0, rr, m0, eps, frame_every,
               cps, stop_ratio, H_min, max_steps, m_max, lam):
    n = pids.shape[0]
    out = np.empty((n, cps.shape[0], 4))
    info = np.empty((n, 3), dtype=np.int64)
    for i in prange(n):
        r, ns, m = _run_path(seed, pids[i], sgn, kappa, h, cc, kind, x0, rr, m0, eps,
                             frame_every, cps, stop_ratio, H_min, max_steps, m_max, lam, out[i])
        info[i, 0] = r
        info[i, 1] = ns
        info[i, 2] = m
    return out, info


@dataclass
class MCConfig:
    """Discretisation of the path simulation.

    Step k has Loewner duration eps**2 d**2 with d the distance from the
    driving point to the image of A, so steps shrink near the hull.
    """
    eps: float = 0.1
    frame_every: int = 1
    H_min: float = 1e-8
    stop_ratio: float = 1e-3
    m0: int = 48
    m_max: int = 512
    lam: float = 0.5
    max_steps: int = 400000


@dataclass
class MartingaleTable:
    checkpoints: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    alive: np.ndarray
    median_H: np.ndarray
    r0: float
    raw: np.ndarray          # (n_paths, n_checkpoints, 4): alive, H, schwarz_integral, r
    reasons: np.ndarray      # per path: 0 alive, 1 polygon, 2 H_min, 3 base, 4 budget
    steps: np.ndarray
    path_ids: np.ndarray

    def rows(self):
        return [dict(t=float(t), mean=float(m), stderr=float(s), alive=float(a), median_H=float(mh))
                for t, m, s, a, mh in zip(self.checkpoints, self.mean, self.stderr,
                                          self.alive, self.median_H)]

    def samples(self):
        out = []
        for i, pid in enumerate(self.path_ids):
            cp = [(float(t), bool(self.raw[i, j, 0] > 0), float(self.raw[i, j, 1]),
                   float(self.raw[i, j, 2]), float(self.raw[i, j, 3]))
                  for j, t in enumerate(self.checkpoints)]
            out.append(MartingaleSample(int(pid), cp))
        return out

    def flat(self, nsig=3.0):
        """Pairwise checkpoint means within nsig combined standard errors."""
        k = len(self.mean)
        for i in range(k):
            for j in range(i + 1, k):
                tol = nsig * math.hypot(self.stderr[i], self.stderr[j])
                if abs(self.mean[i] - self.mean[j]) > tol:
                    return False
        return True


def simulate(params, hull, checkpoints, n_paths, seed, config=None, first_path=0):
    """Run the path kernel; returns a MartingaleTable."""
    cfg = config or MCConfig()
    cps = np.asarray(sorted(float(c) for c in checkpoints))
    if cps[0] <= 0:
        raise ValueError("checkpoints must be positive")
    alpha = mapping_out(hull)
    r0 = alpha.jet0.d1.real ** params.h
    sgn = 1.0
    A = hull
    if A.x0 < 0:
        A = A.mirrored()
        sgn = -1.0
    kind = 0 if isinstance(A, HalfDisk) else 1
    rr = A.rad if kind == 0 else A.height
    pids = np.arange(first_path, first_path + n_paths, dtype=np.uint64)
    if rr == 0:
        raw = np.zeros((n_paths, len(cps), 4))
        raw[:, :, 0] = 1
        raw[:, :, 1] = 1
        raw[:, :, 3] = 1
        info = np.zeros((n_paths, 3), dtype=np.int64)
    else:
        raw, info = _run_batch(np.uint64(seed), pids, sgn, params.kappa, params.h, params.c,
                               kind, float(A.x0), float(rr), cfg.m0, cfg.eps, cfg.frame_every,
                               cps, cfg.stop_ratio, cfg.H_min, cfg.max_steps, cfg.m_max, cfg.lam)
    r = raw[:, :, 3]
    mean = r.mean(axis=0)
    stderr = r.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros(len(cps))
    alive = raw[:, :, 0].mean(axis=0)
    med = np.array([np.median(raw[raw[:, j, 0] > 0, j, 1]) if (raw[:, j, 0] > 0).any() else np.nan
                    for j in range(len(cps))])
    return MartingaleTable(cps, mean, stderr, alive, med, r0, raw, info[:, 0], info[:, 1], pids)


def martingale_mc(params, hull, checkpoints, n_paths, seed, config=None):
    """E[r_t 1_alive] per checkpoint, with median H over surviving paths."""
    return simulate(params, hull, checkpoints, n_paths, seed, config)


@dataclass
class Avoidance:
    p_hat: float
    stderr: float
    regret: float
    mean_r: float
    horizon: float
    table: MartingaleTable


def avoidance_mc(hull, n_paths, seed, horizon=1e9, config=None, params=None):
    """Fraction of paths that avoid A up to the horizon.

    At c = 0, P(hit later | now) = 1 - r_t on surviving paths, so the
    regret (late hits the horizon misses) is alive - E[r 1_alive].
    """
    from .sle import params_from_kappa
    params = params or params_from_kappa(8.0 / 3.0)
    tab = simulate(params, hull, [horizon], n_paths, seed, config)
    a = tab.raw[:, 0, 0]
    p = float(a.mean())
    se = float(a.std(ddof=1) / math.sqrt(n_paths))
    mean_r = float(tab.mean[0])
    return Avoidance(p, se, p - mean_r, mean_r, horizon, tab)


# ---------------------------------------------------------------- flow check

def _h_values(P, const, zs):
    J = HullMap(P).jets(zs)
    J[:, 0] += const
    return J


def flow_derivative_check(state, alpha, z_samples, delta_t, m=1024):
    """Max relative error between (h_{t+d} - h_t)/d at fixed z (constant
    driving x over the extra time d) and
        h'(x)**2 * 2/(h(z) - h(x)) - h'(z) * 2/(z - x).
    """
    z = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    if alpha is None:
        return 0.0
    hull = alpha.hull
    if state is None:
        run, x = None, 0.0
    else:
        run = SlitRun(state.driving.values, state.driving.steps)
        x = float(state.current_drive)
    P0 = _image_polygon(run, hull, x, m0=m, m_max=8 * m)
    P0[0] = P0[0].real
    step = SlitElement(x, delta_t)
    P1 = step.apply(P0)
    P1[0] = P1[0].real
    if isinstance(hull, HalfDisk):
        P1[-1] = P1[-1].real
    pts = np.concatenate([z, [x]])
    J0 = _h_values(P0, alpha.const, pts)
    J1 = _h_values(P1, alpha.const, pts)
    lhs = (J1[:-1, 0] - J0[:-1, 0]) / delta_t
    hz, dz = J0[:-1, 0], J0[:-1, 1]
    hx, Hx = J0[-1, 0], J0[-1, 1]
    rhs = Hx ** 2 * 2 / (hz - hx) - dz * 2 / (z - x)
    return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


def time_alpha(trace_prefix, alpha):
    """Time of the hull alpha(K): unzip the alpha-image of the trace."""
    pts = np.asarray(trace_prefix, dtype=complex)
    if alpha is None:
        return loewner.unzip(pts).driving.horizon
    img = alpha.alpha(pts)
    img[0] = 0
    return loewner.unzip(img).driving.horizon


# ---------------------------------------------------------------- io

def write_martingale_csv(path, table):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["path_id", "t", "alive", "H", "schwarz_integral", "r"])
        for i, pid in enumerate(table.path_ids):
            for j, t in enumerate(table.checkpoints):
                a, H, si, r = table.raw[i, j]
                wr.writerow([int(pid), repr(float(t)), int(a), repr(float(H)),
                             repr(float(si)), repr(float(r))])


def summary_json(table, **extra):
    d = dict(rows=table.rows(), r0=table.r0, flat=table.flat(),
             kill_reasons=np.bincount(table.reasons, minlength=5).tolist())
    d.update(extra)
    return json.dumps(d, indent=2)
