"""Coordinates of simple loops winding once around 0.

A loop splits the sphere into D_L (bounded, containing 0) and D_R
(containing infinity).  The left map phi_L: D -> D_L and the right map
phi_R: D -> 1/D_R, both fixing 0 with positive derivative, give

    phi_L(t) = A (t + a_1 t**2 + a_2 t**3 + ...),
    phi_R(t) = B (t + b_1 t**2 + ...).

Polylines go through a closed-curve zipper: the first edge is opened by
i sqrt((z - p1)/(z - p0)), the remaining vertices are unzipped by the
chordal geodesic steps, and a final squaring separates the two sides into
opposite half-planes.  Every step has a closed-form inverse, so phi is
evaluated on |t| = 0.5 and its Taylor coefficients come from an FFT.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .cgeom import Jet3, _sqrt_up, schwarzian
from .errors import GeometryError, NotUnivalent
from .zipper import zip_build

K_DEFAULT = 8


# ---------------------------------------------------------------- loops

@dataclass(frozen=True)
class CircleLoop:
    r: float
    center: complex = 0j

    def points(self, n=2048):
        th = 2 * np.pi * np.arange(n) / n
        return self.center + self.r * np.exp(1j * th)

    def scaled(self, s):
        return CircleLoop(self.r * abs(s), self.center * s)


@dataclass(frozen=True)
class AnalyticImage:
    """Loop G(unit circle) for a closed-form univalent G.

    ``exterior=False``: G maps the disk onto D_L with G(0) = 0.
    ``exterior=True``:  G maps |zeta| > 1 onto D_R with G(inf) = inf.
    """
    G: object
    exterior: bool = False

    def points(self, n=2048):
        th = 2 * np.pi * np.arange(n) / n
        return self.G(np.exp(1j * th))

    def closed_form(self, side):
        if side == "left" and not self.exterior:
            return self.G
        if side == "right" and self.exterior:
            return lambda t: 1 / self.G(1 / t)
        return None

    def scaled(self, s):
        return AnalyticImage(lambda z, G=self.G: s * G(z), self.exterior)


class PolylineLoop:
    def __init__(self, pts):
        pts = np.asarray(pts, dtype=complex)
        if abs(pts[0] - pts[-1]) < 1e-15:
            pts = pts[:-1]
        if pts.size < 8:
            raise GeometryError("need at least eight vertices")
        self.pts = pts

    def points(self, n=None):
        return self.pts

    def scaled(self, s):
        return PolylineLoop(self.pts * s)


def joukowski_ellipse(a, b):
    """Ellipse with semi-axes a >= b as the image of |zeta| > 1 under
    R (zeta + m / zeta)."""
    R = (a + b) / 2
    m = (a - b) / (a + b)
    return AnalyticImage(lambda z: R * (z + m / z), exterior=True)


def winding_number(pts, z0=0j):
    d = np.diff(np.unwrap(np.angle(np.append(pts, pts[0]) - z0)))
    return int(round(d.sum() / (2 * np.pi)))


def _check_loop(pts):
    import shapely
    ring = shapely.LinearRing(np.c_[pts.real, pts.imag])
    if not ring.is_simple:
        raise GeometryError("loop is not simple")
    w = winding_number(pts)
    if abs(w) != 1:
        raise GeometryError(f"loop winds {w} times around 0")
    return w


# ---------------------------------------------------------------- zipper

@njit(cache=True)
def _loop_forward(P, z, ia, bb, ns):
    """Image of z under the closed-curve zipper, before the disk Moebius."""
    w = (z - P[1]) / (z - P[0])
    zeta = 1j * np.sqrt(w)
    for s in range(ns):
        T = zeta / (1.0 - zeta * ia[s])
        zeta = _sqrt_up(T * T + bb[s] * bb[s], T)
    return zeta * zeta


@njit(cache=True)
def _loop_inverse(P, xi, flip, ia, bb, ns):
    out = np.empty(xi.shape[0], dtype=np.complex128)
    for k in range(xi.shape[0]):
        zeta = np.sqrt(xi[k])
        if flip:
            zeta = -zeta
        for s in range(ns - 1, -1, -1):
            b2 = bb[s] * bb[s]
            T = np.sqrt(zeta * zeta - b2)
            if T.imag < 0.0:
                T = -T
            zeta = T / (1.0 + T * ia[s])
        w = -zeta * zeta
        out[k] = (P[1] - w * P[0]) / (1.0 - w)
    return out


@njit(cache=True)
def _open_first_edge(P):
    m = P.shape[0]
    Q = np.empty(m - 1, dtype=np.complex128)
    Q[0] = 0j
    for j in range(2, m):
        w = (P[j] - P[1]) / (P[j] - P[0])
        Q[j - 1] = 1j * np.sqrt(w)
    return Q


class LoopZipper:
    """Riemann map of the side of a closed polyline containing ``z0``."""

    def __init__(self, pts, z0=0j):
        P = np.ascontiguousarray(pts, dtype=np.complex128)
        Q = _open_first_edge(P)
        m = Q.shape[0]
        self.ia = np.empty(m)
        self.bb = np.empty(m)
        work = np.empty(m, dtype=np.complex128)
        self.ns = zip_build(Q, m, work, self.ia, self.bb)
        if self.ns < m - 1:
            raise GeometryError("zipper stalled: vertex mapped onto the boundary")
        self.P = P
        self.xi0 = complex(_loop_forward(P, complex(z0), self.ia, self.bb, self.ns))
        if abs(self.xi0.imag) < 1e-14:
            raise GeometryError("base point on the curve")
        self.flip = self.xi0.imag < 0

    def inverse(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=np.complex128))
        x0 = self.xi0
        xi = (x0 - np.conj(x0) * t) / (1 - t)
        return _loop_inverse(self.P, xi, self.flip, self.ia, self.bb, self.ns)


def _resample(pts, n):
    """Equispaced resampling in arc length of a closed polyline."""
    z = np.append(pts, pts[0])
    seg = np.abs(np.diff(z))
    s = np.concatenate([[0], np.cumsum(seg)])
    u = np.linspace(0, s[-1], n, endpoint=False)
    return np.interp(u, s, z.real) + 1j * np.interp(u, s, z.imag)


# ---------------------------------------------------------------- disk maps

@dataclass
class DiskMap:
    side: str
    scale: float          # A or B
    coeffs: np.ndarray    # a_1..a_K (normalised)

    def raw(self):
        """Taylor coefficients c_1..c_{K+1} of phi."""
        return self.scale * np.concatenate([[1.0], self.coeffs])

    def schwarzian0(self):
        a1, a2 = self.coeffs[0], self.coeffs[1]
        return 6 * (a2 - a1 * a1)


def _coefficients(phi_vals, radius, K):
    n = phi_vals.size
    c = np.fft.fft(phi_vals) / n
    return np.array([c[j] / radius ** j for j in range(K + 2)])


def _normalise(c, side, K, check=True):
    c1 = c[1]
    A = abs(c1)
    rot = A / c1  # e^{i alpha} with c1 e^{i alpha} = |c1|
    a = np.array([c[k + 1] * rot ** (k + 1) / A for k in range(1, K + 1)])
    if check:
        bound = np.arange(2, K + 2)
        if np.any(np.abs(a) > 1.1 * bound):
            raise NotUnivalent("Taylor coefficients violate the Bieberbach bound")
    return DiskMap(side, float(A), a)


def disk_map(loop, side="left", K=K_DEFAULT, radius=0.5, n_fft=256, n_pts=4096):
    """Normalised Riemann map of the left or the inverted right side."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    t = radius * np.exp(2j * np.pi * np.arange(n_fft) / n_fft)
    if isinstance(loop, CircleLoop) and loop.center == 0:
        r = loop.r if side == "left" else 1 / loop.r
        return DiskMap(side, float(r), np.zeros(K, dtype=complex))
    cf = loop.closed_form(side) if isinstance(loop, AnalyticImage) else None
    if cf is not None:
        vals = cf(t)
    else:
        pts = loop.points(n_pts) if not isinstance(loop, PolylineLoop) else loop.pts
        pts = np.asarray(pts, dtype=complex)
        _check_loop(pts)
        if side == "right":
            pts = 1 / pts
        if isinstance(loop, PolylineLoop):
            pts = _resample(pts, max(n_pts, pts.size))
        vals = LoopZipper(pts).inverse(t)
    return _normalise(_coefficients(vals, radius, K), side, K)


@dataclass
class LoopCoords:
    A: float
    a: np.ndarray
    B: float
    b: np.ndarray

    @property
    def K(self):
        return len(self.a)

    @property
    def AB(self):
        return self.A * self.B

    def de_branges_ok(self):
        k = np.arange(1, self.K + 1)
        return bool(np.all(np.abs(self.a) <= k + 1 + 1e-9) and np.all(np.abs(self.b) <= k + 1 + 1e-9))

    def to_json(self):
        return {"A": self.A, "B": self.B, "AB": self.AB,
                "a": [[float(z.real), float(z.imag)] for z in self.a],
                "b": [[float(z.real), float(z.imag)] for z in self.b],
                "de_branges": self.de_branges_ok()}


def coords(loop, K=K_DEFAULT, **kw):
    L = disk_map(loop, "left", K, **kw)
    R = disk_map(loop, "right", K, **kw)
    return LoopCoords(L.scale, L.coeffs, R.scale, R.coeffs)


def neretin_P2(loop, K=K_DEFAULT, **kw):
    """(P_-2, P'_-2, P_2, P'_2) = Re, Im of S(0)/12 for phi_L and phi_R."""
    if K < 3:
        raise ValueError("need order at least 3")
    SL = disk_map(loop, "left", K, **kw).schwarzian0()
    SR = disk_map(loop, "right", K, **kw).schwarzian0()
    return (float(SL.real) / 12, float(SL.imag) / 12, float(SR.real) / 12, float(SR.imag) / 12)


def cubic_loop(A, beta):
    """Loop phi(unit circle) with phi(t) = A (t + beta t**3)."""
    if abs(beta) >= 1 / 3:
        raise NotUnivalent("t + beta t^3 is univalent on the disk only for |beta| <= 1/3")
    return AnalyticImage(lambda t: A * (t + beta * t ** 3), exterior=False)


def jet_schwarzian(G, z=0j, r=0.05, n=64):
    """Schwarzian at z of a closed-form map from its Cauchy jet."""
    th = 2 * np.pi * np.arange(n) / n
    c = np.fft.fft(G(z + r * np.exp(1j * th))) / n
    a = [c[j] / r ** j for j in range(4)]
    return schwarzian(Jet3(a[0], a[1], 2 * a[2], 6 * a[3]))
