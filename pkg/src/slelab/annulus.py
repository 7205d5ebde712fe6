"""Conformal parameter of doubly connected domains.

The harmonic measure h of the inner boundary (h = 1 inner, h = 0 outer) is
computed on a uniform grid in log-polar coordinates s = log|z - c|, theta
about a centre c inside the inner curve.  Laplace's equation and the
Dirichlet energy are conformally invariant, so the problem is u_ss +
u_thth = 0 between two graphs s = S_in(theta), s = S_out(theta), handled by
Shortley-Weller stencils.

The energy uses E = iint S'(u) |grad u|**2 for any S with S(0) = 0,
S(1) = 1 (Green's identity; u is harmonic).  A smooth S' supported in the
middle of (0, 1) keeps the quadrature away from the boundary cells.
The parameter is t = exp(-2 pi / E).
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import shapely

from .errors import BoundaryProximity, GeometryError


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def radial(self, theta, c):
        # |c + r e - center| = radius, largest root
        e = np.exp(1j * np.asarray(theta))
        d = c - self.center
        b = np.real(np.conj(d) * e)
        disc = b * b - (abs(d) ** 2 - self.radius ** 2)
        if np.any(disc < 0) or abs(d) >= self.radius:
            raise GeometryError("centre outside circle")
        return -b + np.sqrt(disc)

    def points(self, n=2048):
        th = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * th)


@dataclass(frozen=True)
class RadialCurve:
    """r = rfun(theta) about ``origin``; rfun must be 2 pi periodic."""
    origin: complex
    rfun: object

    def radial(self, theta, c):
        if abs(c - self.origin) > 1e-14:
            return Polyline(self.points(8192)).radial(theta, c)
        return self.rfun(np.asarray(theta))

    def points(self, n=2048):
        th = 2 * np.pi * np.arange(n) / n
        return self.origin + self.rfun(th) * np.exp(1j * th)


def bumped_circle(radius, eps=0.05, theta0=0.0, sharp=4.0, origin=0j):
    """Circle with a smooth radial bump of relative height eps."""
    def rfun(th):
        return radius * (1 + eps * np.exp(sharp * (np.cos(th - theta0) - 1)))
    return RadialCurve(origin, rfun)


class Polyline:
    """Closed polyline given by its vertices (last vertex joins the first)."""

    def __init__(self, pts):
        pts = np.asarray(pts, dtype=complex)
        if pts.ndim != 1 or pts.size < 3:
            raise GeometryError("need at least three vertices")
        if abs(pts[0] - pts[-1]) < 1e-15:
            pts = pts[:-1]
        self.pts = pts
        ring = shapely.LinearRing(np.c_[pts.real, pts.imag])
        if not ring.is_simple:
            raise GeometryError("boundary curve intersects itself")

    def radial(self, theta, c):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        a = self.pts - c
        b = np.roll(self.pts, -1) - c
        e = np.exp(1j * theta)[:, None]
        # c + r e = a + s (b - a): solve for (r, s)
        d = (b - a)[None, :]
        det = np.imag(np.conj(e) * d)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.imag(np.conj(e) * (-a[None, :])) / det
            r = np.imag(np.conj(a[None, :]) * d) / (-det)
        ok = (det != 0) & (s >= 0) & (s < 1) & (r > 0)
        cnt = ok.sum(axis=1)
        if np.any(cnt != 1):
            raise GeometryError("curve is not star-shaped about the centre")
        return np.where(ok, r, 0).sum(axis=1)

    def points(self, n=None):
        return self.pts


def read_boundary_csv(path):
    """Closed polyline from (x, y) rows; header optional."""
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                continue
            try:
                rows.append(complex(float(parts[0]), float(parts[1])))
            except ValueError:
                continue
    return Polyline(rows)


def _as_curve(c):
    if isinstance(c, (Circle, RadialCurve, Polyline)):
        return c
    return Polyline(c)


def _ring(curve):
    p = curve.points()
    return shapely.Polygon(np.c_[p.real, p.imag])


@dataclass
class AnnularDomain:
    outer: object
    inner: object
    center: complex = None

    def __post_init__(self):
        self.outer = _as_curve(self.outer)
        self.inner = _as_curve(self.inner)
        po, pi = _ring(self.outer), _ring(self.inner)
        if not (po.is_valid and pi.is_valid):
            raise GeometryError("boundary curve intersects itself")
        if not po.contains(pi) or po.boundary.intersects(pi.boundary):
            raise GeometryError("inner curve is not strictly inside the outer curve")
        if self.center is None:
            c = pi.centroid
            self.center = complex(c.x, c.y)
        if not pi.contains(shapely.Point(self.center.real, self.center.imag)):
            raise GeometryError("centre must lie inside the inner curve")
        # star-shapedness is checked on first use
        self.S_in(np.linspace(0, 2 * np.pi, 64, endpoint=False))
        self.S_out(np.linspace(0, 2 * np.pi, 64, endpoint=False))

    def S_in(self, th):
        return np.log(self.inner.radial(th, self.center))

    def S_out(self, th):
        return np.log(self.outer.radial(th, self.center))


def concentric(r, R=1.0, center=0j):
    return AnnularDomain(Circle(center, R), Circle(center, r), center)


def mobius_image(dom_r, a, n=4096):
    """Image of the concentric annulus {r < |z| < 1} under the disk
    automorphism z -> (z - a)/(1 - conj(a) z); both images are circles."""
    def img(rad):
        th = 2 * np.pi * np.arange(n) / n
        z = rad * np.exp(1j * th)
        w = (z - a) / (1 - np.conj(a) * z)
        # circle through three image points
        p1, p2, p3 = w[0], w[n // 3], w[2 * n // 3]
        cen = _circumcentre(p1, p2, p3)
        return Circle(cen, abs(p1 - cen))
    inner, outer = img(dom_r), img(1.0)
    return AnnularDomain(outer, inner, inner.center)


def _circumcentre(a, b, c):
    d = 2 * np.imag(np.conj(b - a) * (c - a))
    ab = abs(b - a) ** 2
    ac = abs(c - a) ** 2
    return a - 1j * ((c - a) * ab - (b - a) * ac) / d


# ---------------------------------------------------------------- solver

def _bisect_crossing(fn, lo, hi, target, iters=60):
    """theta in (lo, hi) with fn(theta) = target; fn - target changes sign."""
    flo = fn(lo) - target
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid) - target
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _bump_weight(u, a=0.15, b=0.85):
    out = np.zeros_like(u)
    m = (u > a) & (u < b)
    x = u[m]
    out[m] = np.exp(-1.0 / ((x - a) * (b - x)))
    return out


_BUMP_MASS = None


def _bump_mass():
    global _BUMP_MASS
    if _BUMP_MASS is None:
        from scipy.integrate import quad
        _BUMP_MASS = quad(lambda x: _bump_weight(np.array([x]))[0], 0.15, 0.85,
                          epsabs=1e-15, epsrel=1e-13)[0]
    return _BUMP_MASS


@dataclass
class HarmonicSolution:
    domain: AnnularDomain
    s: np.ndarray
    theta: np.ndarray
    u: np.ndarray          # nan outside
    energy: float
    h: float
    grad_s: np.ndarray = field(repr=False, default=None)
    grad_t: np.ndarray = field(repr=False, default=None)

    @property
    def t(self):
        return math.exp(-2 * math.pi / self.energy)


def solve_harmonic(domain, n_theta=256):
    """Shortley-Weller solve on the log-polar grid with spacing 2 pi/n_theta."""
    h = 2 * np.pi / n_theta
    th = h * np.arange(n_theta)
    Sin = domain.S_in(th)
    Sout = domain.S_out(th)
    if np.any(Sout - Sin < 4 * h):
        raise GeometryError("annulus too thin for the grid; refine")
    s0 = Sin.min() - 0.5 * h
    ns = int(math.ceil((Sout.max() - s0) / h)) + 2
    s = s0 + h * np.arange(ns)
    S, T = np.meshgrid(s, th, indexing="ij")
    inside = (S > Sin[None, :]) & (S < Sout[None, :])
    idx = -np.ones(S.shape, dtype=np.int64)
    idx[inside] = np.arange(inside.sum())
    N = int(inside.sum())

    rows, cols, vals = [], [], []
    rhs = np.zeros(N)
    I, J = np.nonzero(inside)
    P = idx[I, J]
    diag = np.zeros(N)

    # s direction: crossings at known s on each theta line
    for side in (-1, 1):
        Ii = I + side
        nb_in = (Ii >= 0) & (Ii < ns)
        Ic = np.clip(Ii, 0, ns - 1)
        nb_in &= inside[Ic, J]
        d = np.full(N, h)
        if side < 0:
            bd = S[I, J] - Sin[J]
            bval = 1.0
        else:
            bd = Sout[J] - S[I, J]
            bval = 0.0
        d = np.where(nb_in, h, bd)
        if side < 0:
            dl = d
            left_in, left_b = nb_in, bval
            left_idx = np.where(nb_in, idx[Ic, J], -1)
        else:
            dr = d
            right_in, right_b = nb_in, bval
            right_idx = np.where(nb_in, idx[Ic, J], -1)

    # theta direction: periodic, crossings found by bisection
    def theta_side(side):
        Jj = (J + side) % n_theta
        nb_in = inside[I, Jj]
        d = np.full(N, h)
        bval = np.zeros(N)
        out = ~nb_in
        if np.any(out):
            si = S[I[out], J[out]]
            t0 = th[J[out]]
            t1 = t0 + side * h
            # which boundary: neighbour below S_in -> inner, above S_out -> outer
            below = si <= Sin[Jj[out]]
            tc = np.empty(si.shape)
            for flag, fn, val in ((True, domain.S_in, 1.0), (False, domain.S_out, 0.0)):
                m = below == flag
                if np.any(m):
                    tc[m] = _bisect_crossing(fn, t0[m], t1[m], si[m])
                    bval[np.flatnonzero(out)[m]] = val
            d[out] = np.abs(tc - t0)
        return nb_in, d, bval, np.where(nb_in, idx[I, Jj], -1)

    dn_in, dd, dn_b, dn_idx = theta_side(-1)
    up_in, du, up_b, up_idx = theta_side(1)

    def add(coef, nb_in, nb_idx, bval):
        m = nb_in
        rows.append(P[m])
        cols.append(nb_idx[m])
        vals.append(coef[m])
        rhs[~m] -= coef[~m] * (bval[~m] if np.ndim(bval) else bval)

    cl = 2 / (dl * (dl + dr))
    cr = 2 / (dr * (dl + dr))
    cd = 2 / (dd * (dd + du))
    cu = 2 / (du * (dd + du))
    add(cl, left_in, left_idx, left_b)
    add(cr, right_in, right_idx, right_b)
    add(cd, dn_in, dn_idx, dn_b)
    add(cu, up_in, up_idx, up_b)
    rows.append(P)
    cols.append(P)
    vals.append(-(cl + cr + cd + cu))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    x = spla.spsolve(A.tocsc(), rhs)
    u = np.full(S.shape, np.nan)
    u[inside] = x

    # three-point derivatives on the Shortley-Weller stencil
    def nb(in_, idx_, b):
        return np.where(in_, x[np.maximum(idx_, 0)], b)

    def d3(um, up, dm, dp):
        return (dm * dm * up - dp * dp * um + (dp * dp - dm * dm) * x) / (dm * dp * (dm + dp))

    gs = np.full(S.shape, np.nan)
    gt = np.full(S.shape, np.nan)
    gs[inside] = d3(nb(left_in, left_idx, left_b), nb(right_in, right_idx, right_b), dl, dr)
    gt[inside] = d3(nb(dn_in, dn_idx, dn_b), nb(up_in, up_idx, up_b), dd, du)
    w = _bump_weight(np.nan_to_num(u, nan=0.0))
    g2 = np.where(w > 0, np.nan_to_num(gs) ** 2 + np.nan_to_num(gt) ** 2, 0.0)
    E = float(np.sum(w * g2) * h * h / _bump_mass())
    return HarmonicSolution(domain, s, th, u, E, h, gs, gt)


def modulus(domain, n_theta=64, tol=1e-4, max_theta=2048, return_solution=False):
    """t in (0, 1) with the domain equivalent to {t < |z| < 1}; the grid is
    doubled until t changes by less than ``tol``."""
    prev = None
    n = n_theta
    while True:
        try:
            sol = solve_harmonic(domain, n)
        except GeometryError:
            if n >= max_theta:
                raise
            n *= 2
            continue
        if prev is not None and abs(sol.t - prev.t) < tol:
            break
        if n >= max_theta:
            break
        prev = sol
        n *= 2
    return (sol.t, sol) if return_solution else sol.t


def normalized_metric(sol, z):
    """|2 dh/dz|**2 = |grad h|**2 at z, from centred differences."""
    dom = sol.domain
    w = complex(z) - dom.center
    r = abs(w)
    s = math.log(r)
    th = math.atan2(w.imag, w.real) % (2 * np.pi)
    h = sol.h
    if (s - float(np.atleast_1d(dom.S_in(th))[0]) < 2 * h) or (float(np.atleast_1d(dom.S_out(th))[0]) - s < 2 * h):
        raise BoundaryProximity("point within two grid cells of the boundary")
    fi = (s - sol.s[0]) / h
    fj = th / h
    i0, j0 = int(math.floor(fi)), int(math.floor(fj))
    a, b = fi - i0, fj - j0
    n = sol.theta.size
    acc_s = acc_t = 0.0
    for di, wi in ((0, 1 - a), (1, a)):
        for dj, wj in ((0, 1 - b), (1, b)):
            ii, jj = i0 + di, (j0 + dj) % n
            acc_s += wi * wj * sol.grad_s[ii, jj]
            acc_t += wi * wj * sol.grad_t[ii, jj]
    if not (np.isfinite(acc_s) and np.isfinite(acc_t)):
        raise BoundaryProximity("gradient stencil leaves the domain")
    return (acc_s ** 2 + acc_t ** 2) / (r * r)


# ---------------------------------------------------------------- walk on spheres

def hitting_probability_wos(domain, z, n_walks=4000, eps=1e-4, seed=0):
    """Probability that Brownian motion from z hits the inner curve first,
    by walk on spheres.  Returns (mean, stderr)."""
    rng = np.random.Generator(np.random.Philox(seed))
    pin = domain.inner.points()
    pout = domain.outer.points()
    rin = shapely.LinearRing(np.c_[pin.real, pin.imag])
    rout = shapely.LinearRing(np.c_[pout.real, pout.imag])
    x = np.full(n_walks, complex(z))
    done = np.zeros(n_walks, dtype=bool)
    hit_in = np.zeros(n_walks, dtype=bool)
    for _ in range(10000):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        pts = shapely.points(x[act].real, x[act].imag)
        di = shapely.distance(pts, rin)
        do = shapely.distance(pts, rout)
        d = np.minimum(di, do)
        stop = d < eps
        done[act[stop]] = True
        hit_in[act[stop]] = di[stop] <= do[stop]
        go = act[~stop]
        phi = rng.uniform(0, 2 * np.pi, go.size)
        x[go] += d[~stop] * np.exp(1j * phi)
    p = hit_in.mean()
    return float(p), float(math.sqrt(max(p * (1 - p), 1e-300) / n_walks))


# ---------------------------------------------------------------- plumbing

def conformal_radius(curve, n_pts=512, degree=48):
    """Conformal radius at 0 of the interior of a star-shaped curve about 0:
    log rho = u(0) for the harmonic u with u = log|z| on the curve, fitted
    by a harmonic polynomial in least squares."""
    th = 2 * np.pi * np.arange(n_pts) / n_pts
    r = curve.radial(th, 0j)
    z = r * np.exp(1j * th)
    R = float(np.mean(r))
    zn = z / R
    cols = [np.ones(n_pts)]
    for k in range(1, degree + 1):
        p = zn ** k
        cols += [p.real, p.imag]
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(r), rcond=None)
    return float(math.exp(coef[0]))


@dataclass
class DegenerationRow:
    q: float
    h_in: float
    h_out: float
    ratio: float
    target: float

    @property
    def rel_error(self):
        return abs(self.ratio - self.target) / self.target


def plumbing_domains(R1, R2, q, curve1=None, curve2=None):
    """In the z1 chart of the plumbing z1 z2 = q: the cylinder between the
    two unit circles, and the one between curve1 and the image of curve2.
    Curves default to circles of radii R1, R2."""
    curve1 = curve1 or Circle(0j, R1)
    curve2 = curve2 or Circle(0j, R2)
    unit_in = Circle(0j, q)
    dom_in = AnnularDomain(Circle(0j, 1.0), unit_in, 0j)

    # |z1| = q / r2(arg z2), arg z2 = -arg z1
    def rin(th):
        return q / curve2.radial(-np.asarray(th), 0j)
    dom_out = AnnularDomain(curve1, RadialCurve(0j, rin), 0j)
    return dom_in, dom_out


def degeneration_check(R1, R2, q_values, eps=0.0, n_theta=256):
    """Rows (q, h_in, h_out, h_out/h_in, h1 h2).  With eps > 0 the two
    circles carry smooth radial bumps of relative height eps and h_i is the
    reciprocal conformal radius of the bumped disk."""
    if R1 <= 1 or R2 <= 1:
        raise GeometryError("R1, R2 must exceed 1")
    if eps:
        c1 = bumped_circle(R1, eps, 0.3)
        c2 = bumped_circle(R2, eps, 2.0)
        target = 1 / (conformal_radius(c1) * conformal_radius(c2))
    else:
        c1, c2 = Circle(0j, R1), Circle(0j, R2)
        target = 1 / (R1 * R2)
    rows = []
    for q in q_values:
        if q >= 1 / max(R1, R2) ** 2 * 0.5:
            raise GeometryError("q too large: plumbing annuli overlap the R-circles")
        dom_in, dom_out = plumbing_domains(R1, R2, q, c1, c2)
        h_in = modulus(dom_in, n_theta)
        h_out = modulus(dom_out, n_theta)
        rows.append(DegenerationRow(q, h_in, h_out, h_out / h_in, target))
    return rows
