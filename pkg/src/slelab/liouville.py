"""Liouville action of conformal metrics and its contour companions.

Metrics are g = exp(phi) |dz|**2 in a planar chart, with phi, dphi/dz and the
Laplacian supplied in closed form by a sum of terms.  Conventions:

    S_L(g1, g2) = -1/(96 pi) iint (phi1 - phi2) Lap(phi1 + phi2) dx dy

(the 1/(48 pi i) form with dz ^ dzbar = -2i dx dy), and the 1-form

    alpha(g1, g2, g3) = -1/2 sum eps^{ijk} phi_i (d - dbar) phi_j,

for which L(1,2) + L(2,3) + L(3,1) = d alpha, so contour terms enter with
the same 1/(48 pi i).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .cgeom import Jet3, schwarzian
from .errors import BranchError, PoleOnContour, PreconditionError, SupportError


# ---------------------------------------------------------------- metric terms

@dataclass(frozen=True)
class Constant:
    c: float

    def phi(self, z):
        return np.full(np.shape(z), float(self.c))

    def dz(self, z):
        return np.zeros(np.shape(z), dtype=complex)

    def lap(self, z):
        return np.zeros(np.shape(z))


@dataclass(frozen=True)
class Bump:
    """amp * exp(-|z - center|**2 / (2 width**2))."""
    amp: float
    center: complex
    width: float

    def _e(self, z):
        return self.amp * np.exp(-np.abs(z - self.center) ** 2 / (2 * self.width ** 2))

    def phi(self, z):
        return self._e(z)

    def dz(self, z):
        return -self._e(z) * np.conj(z - self.center) / (2 * self.width ** 2)

    def lap(self, z):
        s2 = self.width ** 2
        return self._e(z) * (np.abs(z - self.center) ** 2 / s2 ** 2 - 2 / s2)


@dataclass(frozen=True)
class Round:
    """Spherical metric 4 |dz|**2 / (1 + |z|**2)**2."""

    def phi(self, z):
        return math.log(4) - 2 * np.log1p(np.abs(z) ** 2)

    def dz(self, z):
        return -2 * np.conj(z) / (1 + np.abs(z) ** 2)

    def lap(self, z):
        return -8 / (1 + np.abs(z) ** 2) ** 2


@dataclass(frozen=True)
class HolomorphicDensity:
    """|F(z)|**2 with F holomorphic; harmonic away from zeros and poles."""
    F: object
    dF: object

    def phi(self, z):
        return np.log(np.abs(self.F(z)) ** 2)

    def dz(self, z):
        return self.dF(z) / self.F(z)

    def lap(self, z):
        return np.zeros(np.shape(z))


@dataclass(frozen=True)
class ConformalMetric:
    """exp(sum of terms) |dz|**2; ``divisor`` lists (point, k) singularities."""
    terms: tuple = ()
    divisor: tuple = ()

    def phi(self, z):
        z = np.asarray(z, dtype=complex)
        return sum((t.phi(z) for t in self.terms), np.zeros(z.shape))

    def dz(self, z):
        z = np.asarray(z, dtype=complex)
        return sum((t.dz(z) for t in self.terms), np.zeros(z.shape, dtype=complex))

    def lap(self, z):
        z = np.asarray(z, dtype=complex)
        return sum((t.lap(z) for t in self.terms), np.zeros(z.shape))

    def grad2(self, z):
        """|grad phi|**2 = 4 |dphi/dz|**2."""
        return 4 * np.abs(self.dz(z)) ** 2

    def curvature(self, z):
        """Gaussian curvature -1/2 exp(-phi) Lap phi."""
        return -0.5 * np.exp(-self.phi(z)) * self.lap(z)

    def plus(self, *terms):
        return ConformalMetric(self.terms + tuple(terms), self.divisor)

    def weyl(self, sigma):
        """exp(2 sigma) g for sigma a ConformalMetric-like sum of terms."""
        return ConformalMetric(self.terms + tuple(_Scaled(t, 2.0) for t in sigma.terms),
                               self.divisor)


@dataclass(frozen=True)
class _Scaled:
    term: object
    k: float

    def phi(self, z):
        return self.k * self.term.phi(z)

    def dz(self, z):
        return self.k * self.term.dz(z)

    def lap(self, z):
        return self.k * self.term.lap(z)


def flat():
    return ConformalMetric((Constant(0.0),))


def pole_metric(k, center=0j):
    """|(z - c)**k dz|**2."""
    return ConformalMetric((HolomorphicDensity(lambda z: (z - center) ** k,
                                               lambda z: k * (z - center) ** (k - 1)),),
                           ((complex(center), int(k)),))


def coordinate_metric(coord, k=0, pole=None):
    """|w**k dw|**2 for a coordinate w = coord.f with derivatives coord.df, coord.d2f."""
    if k == 0:
        F = coord.df
        dF = coord.d2f
    else:
        def F(z):
            return coord.f(z) ** k * coord.df(z)

        def dF(z):
            return (k * coord.f(z) ** (k - 1) * coord.df(z) ** 2
                    + coord.f(z) ** k * coord.d2f(z))
    div = () if pole is None else ((complex(pole), int(k)),)
    return ConformalMetric((HolomorphicDensity(F, dF),), div)


@dataclass(frozen=True)
class Coord:
    """Holomorphic coordinate with first and second derivatives."""
    f: object
    df: object
    d2f: object


def random_bump_terms(rng, n=3, box=1.5, amp=1.0, width=(0.25, 0.5)):
    return tuple(Bump(float(rng.normal(0, amp)),
                      complex(rng.uniform(-box, box), rng.uniform(-box, box)),
                      float(rng.uniform(*width))) for _ in range(n))


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class SquareGrid:
    """Midpoint rule on [-half, half]**2 with n x n cells."""
    half: float = 6.0
    n: int = 512
    center: complex = 0j

    def nodes(self):
        h = 2 * self.half / self.n
        x = -self.half + h * (np.arange(self.n) + 0.5)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return self.center + X + 1j * Y, h * h

    def rim(self, k=64):
        s = np.linspace(-self.half, self.half, k)
        return self.center + np.concatenate([s - 1j * self.half, s + 1j * self.half,
                                             -self.half + 1j * s, self.half + 1j * s])


@dataclass(frozen=True)
class PolarRegion:
    """r0 < |z - center| < r1; Gauss-Legendre in r, trapezoid in angle."""
    center: complex
    r0: float
    r1: float
    n_r: int = 256
    n_theta: int = 512

    def nodes(self):
        x, w = np.polynomial.legendre.leggauss(self.n_r)
        r = self.r0 + (self.r1 - self.r0) * (x + 1) / 2
        wr = w * (self.r1 - self.r0) / 2 * r
        th = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        R, T = np.meshgrid(r, th, indexing="ij")
        W = np.outer(wr, np.full(self.n_theta, 2 * np.pi / self.n_theta))
        return self.center + R * np.exp(1j * T), W

    def rim(self, k=256):
        th = 2 * np.pi * np.arange(k) / k
        return self.center + self.r1 * np.exp(1j * th)


def _weights(region):
    z, w = region.nodes()
    return z, np.broadcast_to(w, z.shape)


def liouville_density(g1, g2, z):
    return (g1.phi(z) - g2.phi(z)) * (g1.lap(z) + g2.lap(z))


def liouville_action(g1, g2, grid=None, check_support=True, tol=1e-12):
    """S_L(g1, g2) by quadrature over ``grid`` (SquareGrid or PolarRegion)."""
    grid = grid or SquareGrid()
    if check_support:
        rim = grid.rim()
        gap = np.max(np.abs(g1.phi(rim) - g2.phi(rim)))
        if gap > tol:
            raise SupportError(f"metrics differ by {gap:.2e} at the grid edge")
    z, w = _weights(grid)
    return -float(np.sum(liouville_density(g1, g2, z) * w)) / (96 * math.pi)


def classical_action(sigma, g, grid=None, tol=1e-12):
    """(1/12 pi) iint (|grad sigma|**2 / 2 + K_g sigma) dA_g with K_g the
    Gaussian curvature; in a conformal chart this is
    (1/12 pi) iint (|grad sigma|**2 / 2 - sigma Lap(phi) / 2) dx dy."""
    grid = grid or SquareGrid()
    rim = grid.rim()
    if np.max(np.abs(sigma.phi(rim))) > tol:
        raise SupportError("sigma does not vanish at the grid edge")
    z, w = _weights(grid)
    s = sigma.phi(z)
    area = np.exp(g.phi(z))
    dens = 0.5 * sigma.grad2(z) + g.curvature(z) * s * area
    return float(np.sum(dens * w)) / (12 * math.pi)


# ---------------------------------------------------------------- contours

@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    n_nodes: int = 256
    orientation: int = 1  # +1 anticlockwise

    def __post_init__(self):
        if self.n_nodes < 64:
            raise ValueError("need at least 64 nodes")

    def nodes(self):
        th = 2 * np.pi * np.arange(self.n_nodes) / self.n_nodes
        e = np.exp(1j * self.orientation * th)
        z = self.center + self.radius * e
        dz = 1j * self.orientation * self.radius * e  # dz/dtheta
        return z, dz, 2 * np.pi / self.n_nodes

    def reversed(self):
        return ContourSpec(self.center, self.radius, self.n_nodes, -self.orientation)


def _check_contour(metrics, contour):
    for g in metrics:
        for p, _ in g.divisor:
            if abs(abs(p - contour.center) - contour.radius) < 1e-9 * max(1.0, contour.radius):
                raise PoleOnContour(f"divisor point {p} on the contour")


def alpha_contour(g1, g2, g3, contour):
    """Trapezoid integral of alpha(g1, g2, g3) over the circle."""
    _check_contour((g1, g2, g3), contour)
    z, dz, h = contour.nodes()
    ph = [g.phi(z) for g in (g1, g2, g3)]
    # (d - dbar) phi along the contour: 2i Im(phi_z dz)
    D = [2j * np.imag(g.dz(z) * dz) for g in (g1, g2, g3)]
    if not all(np.all(np.isfinite(p)) for p in ph):
        raise PoleOnContour("metric singular on the contour")
    form = (ph[0] * (D[1] - D[2]) + ph[1] * (D[2] - D[0]) + ph[2] * (D[0] - D[1]))
    return complex(-0.5 * np.sum(form) * h)


def pole_residue_target(k, w1, w2, p=0j):
    """2 pi i k log|w1'(p) / w2'(p)|**2."""
    return 2j * math.pi * k * math.log(abs(w1.df(p) / w2.df(p)) ** 2)


def residue_lemma32_check(k, z1, z2, w, contour, p=0j):
    """|contour integral of alpha(|z1^k dz1|^2, |z2^k dz2|^2, |dw|^2)|,
    which vanishes when z1'(p) = z2'(p)."""
    if abs(z1.df(p) - z2.df(p)) > 1e-12 * max(1.0, abs(z1.df(p))):
        raise PreconditionError("z1'(p) and z2'(p) differ")
    g1 = coordinate_metric(z1, k, p)
    g2 = coordinate_metric(z2, k, p)
    g3 = coordinate_metric(w)
    return abs(alpha_contour(g1, g2, g3, contour))


# ---------------------------------------------------------------- four spheres

@dataclass(frozen=True)
class SphereParam:
    """Parametrisation z_ij of one sphere near the contour, in the chart u;
    ``pole`` is the left marked point (z_ij = infinity there)."""
    coord: Coord
    label: tuple
    pole: complex = 0j


def _pole_residue(coord, pole, r=1e-3, n=64):
    th = 2 * np.pi * np.arange(n) / n
    u = pole + r * np.exp(1j * th)
    return complex(np.mean(coord.f(u) * (u - pole)))


def normalise(params):
    """Rescale z_i2 so that d(1/z_i1)/d(1/z_i2) = 1 at the left point."""
    out = dict(params)
    for i in (1, 2):
        a = _pole_residue(params[(i, 1)].coord, params[(i, 1)].pole)
        b = _pole_residue(params[(i, 2)].coord, params[(i, 2)].pole)
        s = a / b
        c = params[(i, 2)].coord
        out[(i, 2)] = SphereParam(Coord(lambda u, c=c, s=s: s * c.f(u),
                                        lambda u, c=c, s=s: s * c.df(u),
                                        lambda u, c=c, s=s: s * c.d2f(u)),
                                  (i, 2), params[(i, 2)].pole)
    return out


def _continuous_log(v, what):
    ang = np.unwrap(np.angle(v))
    wind = (ang[-1] - ang[0] + np.angle(v[0] / v[-1])) / (2 * np.pi)
    if abs(wind) > 0.5:
        raise BranchError(f"log of {what} winds {wind:+.0f} times along the contour")
    return np.log(np.abs(v)) + 1j * ang


def four_sphere_ratio_residue(params, contour):
    """(-1/24 pi) Im int_L log(dz11/dz22) dlog(dz12/dz21).

    ``params`` maps (i, j) to SphereParam; L is ``contour`` as oriented.
    """
    z, dz, h = contour.nodes()
    c = {k: v.coord for k, v in params.items()}
    U = _continuous_log(c[(1, 1)].df(z) / c[(2, 2)].df(z), "dz11/dz22")
    _continuous_log(c[(1, 2)].df(z) / c[(2, 1)].df(z), "dz12/dz21")
    dV = (c[(1, 2)].d2f(z) / c[(1, 2)].df(z) - c[(2, 1)].d2f(z) / c[(2, 1)].df(z)) * dz
    return -float(np.imag(np.sum(U * dV) * h)) / (24 * math.pi)


@dataclass(frozen=True)
class FourSphereModel:
    """Planar model: in the chart u the left pieces S_{i,L} are the disk
    |u - c| < rho, the cylinder and right pieces its exterior up to r_out.
    L is the circle |u - c| = rho oriented as the boundary of the cylinder
    (clockwise in u)."""
    center: complex = 0j
    rho: float = 1.0
    r_out: float = 6.0
    n_r: int = 200
    n_theta: int = 400
    n_contour: int = 1024

    def inner(self):
        return PolarRegion(self.center, 0.0, self.rho, self.n_r, self.n_theta)

    def outer(self):
        return PolarRegion(self.center, self.rho, self.r_out, self.n_r, self.n_theta)

    def contour(self):
        return ContourSpec(self.center, self.rho, self.n_contour, orientation=-1)


def four_sphere_ratio_general(g, model=None, tol=1e-10):
    """Sum of region integrals of the Liouville density and the two
    alpha terms on L for metrics g[(i, j)] on the four spheres."""
    model = model or FourSphereModel()
    inner, outer = model.inner(), model.outer()

    def part(a, b, region, check):
        if check:
            # the metrics themselves need not agree far out, only the density
            # must have died off
            d = np.max(np.abs(liouville_density(g[a], g[b], region.rim())))
            if d > tol:
                raise SupportError(f"Liouville density {d:.2e} at the outer radius")
        return liouville_action(g[a], g[b], region, check_support=False)

    total = (part((1, 1), (1, 2), inner, False) + part((2, 2), (2, 1), inner, False)
             + part((1, 1), (2, 1), outer, True) + part((2, 2), (1, 2), outer, True))
    L = model.contour()
    a = (alpha_contour(g[(1, 1)], g[(1, 2)], g[(2, 1)], L)
         - alpha_contour(g[(2, 2)], g[(1, 2)], g[(2, 1)], L))
    return total + float((a / (48j * math.pi)).real)


def flat_metrics(params):
    """Singular flat metrics |dz_ij|**2 in the chart u."""
    return {k: coordinate_metric(v.coord, 0, v.pole) for k, v in params.items()}


WEIGHTS = {(1, 1): 1, (1, 2): -1, (2, 1): -1, (2, 2): 1}


# ---------------------------------------------------------------- Schiffer

def _recip(x, dx, d2x):
    """1/x with derivatives."""
    return 1 / x, -dx / x ** 2, -d2x / x ** 2 + 2 * dx ** 2 / x ** 3


def _schiffer_t(x, dx, d2x, t):
    """x - t/(2x) with derivatives."""
    return (x - t / (2 * x), dx * (1 + t / (2 * x ** 2)),
            d2x * (1 + t / (2 * x ** 2)) - dx ** 2 * t / x ** 3)


def schiffer_params(f, t):
    """The four parametrisations 1/x1, 1/x2, 1/x1t, 1/x2t in the chart x1."""
    ident = Coord(lambda u: u, lambda u: np.ones_like(u), lambda u: np.zeros_like(u))

    def make(base, perturbed):
        def val(k):
            def fn(u):
                x = (base.f(u), base.df(u), base.d2f(u))
                if perturbed:
                    x = _schiffer_t(*x, t)
                return _recip(*x)[k]
            return fn
        return Coord(val(0), val(1), val(2))

    return {(1, 1): SphereParam(make(ident, False), (1, 1)),
            (1, 2): SphereParam(make(f, False), (1, 2)),
            (2, 1): SphereParam(make(ident, True), (2, 1)),
            (2, 2): SphereParam(make(f, True), (2, 2))}


def schwarzian_at_zero(f, r=0.05, n=64):
    """Schwarzian of f at 0 from Taylor coefficients on a small circle."""
    th = 2 * np.pi * np.arange(n) / n
    c = np.fft.fft(f.f(r * np.exp(1j * th))) / n
    a = [c[j] / r ** j for j in range(4)]
    return schwarzian(Jet3(a[0], a[1], 2 * a[2], 6 * a[3]))


@dataclass
class SchifferResult:
    slope: float
    target: float
    t: np.ndarray
    rho: np.ndarray

    @property
    def rel_error(self):
        return abs(self.slope - self.target) / max(abs(self.target), 1e-300)


def schiffer_derivative(f, t_values=(1e-4, 2e-4, 4e-4), radius=0.3, n=512):
    """Slope at t = 0 of the perturbed four-sphere ratio.

    The perturbed collection carries weights (-1, +1, +1, -1) on
    (S1, S2, S1t, S2t), the opposite of the residue formula's slot order,
    so rho_t = -residue on L oriented as the cylinder boundary.
    """
    t = np.asarray(t_values, dtype=float)
    L = ContourSpec(0j, radius, n, orientation=-1)
    rho = np.array([-four_sphere_ratio_residue(schiffer_params(f, tt), L) for tt in t])
    # rho(t) = a t + b t**2
    A = np.stack([t, t * t], axis=1)
    slope = float(np.linalg.lstsq(A, rho, rcond=None)[0][0])
    target = float(schwarzian_at_zero(f).real) / 12
    return SchifferResult(slope, target, t, rho)


def cubic(beta):
    """f(x) = x + beta x**3."""
    return Coord(lambda x: x + beta * x ** 3, lambda x: 1 + 3 * beta * x ** 2,
                 lambda x: 6 * beta * x)


# ---------------------------------------------------------------- checks

def cocycle_residuals(n_tuples=20, seed=0, grid=None, n_bumps=3):
    """Max over random bump tuples of the Liouville cocycle residual and of
    the alpha residual (three actions over a disk minus the contour term)."""
    rng = np.random.default_rng(seed)
    grid = grid or SquareGrid()
    base = ConformalMetric((Round(),))
    c_res, a_res = 0.0, 0.0
    for _ in range(n_tuples):
        g = [base.plus(*random_bump_terms(rng, n_bumps)) for _ in range(3)]
        s12 = liouville_action(g[0], g[1], grid)
        s23 = liouville_action(g[1], g[2], grid)
        s13 = liouville_action(g[0], g[2], grid)
        c_res = max(c_res, abs(s13 - s12 - s23))
        cen = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        rad = float(rng.uniform(0.8, 1.5))
        reg = PolarRegion(cen, 0.0, rad, 200, 400)
        lhs = sum(liouville_action(a, b, reg, check_support=False)
                  for a, b in ((g[0], g[1]), (g[1], g[2]), (g[2], g[0])))
        a = alpha_contour(g[0], g[1], g[2], ContourSpec(cen, rad, 1024))
        a_res = max(a_res, abs(lhs - (a / (48j * math.pi)).real))
    return c_res, a_res


def bridge_residuals(n_pairs=10, seed=0, grid=None):
    """|classical_action(sigma, g) + S_L(g, exp(2 sigma) g)| on random pairs."""
    rng = np.random.default_rng(seed)
    grid = grid or SquareGrid()
    base = ConformalMetric((Round(),))
    out = []
    for _ in range(n_pairs):
        g = base.plus(*random_bump_terms(rng))
        sig = ConformalMetric(random_bump_terms(rng, amp=0.5))
        out.append(abs(classical_action(sig, g, grid) + liouville_action(g, g.weyl(sig), grid)))
    return np.array(out)


def _poly_coord(c):
    """w = c1 z + c2 z**2 + c3 z**3."""
    c1, c2, c3 = c
    return Coord(lambda z: c1 * z + c2 * z ** 2 + c3 * z ** 3,
                 lambda z: c1 + 2 * c2 * z + 3 * c3 * z ** 2,
                 lambda z: 2 * c2 + 6 * c3 * z)


def coordinate_pairs(n=5, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        cs = []
        for _ in range(2):
            c1 = complex(rng.uniform(0.5, 2.0), rng.uniform(-1, 1))
            cs.append(_poly_coord((c1, complex(*rng.normal(0, 0.5, 2)), complex(*rng.normal(0, 0.5, 2)))))
        pairs.append(tuple(cs))
    return pairs


def pole_residue_errors(ks=(-2, -1, 1, 2), pairs=None, radius=0.05, n=256):
    """Relative errors of the contour integral of alpha(|z^k dz|^2, |dw1|^2,
    |dw2|^2) around the pole against 2 pi i k log|w1'/w2'|^2."""
    pairs = pairs or coordinate_pairs()
    out = []
    for w1, w2 in pairs:
        for k in ks:
            v = alpha_contour(pole_metric(k), coordinate_metric(w1), coordinate_metric(w2),
                              ContourSpec(0j, radius, n))
            tgt = pole_residue_target(k, w1, w2)
            out.append(abs(v - tgt) / abs(tgt))
    return np.array(out)


def vanishing_integral_values(ks=(-2, -1, 1, 2), n_pairs=5, seed=1, radius=0.05):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_pairs):
        c1 = complex(rng.uniform(0.5, 2.0), rng.uniform(-1, 1))
        z1 = _poly_coord((c1, complex(*rng.normal(0, .5, 2)), complex(*rng.normal(0, .5, 2))))
        z2 = _poly_coord((c1, complex(*rng.normal(0, .5, 2)), complex(*rng.normal(0, .5, 2))))
        w = _poly_coord((complex(rng.uniform(0.5, 2.0), 0), complex(*rng.normal(0, .5, 2)), 0j))
        for k in ks:
            out.append(residue_lemma32_check(k, z1, z2, w, ContourSpec(0j, radius, 256)))
    return np.array(out)


SCHIFFER_CONFIGS = ((0.01, 0.01), (0.2, 0.005), (-0.3, 0.02), (0.1, 0.04), (0.5, 0.01))


def four_sphere_agreement(configs=SCHIFFER_CONFIGS, model=None):
    """(residue, general) on Schiffer-type configurations (beta, t): the
    flat metrics |dz_ij|**2 have no curvature, so the general form reduces
    to its contour terms."""
    model = model or FourSphereModel(rho=0.3, r_out=0.6)
    out = []
    for beta, t in configs:
        P = normalise(schiffer_params(cubic(beta), t))
        out.append((four_sphere_ratio_residue(P, model.contour()),
                    four_sphere_ratio_general(flat_metrics(P), model)))
    return np.array(out)


def _laurent(a, c1, c2):
    return Coord(lambda u: a / u + c1 * u + c2 * u * u,
                 lambda u: -a / u ** 2 + c1 + 2 * c2 * u,
                 lambda u: 2 * a / u ** 3 + 2 * c2)


def four_sphere_bump_check(n_config=5, seed=3, model=None, n_quad=400):
    """Planar configurations with bump-deformed metrics: returns rows
    (residue, general + sum of weighted Liouville corrections)."""
    rng = np.random.default_rng(seed)
    # bumps sit within |u| < 1.4; at radius 2.5 they are below 1e-20
    model = model or FourSphereModel(r_out=2.5)
    rows = []
    while len(rows) < n_config:
        P = {}
        ok = True
        for ij in WEIGHTS:
            a = 1.0 if ij[1] == 1 else complex(rng.uniform(0.5, 2), rng.uniform(-.5, .5))
            c = rng.normal(0, 0.01, 4)
            c1, c2 = complex(c[0], c[1]), complex(c[2], c[3])
            # z' = -a/u**2 + c1 + 2 c2 u must not vanish in the model region
            crit = np.roots([2 * c2, c1, 0, -a])
            ok &= bool(np.all(np.abs(crit - model.center) > model.r_out + 0.5))
            P[ij] = SphereParam(_laurent(a, c1, c2), ij)
        if not ok:
            continue
        P = normalise(P)
        res = four_sphere_ratio_residue(P, model.contour())
        flat_g = flat_metrics(P)
        g, corr = {}, 0.0
        region = PolarRegion(model.center, 0, model.r_out, n_quad, n_quad)
        for ij in WEIGHTS:
            # bumps kept away from the pole and from zeros of z'
            bumps = tuple(Bump(float(rng.normal(0, .5)),
                               complex(np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(.8, 1.2)),
                               float(rng.uniform(.08, .12))) for _ in range(3))
            g[ij] = flat_g[ij].plus(*bumps)
            corr += WEIGHTS[ij] * liouville_action(flat_g[ij], g[ij], region)
        rows.append((res, four_sphere_ratio_general(g, model) + corr))
    return np.array(rows)
