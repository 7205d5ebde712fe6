"""Geodesic zipper for hulls attached to the real line.

Given a polygon P[0], ..., P[m-1] starting on the real line (the last point
may be real, closing off a region, or interior, like a slit tip), build the
conformal map F of H minus the curve onto H by successive geodesic steps.
Each step sends the next vertex c to the real line via a Moebius map
z -> z/(1 - z/a) followed by z -> sqrt(z**2 + b**2).

Jets of F at any point follow from the same sequence of elementary maps.
The hydrodynamic normalisation psi(z) = z + O(1/z) is recovered through the
chart at infinity, zeta = -1/z, as a final Moebius map.
"""
import numpy as np
from numba import njit

from .cgeom import Jet3, _sqrt_up
from .errors import GeometryError


@njit(cache=True, inline="always")
def jmob(f, d1, d2, d3, A, B, C, D):
    den = C * f + D
    g = (A * f + B) / den
    det = A * D - B * C
    a1 = det / (den * den)
    a2 = -2.0 * C * a1 / den
    a3 = -3.0 * C * a2 / den
    return g, a1 * d1, a2 * d1 * d1 + a1 * d2, a3 * d1 ** 3 + 3.0 * a2 * d1 * d2 + a1 * d3


@njit(cache=True, inline="always")
def jsq(f, d1, d2, d3, b):
    r = _sqrt_up(f * f + b * b, f)
    a1 = f / r
    a2 = b * b / (r * r * r)
    a3 = -3.0 * a2 * f / (r * r)
    return r, a1 * d1, a2 * d1 * d1 + a1 * d2, a3 * d1 ** 3 + 3.0 * a2 * d1 * d2 + a1 * d3


@njit(cache=True)
def zip_build(P, m, Q, ia, bb):
    """Fill the step parameters (1/a, b); returns the number of steps."""
    x0 = P[0].real
    for j in range(m):
        Q[j] = P[j] - x0
    ns = 0
    for j in range(1, m):
        c = Q[j]
        n2 = c.real * c.real + c.imag * c.imag
        if n2 == 0.0:
            continue
        if c.imag <= 1e-14 * np.sqrt(n2):
            break
        inva = c.real / n2
        b = n2 / c.imag
        ia[ns] = inva
        bb[ns] = b
        ns += 1
        for i in range(j + 1, m):
            z = Q[i]
            T = z / (1.0 - z * inva)
            Q[i] = _sqrt_up(T * T + b * b, T)
    return ns


@njit(cache=True)
def zip_jet(z, x0, ia, bb, ns):
    f = z - x0
    d1 = 1.0 + 0j
    d2 = 0j
    d3 = 0j
    for s in range(ns):
        f, d1, d2, d3 = jmob(f, d1, d2, d3, 1.0, 0.0, -ia[s], 1.0)
        f, d1, d2, d3 = jsq(f, d1, d2, d3, bb[s])
    return f, d1, d2, d3


@njit(cache=True, inline="always")
def jsq_inf(f, d1, d2, d3, b):
    """sqrt step seen from infinity: tau -> tau / sqrt(1 + b**2 tau**2),
    tau = -1/T.  Regular at tau = 0."""
    b2 = b * b
    s = 1.0 + b2 * f * f
    r = np.sqrt(s)
    a1 = 1.0 / (s * r)
    a2 = -3.0 * b2 * f * a1 / s
    a3 = -3.0 * b2 * a1 / s + 15.0 * b2 * b2 * f * f * a1 / (s * s)
    return f / r, a1 * d1, a2 * d1 * d1 + a1 * d2, a3 * d1 ** 3 + 3.0 * a2 * d1 * d2 + a1 * d3


@njit(cache=True)
def zip_infinity(x0, ia, bb, ns):
    """Jet of F(-1/zeta) at zeta = 0.

    Moebius factors are kept pending and fused; when the pending image is
    large the sqrt step is taken in the chart -1/T, so no pole is ever
    evaluated.
    """
    A = -x0 + 0j
    B = -1.0 + 0j
    C = 1.0 + 0j
    D = 0j
    g = 0j
    e1 = 1.0 + 0j
    e2 = 0j
    e3 = 0j
    for s in range(ns):
        C = -ia[s] * A + C
        D = -ia[s] * B + D
        b = bb[s]
        num = A * g + B
        den = C * g + D
        if abs(num) > 2.0 * b * abs(den):
            # tau = -1/T: fuse [[0,-1],[1,0]] into the pending matrix
            g, e1, e2, e3 = jmob(g, e1, e2, e3, -C, -D, A, B)
            g, e1, e2, e3 = jsq_inf(g, e1, e2, e3, b)
            A = 0j
            B = 1.0 + 0j
            C = -1.0 + 0j
            D = 0j
        else:
            g, e1, e2, e3 = jmob(g, e1, e2, e3, A, B, C, D)
            g, e1, e2, e3 = jsq(g, e1, e2, e3, b)
            A = 1.0 + 0j
            B = 0j
            C = 0j
            D = 1.0 + 0j
    return g, e1, e2, A, B, C, D


@njit(cache=True)
def zip_normalizer(x0, ia, bb, ns):
    """Moebius L with psi = L o F and psi(z) = z + O(1/z).

    With F(-1/zeta) = M(sigma(zeta)), pick K(s) = k u / (1 + mu u),
    u = s - sigma(0), so that K o sigma = zeta + O(zeta**3); then
    psi = J o K o M^-1 o F with J(s) = -1/s.
    """
    s0, s1, s2, A, B, C, D = zip_infinity(x0, ia, bb, ns)
    k = 1.0 / s1
    mu = s2 / (2.0 * s1 * s1)
    # K = [[k, -k s0], [mu, 1 - mu s0]];  J K = [[-mu, mu s0 - 1], [k, -k s0]]
    a = -mu
    b = mu * s0 - 1.0
    c = k
    d = -k * s0
    # times M^-1 = [[D, -B], [-C, A]]
    return (a * D - b * C, -a * B + b * A, c * D - d * C, -c * B + d * A)


@njit(cache=True)
def zip_frame(P, m, W, Q, ia, bb):
    """h'(W) and the Schwarzian at W of the mapping-out map of P[:m]."""
    ns = zip_build(P, m, Q, ia, bb)
    x0 = P[0].real
    f, d1, d2, d3 = zip_jet(complex(W), x0, ia, bb, ns)
    LA, LB, LC, LD = zip_normalizer(x0, ia, bb, ns)
    den = LC * f + LD
    if d1 == 0 or den == 0:
        # underflow at the hull: report a hit
        return 0.0, 0.0, 0.0
    H = (LA * LD - LB * LC) / (den * den) * d1
    qq = d2 / d1
    S = d3 / d1 - 1.5 * qq * qq
    return H.real, S.real, H.imag


@njit(cache=True)
def _zip_jets(P, zs):
    m = P.shape[0]
    Q = np.empty(m, dtype=np.complex128)
    ia = np.empty(m)
    bb = np.empty(m)
    ns = zip_build(P, m, Q, ia, bb)
    x0 = P[0].real
    LA, LB, LC, LD = zip_normalizer(x0, ia, bb, ns)
    out = np.empty((zs.shape[0], 4), dtype=np.complex128)
    for i in range(zs.shape[0]):
        f, d1, d2, d3 = zip_jet(zs[i], x0, ia, bb, ns)
        f, d1, d2, d3 = jmob(f, d1, d2, d3, LA, LB, LC, LD)
        out[i, 0] = f
        out[i, 1] = d1
        out[i, 2] = d2
        out[i, 3] = d3
    return out


class HullMap:
    """Hydrodynamically normalised map psi(z) = z + O(1/z) of H minus the
    polygonal hull P onto H."""

    def __init__(self, polygon):
        P = np.ascontiguousarray(polygon, dtype=np.complex128)
        if P.shape[0] < 2:
            raise GeometryError("polygon needs at least two points")
        if abs(P[0].imag) > 1e-12:
            raise GeometryError("polygon must start on the real line")
        P = P.copy()
        P[0] = P[0].real
        self.P = P

    def jets(self, zs):
        zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
        return _zip_jets(self.P, zs)

    def __call__(self, z):
        return self.jets(z)[:, 0] if np.ndim(z) else complex(self.jets(z)[0, 0])

    def jet(self, z):
        return Jet3(*self.jets(z)[0])
