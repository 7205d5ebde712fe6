"""Complex-analytic primitives for half-plane maps.

Vertical-slit maps, Moebius maps, order-3 jets with the Faa di Bruno rule,
and the Laurent tail ``z + c0 + c1/z + c2/z**2 + c3/z**3`` at infinity.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DomainError, SingularJet


# ---------------------------------------------------------------- branches

def sqrt_up(v, u):
    """sqrt(v) on the branch continuous with ``u`` at infinity.

    The principal root is flipped into the closed upper half-plane; on the
    real axis the sign of ``u`` decides, so the map is odd-symmetric.
    """
    r = np.sqrt(np.asarray(v, dtype=complex))
    u = np.asarray(u, dtype=complex)
    flip = (r.imag < 0) | ((r.imag == 0) & (r.real * u.real < 0))
    out = np.where(flip, -r, r)
    return out[()] if out.ndim == 0 else out


@njit(cache=True, inline="always")
def _sqrt_up(v, u):
    r = np.sqrt(v)
    if r.imag < 0.0 or (r.imag == 0.0 and r.real * u.real < 0.0):
        return -r
    return r


# ---------------------------------------------------------------- jets

@dataclass(frozen=True)
class Jet3:
    """Value and first three derivatives of a holomorphic map at a point."""
    f: complex
    d1: complex = 1.0
    d2: complex = 0.0
    d3: complex = 0.0

    @classmethod
    def identity(cls, z):
        return cls(complex(z), 1.0 + 0j, 0j, 0j)

    def compose(self, inner):
        """Jet of ``outer o inner`` where ``self`` is the outer jet taken at
        ``inner.f``."""
        a, b = self, inner
        return Jet3(a.f,
                    a.d1 * b.d1,
                    a.d2 * b.d1 ** 2 + a.d1 * b.d2,
                    a.d3 * b.d1 ** 3 + 3 * a.d2 * b.d1 * b.d2 + a.d1 * b.d3)

    def as_tuple(self):
        return (self.f, self.d1, self.d2, self.d3)


def jet_compose(outer, inner):
    return outer.compose(inner)


def schwarzian(jet, tol=1e-14):
    """Schwarzian derivative d3/d1 - 1.5 (d2/d1)**2 of a jet."""
    if abs(jet.d1) < tol:
        raise SingularJet(f"|f'| = {abs(jet.d1):.3g} below {tol}")
    q = jet.d2 / jet.d1
    return jet.d3 / jet.d1 - 1.5 * q * q


# ---------------------------------------------------------------- elements

@dataclass(frozen=True)
class SlitElement:
    """z -> drive + sqrt((z - drive)**2 + 4 dt): removes a vertical slit of
    height 2 sqrt(dt) above ``drive``; contributes 2 dt to c1."""
    drive: float
    dt: float

    def apply(self, z):
        return slit_apply(z, self)

    def inverse(self, u):
        return slit_inverse(u, self)

    def jet(self, z):
        u = complex(z) - self.drive
        r = complex(sqrt_up(u * u + 4 * self.dt, u))
        if abs(r) < 1e-12:
            raise DomainError("point is a slit base")
        return Jet3(self.drive + r, u / r, 4 * self.dt / r ** 3,
                    -12 * self.dt * u / r ** 5)

    def tail_coeffs(self):
        """(b0, a1, a2, a3) of the expansion at infinity."""
        w, d = self.drive, self.dt
        return 0.0, 2 * d, 2 * d * w, 2 * d * w * w - 2 * d * d


@dataclass(frozen=True)
class Mobius:
    """z -> (a z + b) / (c z + d)."""
    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def translation(cls, s):
        return cls(1.0, s, 0.0, 1.0)

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def inverse(self, u):
        u = np.asarray(u, dtype=complex)
        return (self.d * u - self.b) / (-self.c * u + self.a)

    def jet(self, z):
        den = self.c * z + self.d
        det = self.a * self.d - self.b * self.c
        if abs(den) < 1e-300:
            raise DomainError("pole of Moebius map")
        return Jet3((self.a * z + self.b) / den, det / den ** 2,
                    -2 * self.c * det / den ** 3, 6 * self.c ** 2 * det / den ** 4)

    def tail_coeffs(self):
        if self.c != 0 or self.a != self.d:
            return None
        return self.b / self.d, 0.0, 0.0, 0.0


@njit(cache=True)
def _run_apply(z, drive, dt):
    out = z.copy()
    for j in range(out.shape[0]):
        v = out[j]
        for k in range(drive.shape[0]):
            u = v - drive[k]
            v = drive[k] + _sqrt_up(u * u + 4.0 * dt[k], u)
        out[j] = v
    return out


@njit(cache=True)
def _run_inverse(z, drive, dt):
    out = z.copy()
    for j in range(out.shape[0]):
        v = out[j]
        for k in range(drive.shape[0] - 1, -1, -1):
            u = v - drive[k]
            v = drive[k] + _sqrt_up(u * u - 4.0 * dt[k], u)
        out[j] = v
    return out


@njit(cache=True)
def _run_displacement(z, drive, dt):
    # g(z) - z accumulated as sum of 4 dt / (r + u): no cancellation far out
    out = np.empty_like(z)
    for j in range(z.shape[0]):
        v = z[j]
        disp = 0j
        for k in range(drive.shape[0]):
            u = v - drive[k]
            r = _sqrt_up(u * u + 4.0 * dt[k], u)
            step = 4.0 * dt[k] / (r + u)
            disp += step
            v = v + step
        out[j] = disp
    return out


@njit(cache=True)
def _run_jet(z, drive, dt):
    f = z
    d1 = 1.0 + 0j
    d2 = 0j
    d3 = 0j
    rmin = np.inf
    for k in range(drive.shape[0]):
        u = f - drive[k]
        r = _sqrt_up(u * u + 4.0 * dt[k], u)
        rmin = min(rmin, abs(r))
        a1 = u / r
        r3 = r * r * r
        a2 = 4.0 * dt[k] / r3
        a3 = -12.0 * dt[k] * u / (r3 * r * r)
        d3 = a3 * d1 ** 3 + 3.0 * a2 * d1 * d2 + a1 * d3
        d2 = a2 * d1 * d1 + a1 * d2
        d1 = a1 * d1
        f = drive[k] + r
    return f, d1, d2, d3, rmin


@njit(cache=True)
def _run_tail(c, drive, dt):
    c0, c1, c2, c3 = c[0], c[1], c[2], c[3]
    comp = 0j  # Neumaier compensation for c1
    for k in range(drive.shape[0]):
        w = drive[k]
        d = dt[k]
        a1 = 2.0 * d
        a2 = 2.0 * d * w
        a3 = 2.0 * d * w * w - 2.0 * d * d
        c3 = c3 + a1 * (c0 * c0 - c1) - 2.0 * a2 * c0 + a3
        c2 = c2 - a1 * c0 + a2
        s = c1 + a1
        if abs(c1.real) >= a1:
            comp += (c1 - s) + a1
        else:
            comp += (a1 - s) + c1
        c1 = s
    c1 = c1 + comp
    out = np.empty(4, dtype=np.complex128)
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3
    return out


@dataclass(frozen=True, eq=False)
class SlitRun:
    """Consecutive vertical-slit steps stored as arrays (fast path)."""
    drive: np.ndarray
    dt: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "drive", np.ascontiguousarray(self.drive, dtype=float))
        object.__setattr__(self, "dt", np.ascontiguousarray(
            np.broadcast_to(self.dt, self.drive.shape), dtype=float))

    def __len__(self):
        return self.drive.shape[0]

    def elements(self):
        return [SlitElement(float(w), float(d)) for w, d in zip(self.drive, self.dt)]

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        out = _run_apply(np.atleast_1d(z).ravel().copy(), self.drive, self.dt)
        return out.reshape(z.shape)[()] if z.ndim == 0 else out.reshape(z.shape)

    def inverse(self, u):
        u = np.asarray(u, dtype=complex)
        out = _run_inverse(np.atleast_1d(u).ravel().copy(), self.drive, self.dt)
        return out.reshape(u.shape)[()] if u.ndim == 0 else out.reshape(u.shape)

    def displacement(self, z):
        """g(z) - z, accurate far from the hull."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return _run_displacement(z.ravel().copy(), self.drive, self.dt).reshape(z.shape)

    def jet(self, z):
        f, d1, d2, d3, rmin = _run_jet(complex(z), self.drive, self.dt)
        if rmin < 1e-12:
            raise DomainError("point hits a slit base")
        return Jet3(f, d1, d2, d3)


# ---------------------------------------------------------------- tail

@dataclass(frozen=True)
class LaurentTail:
    """Coefficients of z + c0 + c1/z + c2/z**2 + c3/z**3 at infinity."""
    c0: complex = 0j
    c1: complex = 0j
    c2: complex = 0j
    c3: complex = 0j

    def after(self, b0, a1, a2, a3):
        """Tail of f o G where f = z + b0 + a1/z + a2/z**2 + a3/z**3."""
        c0, c1, c2, c3 = self.c0, self.c1, self.c2, self.c3
        return LaurentTail(c0 + b0, c1 + a1, c2 - a1 * c0 + a2,
                           c3 + a1 * (c0 * c0 - c1) - 2 * a2 * c0 + a3)

    def __call__(self, z):
        return z + self.c0 + self.c1 / z + self.c2 / z ** 2 + self.c3 / z ** 3


# ---------------------------------------------------------------- pipeline

@dataclass(frozen=True, eq=False)
class MapPipeline:
    """Composition of elementary maps, applied first-to-last.

    ``tail`` is None once a Moebius element that moves infinity is present.
    """
    elements: tuple = ()
    direction: str = "forward"
    tail: LaurentTail = field(default_factory=LaurentTail)

    @classmethod
    def from_elements(cls, elements):
        p = cls()
        for e in elements:
            p = p.then(e)
        return p

    def then(self, e):
        tail = self.tail
        if tail is not None:
            if isinstance(e, SlitRun):
                c = _run_tail(np.array([tail.c0, tail.c1, tail.c2, tail.c3],
                                       dtype=complex), e.drive, e.dt)
                tail = LaurentTail(*c)
            else:
                co = e.tail_coeffs()
                tail = None if co is None else tail.after(*co)
        return MapPipeline(self.elements + (e,), self.direction, tail)

    def __len__(self):
        return sum(len(e) if isinstance(e, SlitRun) else 1 for e in self.elements)

    def apply(self, z):
        z = np.asarray(z, dtype=complex)
        for e in self.elements:
            z = e.apply(z)
        return z

    def inverse(self, u):
        u = np.asarray(u, dtype=complex)
        for e in reversed(self.elements):
            u = e.inverse(u)
        return u

    def __call__(self, z):
        return self.inverse(z) if self.direction == "inverse" else self.apply(z)

    def displacement(self, z):
        """pipeline(z) - z for an all-slit pipeline, free of cancellation."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        v = z.copy()
        disp = np.zeros_like(v)
        for e in self.elements:
            if isinstance(e, SlitElement):
                e = SlitRun(np.array([e.drive]), np.array([e.dt]))
            if not isinstance(e, SlitRun):
                raise TypeError("displacement needs slit elements only")
            d = e.displacement(v)
            disp += d
            v = v + d
        return disp

    def jet(self, z):
        j = Jet3.identity(z)
        for e in self.elements:
            j = e.jet(j.f).compose(j)
        return j


def slit_apply(z, e):
    """Forward vertical-slit map of element ``e``."""
    u = np.asarray(z, dtype=complex) - e.drive
    return e.drive + sqrt_up(u * u + 4 * e.dt, u)


def slit_inverse(u, e):
    """Inverse slit map; ``e.drive`` goes to the slit tip."""
    v = np.asarray(u, dtype=complex) - e.drive
    return e.drive + sqrt_up(v * v - 4 * e.dt, v)


def jet_through(pipeline, z):
    """Jet of the whole pipeline at ``z``, propagated element by element."""
    if isinstance(pipeline, (SlitElement, Mobius, SlitRun)):
        pipeline = MapPipeline((pipeline,))
    return pipeline.jet(z)
