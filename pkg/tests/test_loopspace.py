import numpy as np
import pytest
from hypothesis import given, strategies as st

from slelab import loopspace as L
from slelab.errors import GeometryError, NotUnivalent

# interior conformal radius of the 1.2 x 0.8 ellipse at its centre, from
# the sn-map of the ellipse onto the disk evaluated with mpmath
ELLIPSE_A = 0.92444242470548127


@given(st.floats(0.2, 5))
def test_circle(r):
    c = L.coords(L.CircleLoop(r))
    assert c.AB == pytest.approx(1.0, abs=1e-10)
    assert np.abs(c.a).max() <= 1e-10 and np.abs(c.b).max() <= 1e-10


def test_circle_polyline():
    pts = L.CircleLoop(1.3).points(2048)
    c = L.coords(L.PolylineLoop(pts))
    assert c.AB == pytest.approx(1.0, abs=1e-5)
    assert np.abs(c.a).max() < 1e-4


def test_ellipse_oracle():
    c = L.coords(L.joukowski_ellipse(1.2, 0.8))
    assert c.A == pytest.approx(ELLIPSE_A, abs=1e-8)
    assert c.B == pytest.approx(1.0, abs=1e-12)
    # phi_R(t) = t / (1 + m t^2): b_2 = -m
    assert c.b[1] == pytest.approx(-0.2, abs=1e-12)
    assert c.de_branges_ok()


@given(st.floats(1.05, 3.0))
def test_ellipse_family_below_one(ratio):
    c = L.coords(L.joukowski_ellipse(ratio, 1.0))
    assert c.AB < 1
    assert c.de_branges_ok()


@given(st.floats(-0.3, 0.3), st.floats(0.5, 2))
def test_cubic_P2(beta, A):
    P = L.neretin_P2(L.cubic_loop(A, beta))
    assert P[0] == pytest.approx(beta / 2, abs=1e-8)
    assert abs(P[1]) < 1e-8


def test_cubic_univalence_guard():
    with pytest.raises(NotUnivalent):
        L.cubic_loop(1, 0.4)


def test_polyline_checks():
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    with pytest.raises(GeometryError):
        L.coords(L.PolylineLoop(3 + np.exp(1j * th)))          # misses 0
    fig8 = np.sin(th) + 1j * np.sin(2 * th)
    with pytest.raises(GeometryError):
        L.coords(L.PolylineLoop(fig8))


def test_polyline_matches_closed_form():
    ell = L.joukowski_ellipse(1.2, 0.8)
    c0 = L.coords(ell)
    c1 = L.coords(L.PolylineLoop(ell.points(4096)))
    assert c1.A == pytest.approx(c0.A, abs=1e-5)
    assert c1.B == pytest.approx(c0.B, abs=1e-5)


def test_scaling_covariance():
    ell = L.joukowski_ellipse(1.5, 1.0)
    c, c2 = L.coords(ell), L.coords(ell.scaled(2.0))
    assert c2.A == pytest.approx(2 * c.A, rel=1e-10)
    assert c2.B == pytest.approx(c.B / 2, rel=1e-10)
    assert c2.AB == pytest.approx(c.AB, rel=1e-10)
