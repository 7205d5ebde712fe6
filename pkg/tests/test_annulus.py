import numpy as np
import pytest
from hypothesis import given, strategies as st

from slelab import annulus as an
from slelab.errors import GeometryError


@pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
def test_concentric_exact(r):
    assert an.modulus(an.concentric(r)) == pytest.approx(r, abs=1e-3)


@given(st.floats(0.3, 0.7), st.floats(0, 0.4), st.floats(0, 2 * np.pi))
def test_mobius_invariance(r, rho, phi):
    a = rho * np.exp(1j * phi)
    assert an.modulus(an.mobius_image(r, a)) == pytest.approx(r, abs=1e-3)


def test_scale_translation_invariance():
    d = an.AnnularDomain(an.Circle(1 + 1j, 3.0), an.bumped_circle(1.2, 0.1, origin=1 + 1j), 1 + 1j)
    d0 = an.AnnularDomain(an.Circle(0j, 1.0), an.bumped_circle(0.4, 0.1), 0j)
    assert an.modulus(d) == pytest.approx(an.modulus(d0), abs=1e-3)


def test_bad_geometry():
    with pytest.raises(GeometryError):
        an.AnnularDomain(an.Circle(0j, 1.0), an.Circle(0.8, 0.5))
    with pytest.raises(GeometryError):
        an.AnnularDomain(an.Circle(0j, 0.5), an.Circle(0j, 1.0))


def test_conformal_radius_circle_and_ellipse_free():
    assert an.conformal_radius(an.Circle(0j, 2.5)) == pytest.approx(2.5, rel=1e-10)
    # bumps increase the area, and the conformal radius with it
    assert an.conformal_radius(an.bumped_circle(1.0, 0.1)) > 1.0


def test_wos_matches_log():
    d = an.concentric(0.3)
    z = 0.55
    p, se = an.hitting_probability_wos(d, z, n_walks=3000, seed=2)
    exact = np.log(z) / np.log(0.3)
    assert abs(p - exact) < 4 * se + 2e-3


def test_plumbing_ratio():
    rows = an.degeneration_check(1.5, 2.0, [1e-3], eps=0.05)
    assert rows[0].rel_error < 0.01


def test_polyline_boundary(tmp_path):
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    f = tmp_path / "c.csv"
    np.savetxt(f, np.c_[np.cos(th), np.sin(th)], delimiter=",", header="x,y", comments="")
    outer = an.read_boundary_csv(f)
    dom = an.AnnularDomain(outer, an.Circle(0j, 0.5), 0j)
    assert an.modulus(dom) == pytest.approx(0.5, abs=2e-3)
