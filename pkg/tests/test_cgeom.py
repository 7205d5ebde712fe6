import numpy as np
import pytest
from hypothesis import given, strategies as st

from slelab import cgeom as cg
from slelab.errors import DomainError, SingularJet

finite = st.floats(-5, 5, allow_nan=False)
upper = st.builds(complex, finite, st.floats(0.05, 5))


def test_sqrt_up_branch():
    assert cg.sqrt_up(-4 + 0j, 1j) == 2j
    assert cg.sqrt_up(4 + 0j, -1.0) == -2
    assert cg.sqrt_up(4 + 0j, 1.0) == 2


@given(upper, finite, st.floats(1e-4, 2))
def test_slit_roundtrip(z, w, dt):
    e = cg.SlitElement(w, dt)
    if abs(z.real - w) < 1e-3 and z.imag <= 2 * np.sqrt(dt):
        return  # on the slit: maps onto the real line
    u = e.apply(z)
    assert u.imag > 0
    assert abs(e.inverse(u) - z) < 1e-9 * max(1, abs(z))


def test_slit_tip_and_base():
    e = cg.SlitElement(0.0, 1.0)
    assert abs(cg.slit_inverse(0j, e) - 2j) < 1e-15
    assert abs(cg.slit_apply(2j, e)) < 1e-15
    with pytest.raises(DomainError):
        e.jet(2j)


def test_slit_tail_matches_series():
    # series of w + (z - w) sqrt(1 + 4t/(z - w)^2): 2t, 2tw, 2tw^2 - 2t^2
    e = cg.SlitElement(0.7, 0.3)
    assert np.allclose(e.tail_coeffs(), (0, 0.6, 0.42, 2 * 0.3 * 0.49 - 2 * 0.09))


@given(st.lists(st.tuples(finite, st.floats(1e-3, 0.5)), min_size=1, max_size=6))
def test_tail_additive_c1(steps):
    p = cg.MapPipeline.from_elements([cg.SlitElement(w, d) for w, d in steps])
    assert abs(p.tail.c1 - 2 * sum(d for _, d in steps)) < 1e-12


def test_tail_agrees_with_map_far_away():
    rng = np.random.default_rng(1)
    run = cg.SlitRun(rng.normal(0, 0.3, 50), 0.01)
    p = cg.MapPipeline().then(run)
    z = np.array([40 + 30j, -25 + 60j, 80j])
    err = np.abs(p.apply(z) - p.tail(z))
    assert np.all(err < 5 * np.abs(z) ** -4)


def test_run_equals_elements():
    rng = np.random.default_rng(2)
    run = cg.SlitRun(rng.normal(0, 0.5, 20), rng.uniform(1e-3, 0.05, 20))
    pe = cg.MapPipeline.from_elements(run.elements())
    pr = cg.MapPipeline().then(run)
    z = np.array([0.3 + 1j, -2 + 0.5j, 4j])
    assert np.allclose(pe.apply(z), pr.apply(z), atol=1e-13)
    assert np.allclose(pr.inverse(pr.apply(z)), z, atol=1e-11)
    assert abs(pe.tail.c2 - pr.tail.c2) < 1e-13
    assert abs(pe.tail.c3 - pr.tail.c3) < 1e-13


def test_displacement_no_cancellation():
    run = cg.SlitRun(np.zeros(3), 1e-6)
    p = cg.MapPipeline().then(run)
    z = np.array([1e4j])
    d = p.displacement(z)[0]
    assert abs(d - 2 * 3e-6 / z[0]) < 1e-20


def test_jet_against_finite_differences():
    run = cg.SlitRun(np.array([0.1, -0.2, 0.3]), 0.05)
    p = cg.MapPipeline().then(run)
    z0 = 0.4 + 0.8j
    j = p.jet(z0)
    h = 1e-3
    # Cauchy-integral derivatives on a small circle
    th = 2 * np.pi * np.arange(64) / 64
    c = np.fft.fft(p.apply(z0 + h * np.exp(1j * th))) / 64
    assert abs(j.f - c[0]) < 1e-12
    assert abs(j.d1 - c[1] / h) < 1e-9
    assert abs(j.d2 - 2 * c[2] / h ** 2) < 1e-6
    assert abs(j.d3 - 6 * c[3] / h ** 3) < 1e-3


@given(st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3),
       st.complex_numbers(max_magnitude=3))
def test_mobius_schwarzian_zero(b, c, z):
    m = cg.Mobius(1.0, b, c, 1.0 + 0j)
    det = 1 - b * c
    den = c * z + 1
    if abs(det) < 1e-2 or abs(den) < 1e-2:
        return
    s = cg.schwarzian(m.jet(z))
    assert abs(s) < 1e-8 * max(1, abs(c / den) ** 2)


def test_schwarzian_chain_rule():
    # S(f o g) = (S f o g) g'^2 + S g
    f = cg.Jet3(0.0, 1.0, 0.0, 6 * 0.2)     # x + 0.2 x^3 at 0
    g = cg.Jet3(0.0, 2.0, 1.0, 0.5)
    lhs = cg.schwarzian(f.compose(g))
    rhs = cg.schwarzian(f) * g.d1 ** 2 + cg.schwarzian(g)
    assert abs(lhs - rhs) < 1e-14
    with pytest.raises(SingularJet):
        cg.schwarzian(cg.Jet3(0.0, 0.0))


def test_mobius_breaks_tail():
    p = cg.MapPipeline().then(cg.Mobius.translation(2.0))
    assert p.tail.c0 == 2.0
    p = p.then(cg.Mobius(0, 1, 1, 0))
    assert p.tail is None
