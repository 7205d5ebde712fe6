import numpy as np
import pytest
from hypothesis import given, strategies as st

from slelab import loewner as lw, sle
from slelab.errors import OutOfRange
from slelab.rng import normals


@pytest.mark.parametrize("kappa,c,h", [(2, -2, 1), (8 / 3, 0, 5 / 8), (4, 1, 1 / 4)])
def test_params_table(kappa, c, h):
    p = sle.params_from_kappa(kappa)
    assert p.c == pytest.approx(c, abs=1e-14)
    assert p.h == pytest.approx(h, abs=1e-14)
    assert p.theta == pytest.approx(kappa / 4)


@given(st.floats(0.01, 1.0))
def test_params_standard_forms(theta):
    p = sle.params_from_theta(theta)
    k = p.kappa
    assert p.c == pytest.approx((6 - k) * (3 * k - 8) / (2 * k), rel=1e-12, abs=1e-12)
    assert p.h == pytest.approx((6 - k) / (2 * k), rel=1e-12)


def test_out_of_range():
    for th in (0, -1, 1.5):
        with pytest.raises(OutOfRange):
            sle.params_from_theta(th)
    with pytest.raises(OutOfRange):
        sle.params_from_kappa(6)


def test_streams_reproducible_and_independent():
    p = sle.params_from_kappa(2)
    a = sle.sample_driving(p, 1e-3, 1, seed=5, path_id=3)
    b = sle.sample_driving(p, 1e-3, 1, seed=5, path_id=3)
    c = sle.sample_driving(p, 1e-3, 1, seed=5, path_id=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    batch = sle.sample_batch(p, 1e-3, 1, 5, 5, with_traces=False)
    assert np.array_equal(batch.drivings[3].values, a.values)


def test_normals_moments():
    x = normals(11, 0, 200000)
    assert abs(x.mean()) < 0.01
    assert abs(x.var() - 1) < 0.01
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) < 0.01


def test_driving_variance():
    p = sle.params_from_kappa(3.0)
    w = np.array([sle.sample_driving(p, 0.01, 1.0, 1, i).values[-1] for i in range(4000)])
    # w at step 99 has variance kappa * 0.99
    assert abs(w.var() / (3.0 * 0.99) - 1) < 0.07


@given(st.floats(0.1, 10), st.integers(0, 100))
def test_scaling_pipeline(lam, seed):
    d = sle.sample_driving(sle.params_from_kappa(2.5), 0.01, 0.5, seed)
    dl = sle.rescale_driving(d, lam)
    g = lw.evolve(d).pipeline
    gl = lw.evolve(dl).pipeline
    z = np.array([0.3 + 0.7j, -1 + 2j, 3 + 0.1j])
    s = np.sqrt(lam)
    assert np.allclose(gl.apply(z * s), s * g.apply(z), rtol=1e-9, atol=1e-9)
    assert abs(lw.capacity_time(lw.evolve(dl)) - lam * 0.5) < 1e-12
