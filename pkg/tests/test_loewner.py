import numpy as np
import pytest
from hypothesis import given, strategies as st

from slelab import loewner as lw
from slelab.errors import EmptyDriving, NonSimpleCurve


def test_constant_driving_capacity():
    s = lw.evolve(lw.DrivingFunction(np.zeros(1), 1.0))
    assert lw.capacity_time(s) == 1.0
    # 1/z coefficient of sqrt(z^2 + 4t) is 2t
    assert lw.taylor(s).g1 == 2.0
    s2 = lw.evolve(lw.DrivingFunction(np.zeros(1000), 1e-3))
    assert abs(lw.taylor(s2).g1 - 2.0) < 1e-12
    assert abs(lw.capacity_time(s2) - 1.0) < 1e-12


def test_vertical_slit_tip():
    for n in (1, 10, 1000):
        tr = lw.trace(lw.DrivingFunction(np.zeros(n), 1.0 / n))
        assert abs(tr[-1] - 2j) < 1e-12
        assert np.allclose(tr.real, 0)


def test_empty_driving():
    with pytest.raises(EmptyDriving):
        lw.evolve(lw.DrivingFunction(np.zeros(0), 0.1))
    assert lw.taylor(None).g1 == 0


@given(st.integers(1, 300), st.floats(1e-4, 0.1), st.integers(0, 1000))
def test_capacity_equals_time(n, dt, seed):
    w = np.random.default_rng(seed).normal(0, 1, n).cumsum() * np.sqrt(dt)
    s = lw.evolve(lw.DrivingFunction(w, dt))
    assert abs(lw.capacity_time(s) - n * dt) < 1e-12 * max(1, n * dt)


@given(st.integers(0, 500))
def test_concatenation(seed):
    rng = np.random.default_rng(seed)
    a = lw.DrivingFunction(rng.normal(size=5), rng.uniform(.01, .1, 5))
    b = lw.DrivingFunction(rng.normal(size=4), rng.uniform(.01, .1, 4))
    s = lw.evolve(a + b)
    assert abs(lw.capacity_time(s) - (a.horizon + b.horizon)) < 1e-13


def test_unzip_roundtrip():
    rng = np.random.default_rng(3)
    d = lw.DrivingFunction(np.cumsum(rng.normal(0, 0.05, 200)), 1e-3)
    u = lw.unzip(lw.trace(d))
    assert np.allclose(u.drive, d.values, atol=1e-9)
    assert np.allclose(u.dt, 1e-3, atol=1e-11)


def test_unzip_rejects_loop():
    # comes back down onto the real line
    pts = np.array([0, 1j, 1 + 1j, 2 + 0.5j, 2.5 + 0j, 3 + 1j])
    with pytest.raises(NonSimpleCurve) as e:
        lw.unzip(pts)
    assert e.value.index >= 1


def test_csv_roundtrip(tmp_path):
    d = lw.DrivingFunction(np.linspace(0, 0.3, 20), 0.01)
    tr = lw.trace(d)
    lw.write_trace_csv(tmp_path / "t.csv", tr, d.times)
    back = lw.read_trace_csv(tmp_path / "t.csv")
    pts = back[0] if isinstance(back, tuple) else back
    assert np.array_equal(np.asarray(pts), tr)
