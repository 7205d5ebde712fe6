import json
import math

import numpy as np
import pytest

from slelab import loewner as lw, restriction as R, sle
from slelab.errors import InvalidHull

# x + 1/x type map of the half-disk at 2 radius 1: Phi'(0) = 3/4
PHI0 = 0.75


def test_parse_hull():
    h = R.parse_hull("half-disk:2,1")
    assert isinstance(h, R.HalfDisk) and h.x0 == 2 and h.rad == 1
    s = R.parse_hull("slit:-1.5,0.5")
    assert isinstance(s, R.VerticalSlit)
    with pytest.raises((InvalidHull, ValueError)):
        R.parse_hull("half-disk:0.5,1")


def test_mapping_out_half_disk():
    a = R.mapping_out(R.HalfDisk(2, 1))
    assert a.jet0.d1.real == pytest.approx(PHI0, abs=1e-12)
    # boundary of the half-disk lands on the real line
    z = 2 + np.exp(1j * np.linspace(0.1, 3.0, 7))
    assert np.allclose(a.phi(z).imag, 0, atol=1e-10)
    # Phi(0) = 0 fixes the additive constant at infinity
    assert abs(a.phi(1e6j) - 1e6j - a.const) < 1e-5
    assert abs(a.alpha(a.phi(0.3 + 2j)) - (0.3 + 2j)) < 1e-12


def test_mapping_out_slit():
    a = R.mapping_out(R.VerticalSlit(1.0, 0.5))
    # Phi(z) = 1 + sqrt((z - 1)^2 + 1/4) - ... normalised at infinity
    d = a.jet0.d1.real
    assert d == pytest.approx(1 / math.sqrt(1 + 0.25), abs=1e-10)


def test_r0_is_exact():
    for kappa in (2.0, 4.0):
        p = sle.params_from_kappa(kappa)
        tab = R.simulate(p, R.HalfDisk(2, 1), [0.1], 4, 0)
        assert tab.r0 == PHI0 ** p.h


def test_small_mc_flat_and_reproducible():
    p = sle.params_from_kappa(2.0)
    a = R.simulate(p, R.HalfDisk(2, 1), [0.1, 0.5], 200, 3)
    b = R.simulate(p, R.HalfDisk(2, 1), [0.1, 0.5], 200, 3)
    # killed paths carry NaN in H and the Schwarzian integral
    assert np.array_equal(a.raw, b.raw, equal_nan=True)
    assert a.flat()
    assert np.all(a.mean > 0.6) and np.all(a.mean < 0.9)


def test_restriction_small():
    av = R.avoidance_mc(R.HalfDisk(2, 1), 400, 1)
    assert abs(av.p_hat - PHI0 ** (5 / 8)) < 4 * av.stderr
    assert av.regret >= -1e-12


def test_flow_derivative_halving():
    rng = np.random.default_rng(0)
    d = lw.DrivingFunction(np.cumsum(rng.normal(0, 0.03, 40)), 2.5e-3)
    st = lw.evolve(d)
    alpha = R.mapping_out(R.HalfDisk(2, 1))
    z = np.array([0.5 + 1j, -1 + 0.5j, 4 + 2j])
    e1 = R.flow_derivative_check(st, alpha, z, 1e-3)
    e2 = R.flow_derivative_check(st, alpha, z, 5e-4)
    assert e1 <= 1e-2 and e2 <= 5e-3
    assert 0.35 < e2 / e1 < 0.65
    assert R.flow_derivative_check(st, None, z, 1e-3) == 0.0


def test_time_alpha_small_hull():
    d = lw.DrivingFunction(np.zeros(50), 2e-5)
    tr = lw.trace(d)
    alpha = R.mapping_out(R.HalfDisk(2, 1))
    t_id = R.time_alpha(tr, None)
    t_a = R.time_alpha(tr, alpha)
    assert t_id == pytest.approx(1e-3, abs=1e-15)
    # alpha = Phi^{-1} has alpha'(0) = 4/3; capacity scales with its square
    assert t_a == pytest.approx((4 / 3) ** 2 * 1e-3, rel=2e-2)


def test_martingale_io(tmp_path):
    p = sle.params_from_kappa(2.0)
    tab = R.simulate(p, R.HalfDisk(2, 1), [0.1], 5, 0)
    R.write_martingale_csv(tmp_path / "m.csv", tab)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "path_id,t,alive,H,schwarz_integral,r"
    assert len(lines) == 6
    js = json.loads(R.summary_json(tab))
    assert js["r0"] == tab.r0


def test_time_alpha_rate_is_inverse_H_squared():
    # along the trace K~ in H, Time(alpha(K~)) grows at rate 1/H^2 with H
    # the derivative of g_{K~} o Phi o g_K^{-1}, K = alpha(K~)
    alpha = R.mapping_out(R.HalfDisk(2, 1))
    d = sle.sample_driving(sle.params_from_kappa(2.0), 1e-4, 0.06, 3)
    tr = lw.trace(d)
    n = 500
    ta = [R.time_alpha(tr[:k + 1], alpha) for k in (n - 10, n + 10)]
    rate = (ta[1] - ta[0]) / 20e-4
    img = alpha.alpha(tr[:n + 1])
    img[0] = 0
    H = R.h_frame(img, alpha).H
    assert abs(rate * H ** 2 - 1) < 0.05


def test_h_frame_two_routes():
    alpha = R.mapping_out(R.HalfDisk(2, 1))
    d = sle.sample_driving(sle.params_from_kappa(2.0), 1e-3, 0.3, 8)
    tr = lw.trace(d)
    a = R.h_frame(tr, alpha)
    b = R.h_frame_composed(tr, alpha, radius=0.1)
    # the composed route unzips Phi(trace), which carries the slit
    # discretisation error (about 3e-5 here, 5e-6 on a 4x finer path)
    assert a.H == pytest.approx(b.H, rel=1e-4)
    assert a.S == pytest.approx(b.S, rel=2e-2, abs=1e-4)
    assert R.initial_frame(alpha).H == PHI0
    # empty trace through the polygon zipper
    assert R.h_frame(tr[:1], alpha).H == pytest.approx(PHI0, abs=1e-6)


def test_far_hull_is_invisible():
    alpha = R.mapping_out(R.HalfDisk(1000, 1))
    d = sle.sample_driving(sle.params_from_kappa(2.0), 1e-3, 0.5, 1)
    assert abs(R.h_frame(lw.trace(d), alpha).H - 1) < 1e-4


def test_empty_hull_martingale_is_one():
    p = sle.params_from_kappa(2.0)
    tab = R.simulate(p, R.HalfDisk(2, 0), [0.5, 1.0], 10, 0)
    assert np.all(tab.mean == 1) and np.all(tab.stderr == 0)


def test_avoidance_monotone_in_radius():
    ps = [R.avoidance_mc(R.HalfDisk(2, r), 300, 5, horizon=1e4).p_hat for r in (0.5, 1.0, 1.5)]
    assert ps[0] >= ps[1] >= ps[2]


def test_deep_approach_is_a_kill_not_an_error():
    # this path drives h' below double range before H_min = 1e-30 is reached
    p = sle.params_from_kappa(4.0)
    cfg = R.MCConfig(eps=0.05, H_min=1e-30)
    tab = R.simulate(p, R.HalfDisk(2, 1), [0.1, 2.0], 1, 9, cfg, first_path=358)
    assert tab.reasons[0] in (0, 1, 2, 3, 4)
    assert np.all(np.isfinite(tab.raw[:, :, 3]))
