import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from droopreg import (
    ControllerBank,
    DegenerateSegment,
    DroopSpec,
    controller_derivative,
    min_ramp_slope,
    droop_eval,
    reset,
    slope_of,
    verify_slope_restriction,
)

TABLE_SPEC = DroopSpec.symmetric(29613.0, 4200.0)


@st.composite
def specs(draw, allow_zero=True):
    Q = draw(st.floats(0.0 if allow_zero else 1.0, 1e4))
    w_m = -draw(st.floats(0.0, 5e4))
    w_n = draw(st.floats(0.0, 5e4))
    if Q == 0.0:
        w_min = w_m - draw(st.floats(0.0, 1e5))
        w_max = w_n + draw(st.floats(0.0, 1e5))
    else:
        w_min = w_m - draw(st.floats(1.0, 1e5))
        w_max = w_n + draw(st.floats(1.0, 1e5))
    return DroopSpec(w_min, w_m, w_n, w_max, Q)


def test_eval_table_values():
    assert droop_eval(TABLE_SPEC, 0.0) == 0.0
    assert droop_eval(TABLE_SPEC, 29613.0) == pytest.approx(4200.0)
    assert droop_eval(TABLE_SPEC, 14806.5) == pytest.approx(2100.0)
    assert droop_eval(TABLE_SPEC, -1e9) == -4200.0
    assert droop_eval(TABLE_SPEC, 1e9) == 4200.0


def test_eval_half_open_convention():
    spec = DroopSpec(-10.0, -2.0, 3.0, 13.0, 8.0)
    # breakpoints belong to the interval on their left
    assert droop_eval(spec, -10.0) == -8.0
    assert droop_eval(spec, -2.0) == 0.0
    assert droop_eval(spec, 3.0) == 0.0
    assert droop_eval(spec, 13.0) == 8.0
    assert droop_eval(spec, -6.0) == pytest.approx(-4.0)
    assert droop_eval(spec, 8.0) == pytest.approx(4.0)
    np.testing.assert_allclose(droop_eval(spec, np.array([-20.0, 0.0, 20.0])), [-8.0, 0.0, 8.0])


def test_slope_table_values():
    assert slope_of(TABLE_SPEC) == pytest.approx(0.14183, abs=1e-5)
    assert slope_of(DroopSpec.symmetric(45830.0, 6500.0)) == pytest.approx(0.14183, abs=1e-5)
    assert slope_of(DroopSpec(0.0, 0.0, 0.0, 0.0, 0.0)) == 0.0


def test_slope_asymmetric_max_vs_min():
    spec = DroopSpec(-100.0, 0.0, 0.0, 400.0, 200.0)
    assert slope_of(spec) == pytest.approx(2.0)
    assert min_ramp_slope(spec) == pytest.approx(0.5)
    # the gentler slope is not a valid certificate here
    assert not verify_slope_restriction(spec, min_ramp_slope(spec))
    assert verify_slope_restriction(spec, slope_of(spec))


def test_degenerate_and_invalid_specs():
    with pytest.raises(DegenerateSegment):
        DroopSpec(0.0, 0.0, 0.0, 10.0, 5.0)
    with pytest.raises(DegenerateSegment):
        DroopSpec(-10.0, 0.0, 5.0, 5.0, 5.0)
    with pytest.raises(ValueError):
        DroopSpec(-10.0, 1.0, 2.0, 10.0, 5.0)
    with pytest.raises(ValueError):
        DroopSpec(-10.0, 0.0, 0.0, 10.0, -1.0)


def test_verify_slope_restriction_examples():
    d = slope_of(TABLE_SPEC)
    assert verify_slope_restriction(TABLE_SPEC, d, grid=10_000)
    assert not verify_slope_restriction(TABLE_SPEC, d / 2, grid=10_000)
    assert verify_slope_restriction(DroopSpec(-1.0, 0.0, 0.0, 1.0, 0.0), 0.0)


def test_verify_slope_restriction_brute_force_pairs():
    # all pairs on a small grid agree with the neighbour-only check
    spec = DroopSpec(-50.0, -10.0, 5.0, 25.0, 12.0)
    w = np.linspace(spec.w_min - spec.Q_bar, spec.w_max + spec.Q_bar, 300)
    K = droop_eval(spec, w)
    dv = w[:, None] - w[None, :]
    dK = K[:, None] - K[None, :]
    mask = dv != 0
    q = dK[mask] / dv[mask]
    assert q.min() >= -1e-12
    assert q.max() == pytest.approx(slope_of(spec), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(spec=specs(), w=st.floats(-3e5, 3e5), h=st.floats(-1e5, 1e5))
def test_droop_properties(spec, w, h):
    K = droop_eval(spec, w)
    d = slope_of(spec)
    tol = 1e-9 * max(1.0, spec.Q_bar)
    assert abs(K) <= spec.Q_bar
    assert droop_eval(spec, 0.0) == 0.0
    assert abs(K) <= d * abs(w) + tol
    assert abs(droop_eval(spec, w + h) - K) <= d * abs(h) + tol
    if h > 0:
        assert droop_eval(spec, w + h) >= K - tol


@settings(max_examples=100, deadline=None)
@given(spec_list=st.lists(specs(), min_size=1, max_size=6), seed=st.integers(0, 2**31 - 1))
def test_bank_vectorized_matches_scalar(spec_list, seed):
    rng = np.random.default_rng(seed)
    bank = ControllerBank(np.full(len(spec_list), 50.0), spec_list)
    y = rng.uniform(-2e5, 2e5, len(spec_list))
    expected = [droop_eval(s, v) for s, v in zip(spec_list, y)]
    np.testing.assert_allclose(bank.droop(y), expected, rtol=1e-12, atol=1e-9)


def test_controller_derivative():
    spec = DroopSpec.symmetric(1000.0, 4200.0)
    bank = ControllerBank([100.0], [spec])
    # saturated input: K = 4200, tau = 100
    assert controller_derivative(bank, np.array([5000.0])) == pytest.approx([42.0])
    assert controller_derivative(bank, np.array([0.0])) == pytest.approx([0.0])
    bank.q_g = np.array([droop_eval(spec, 300.0)])
    assert controller_derivative(bank, np.array([300.0])) == pytest.approx([0.0])


def test_reset():
    specs_ = [DroopSpec.symmetric(100.0, 10.0)] * 3
    bank = ControllerBank([1.0, 2.0, 4.0], specs_, q_g=np.array([1.0, 2.0, 3.0]))
    fresh = reset(bank)
    np.testing.assert_array_equal(fresh.q_g, [0.0, 0.0, 0.0])
    assert fresh.specs == specs_
    np.testing.assert_array_equal(reset(fresh).q_g, [0.0, 0.0, 0.0])
    # zero state: derivative is K(y) / tau
    np.testing.assert_allclose(controller_derivative(fresh, np.array([50.0, 50.0, 50.0])), [5.0, 2.5, 1.25])


def test_bank_rejects_bad_tau():
    with pytest.raises(ValueError):
        ControllerBank([0.0], [TABLE_SPEC])
