import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supple.errors import InsufficientData, RejectedInput
from supple.mollifier import normalize_bump, scaled
from supple.nets import (DEFAULT_SCHEDULE, CompactBox, EpsSchedule, Net, constant, fit_order, fit_power_law,
                         is_ginfty, is_moderate, is_negligible, mul, restrict, separable, sup_on_compact, zero)


def sin_derivs(x, n):
    return np.sin(x + 0.5 * math.pi * n)


def test_default_schedule():
    assert len(DEFAULT_SCHEDULE) == 18
    assert DEFAULT_SCHEDULE.values[0] == 2.0**-3 and DEFAULT_SCHEDULE.values[-1] == 2.0**-20


@pytest.mark.parametrize("vals", [(0.5, 0.4, 0.3), (0.5, 0.4, 0.4, 0.3, 0.2, 0.1), (0.5, 0.4, 0.3, 0.2, 0.1, 1.0)])
def test_schedule_rejects(vals):
    with pytest.raises(RejectedInput):
        EpsSchedule(vals)


@settings(max_examples=50)
@given(st.floats(-8, 8), st.floats(-5, 5))
def test_fit_recovers_exact_power_law(a, logc):
    e = np.array(DEFAULT_SCHEDULE.values)
    fit = fit_power_law(e, math.exp(logc) * e**a)
    assert fit.slope == pytest.approx(a, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)


def test_fit_degenerate_and_insufficient():
    e = DEFAULT_SCHEDULE.values
    assert fit_power_law(e, [0.0] * len(e)).degenerate
    with pytest.raises(InsufficientData):
        fit_power_law(e, [1.0, 1.0] + [0.0] * (len(e) - 2))
    with pytest.raises(RejectedInput):
        fit_power_law(e, [-1.0] * len(e))


def test_sup_matches_dense_grid():
    net = scaled()
    k = CompactBox(-0.3, 0.7)
    for eps in (0.1, 2.0**-8, 2.0**-15):
        for n in (0, 1, 2):
            xs = np.concatenate([np.linspace(-0.3, 0.7, 200_001), np.linspace(-eps, eps, 200_001)])
            dense = float(np.max(np.abs(net.eval(eps, xs, n))))
            est = sup_on_compact(net, k, eps, n)
            assert est <= dense * (1 + 1e-12)
            assert est >= 0.99 * dense


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_mollifier_slopes(n):
    fit = fit_order(scaled(), CompactBox(-1, 1), n)
    assert fit.slope == pytest.approx(-1 - n, abs=0.05)


def test_power_and_exponential_slopes():
    k = CompactBox(-1, 1)
    assert fit_order(separable(lambda e: e**2, sin_derivs, "e2sin"), k).slope == pytest.approx(2.0, abs=1e-9)
    assert fit_order(separable(lambda e: math.exp(-1 / e), sin_derivs, "expsin"), k).slope >= 10


def test_classifiers():
    k = CompactBox(-1, 1)
    assert is_moderate(scaled(), k)
    assert not is_negligible(scaled(), k)
    assert is_negligible(separable(lambda e: math.exp(-1 / e), sin_derivs, "expsin"), k)
    assert is_negligible(zero(), k).detail == "exact zero on K"
    assert is_ginfty(separable(lambda e: e**-3, sin_derivs, "e-3sin"), k)
    g = is_ginfty(scaled(), k)
    assert not g and g.slopes()[4] == pytest.approx(-5, abs=0.05)


def test_ginfty_needs_orders():
    with pytest.raises(RejectedInput):
        is_ginfty(zero(), CompactBox(0, 1), orders=(0, 1))


def test_eval_validation():
    net = restrict(constant(1.0), (0.0, 1.0))
    with pytest.raises(RejectedInput):
        net.eval(1.0, 0.5)
    with pytest.raises(RejectedInput):
        net.eval(0.5, 1.5)
    with pytest.raises(RejectedInput):
        net.eval(0.5, 0.5, -1)
    with pytest.raises(RejectedInput):
        CompactBox(0.0, 1.0).margin(net)


def test_finite_difference_fallback():
    net = Net(lambda eps, x, n: np.sin(x / eps), max_analytic_order=0, label="sin(x/eps)")
    eps = 0.1
    assert net.eval(eps, 0.3, 1) == pytest.approx(math.cos(3.0) / eps, rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(1e-4, 0.9), st.integers(0, 3))
def test_leibniz_product(x, eps, n):
    f = scaled()
    g = separable(lambda e: 1.0, sin_derivs, "sin")
    fg = mul(f, g)
    b = normalize_bump()
    # direct Leibniz with closed-form derivatives
    ref = sum(math.comb(n, j) * eps ** (-1 - j) * float(b.profile(x / eps, j)) * math.sin(x + 0.5 * math.pi * (n - j))
              for j in range(n + 1))
    assert fg.eval(eps, x, n) == pytest.approx(ref, rel=1e-12, abs=1e-12 * eps ** (-1 - n))


def test_algebra():
    f = separable(lambda e: e, sin_derivs, "esin")
    g = f - f
    assert g.eval(0.3, 0.7) == 0.0
    assert (2 * f).eval(0.5, 0.1) == pytest.approx(math.sin(0.1))
    assert (1 - constant(1.0)).eval(0.5, 0.0) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_log_width_indicator_sups_follow_closed_form(n):
    # oracle: sup |eta^(n)| = h^-n sup |phi^(n-1)| with h = 1/(2|ln eps|), the two edges being separate
    from supple.mollifier import LOG, smooth_indicator
    eta = smooth_indicator([(-1.0, 1.0)], LOG)
    b = normalize_bump()
    k = CompactBox(-2.0, 2.0)
    for eps in DEFAULT_SCHEDULE:
        h = 0.5 / abs(math.log(eps))
        oracle = h ** (-n) * b.sup_abs(n - 1)
        est = sup_on_compact(eta, k, eps, n)
        assert oracle * (1 - 1e-3) <= est <= oracle * (1 + 1e-9)
    # the fitted exponent therefore sits near -0.147 n, drifting with |ln eps|^n
    assert fit_order(eta, k, n).slope == pytest.approx(-0.147 * n, abs=0.01)
