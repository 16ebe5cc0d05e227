import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smcal.exceptions import ValidationError
from smcal.smoothing import LOGISTIC_SECOND_DERIV_SUP, SmoothingKernel

finite_x = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_alpha_must_be_positive():
    with pytest.raises(ValidationError):
        SmoothingKernel(0.0)
    with pytest.raises(ValidationError):
        SmoothingKernel(-1.0)
    with pytest.raises(ValidationError):
        SmoothingKernel(float("nan"))


def test_value_at_zero_is_half():
    for alpha in (0.1, 1.0, 57.0, 1e6):
        assert SmoothingKernel(alpha).f(0.0) == 0.5


def test_saturation_without_overflow():
    k = SmoothingKernel(1.0)
    assert abs(k.f(1e9) - 1.0) < 1e-15
    assert abs(k.f(-1e9)) < 1e-15
    # derivative saturates to 0 on both sides
    assert k.f_prime(1e9) == 0.0
    assert k.f_prime(-1e9) == 0.0


def test_direct_scalar_value():
    # 1 / (1 + exp(-1)), scalar oracle evaluated directly
    assert SmoothingKernel(2.0).f(0.5) == pytest.approx(1.0 / (1.0 + np.exp(-1.0)), abs=1e-15)
    assert SmoothingKernel(2.0).f(0.5) == pytest.approx(0.7310585786, abs=1e-9)


def test_derivative_peak_is_quarter_alpha():
    for alpha in (0.5, 1.0, 3.0):
        assert SmoothingKernel(alpha).f_prime(0.0) == pytest.approx(alpha / 4.0, abs=1e-15)


def test_derivative_matches_finite_difference():
    k = SmoothingKernel(1.0)
    h = 1e-6
    for x in (0.3, -0.7, 2.0):
        fd = (k.f(x + h) - k.f(x - h)) / (2.0 * h)
        assert k.f_prime(x) == pytest.approx(fd, abs=1e-8)


def test_second_bound_frozen_value_and_scaling():
    assert SmoothingKernel(1.0).f_second_bound() == pytest.approx(0.09622504486, abs=1e-10)
    assert SmoothingKernel(2.0).f_second_bound() == pytest.approx(
        4.0 * SmoothingKernel(1.0).f_second_bound(), rel=1e-15
    )


def test_second_bound_dominates_grid_search():
    # |d^2/dx^2 F(alpha x)| probed by central second differences on a dense grid
    k = SmoothingKernel(1.3)
    xs = np.arange(-20.0, 20.0, 1e-4)
    h = 1e-4
    second = (k.f(xs + h) - 2.0 * k.f(xs) + k.f(xs - h)) / h**2
    bound = k.f_second_bound()
    assert np.max(np.abs(second)) <= bound * (1.0 + 1e-6)
    # the bound is attained (tight), not just an over-estimate
    assert np.max(np.abs(second)) >= bound * 0.999
    analytic = 1.3**2 * LOGISTIC_SECOND_DERIV_SUP
    assert bound == pytest.approx(analytic, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(x=finite_x, alpha=st.floats(min_value=1e-3, max_value=1e3))
def test_reflection_identity(x, alpha):
    k = SmoothingKernel(alpha)
    assert k.f(x) + k.f(-x) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(x=finite_x, alpha=st.floats(min_value=1e-3, max_value=1e3))
def test_derivative_is_even(x, alpha):
    k = SmoothingKernel(alpha)
    assert k.f_prime(x) == k.f_prime(-x)


@settings(max_examples=100, deadline=None)
@given(
    x1=st.floats(min_value=-50, max_value=50),
    x2=st.floats(min_value=-50, max_value=50),
)
def test_monotone(x1, x2):
    k = SmoothingKernel(1.7)
    lo, hi = min(x1, x2), max(x1, x2)
    assert k.f(lo) <= k.f(hi)


def test_indicator_limit():
    k = SmoothingKernel(1e6)
    for x in (1e-3, 0.5, 2.0):
        assert abs(k.f(x) - 1.0) < 1e-12
        assert abs(k.f(-x) - 0.0) < 1e-12


def test_vector_input_round_trip():
    k = SmoothingKernel(2.0)
    xs = np.array([-3.0, 0.0, 0.5, 4.0])
    vec = k.f(xs)
    assert vec.shape == xs.shape
    assert vec == pytest.approx([k.f(float(v)) for v in xs], abs=0)
