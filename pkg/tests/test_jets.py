import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscdef.jets import (
    Jet,
    JetDomainError,
    JetUsageError,
    extract_partial,
    jet_apply_unary,
    jet_derivative,
    jet_mul,
    jet_var,
)


def test_jet_var_linear():
    j = jet_var(0, np.array([2.0]), (2,))
    assert np.allclose(j.coeffs, [2.0, 1.0, 0.0])


def test_jet_var_two_axes():
    j = jet_var(1, np.array([0.0, 3.0]), (1, 1))
    expect = np.zeros((2, 2), dtype=complex)
    expect[0, 0] = 3.0
    expect[0, 1] = 1.0
    assert np.allclose(j.coeffs, expect)


def test_jet_var_order_zero():
    j = jet_var(0, np.array([0.0]), (0,))
    assert j.coeffs.shape == (1,)
    assert j.coeffs[0] == 0.0


def test_jet_var_axis_out_of_range():
    with pytest.raises(JetUsageError):
        jet_var(2, np.array([0.0]), (1,))


def test_mul_squares_coordinate():
    j = jet_var(0, np.array([0.0]), (2,))
    sq = jet_mul(j, j)
    assert np.allclose(sq.coeffs, [0.0, 0.0, 1.0])


def test_mul_difference_of_squares():
    j = jet_var(0, np.array([0.0]), (2,))
    prod = jet_mul(j + 1.0, 1.0 - j)
    assert np.allclose(prod.coeffs, [1.0, 0.0, -1.0])


def test_mul_exp_square_matches_direct_series():
    # coefficients of exp(2x) are 2^k / k!
    import math

    j = jet_var(0, np.array([0.0]), (6,))
    e = jet_apply_unary("exp", j)
    sq = jet_mul(e, e)
    expect = [2.0**k / math.factorial(k) for k in range(7)]
    assert np.allclose(sq.coeffs, expect)


def test_mul_rejects_mismatched_frames():
    a = jet_var(0, np.array([0.0]), (2,))
    b = jet_var(0, np.array([1.0]), (2,))
    with pytest.raises(JetUsageError):
        jet_mul(a, b)
    c = jet_var(0, np.array([0.0]), (3,))
    with pytest.raises(JetUsageError):
        jet_mul(a, c)


def test_exp_series():
    j = jet_var(0, np.array([0.0]), (3,))
    e = jet_apply_unary("exp", j)
    assert np.allclose(e.coeffs, [1.0, 1.0, 0.5, 1.0 / 6.0])


def test_reciprocal_of_i_plus_x():
    j = jet_var(0, np.array([0.0]), (1,))
    r = jet_apply_unary("reciprocal", j + 1j)
    assert np.allclose(r.coeffs, [-1j, 1.0])


def test_power_half_of_one_plus_x_squared():
    j = jet_var(0, np.array([0.0]), (2,))
    s = jet_apply_unary("power", jet_mul(j, j) + 1.0, alpha=0.5)
    assert np.allclose(s.coeffs, [1.0, 0.0, 0.5])


def test_branch_cut_rejected():
    j = jet_var(0, np.array([0.0]), (2,))
    with pytest.raises(JetDomainError):
        jet_apply_unary("power", j - 1.0, alpha=0.5)
    with pytest.raises(JetDomainError):
        jet_apply_unary("log", j)
    with pytest.raises(JetDomainError):
        jet_apply_unary("reciprocal", j)


def test_reciprocal_allows_negative_reals():
    j = jet_var(0, np.array([0.0]), (2,))
    r = jet_apply_unary("reciprocal", j - 2.0)
    assert np.allclose(r.constant_term, -0.5)


def test_extract_partial_examples():
    p = jet_var(0, np.array([0.0, 0.0]), (1, 1))
    x = jet_var(1, np.array([0.0, 0.0]), (1, 1))
    assert extract_partial(jet_mul(p, x), (1, 1)) == pytest.approx(1.0)
    j = jet_var(0, np.array([0.0]), (3,))
    assert extract_partial(jet_apply_unary("exp", j), (2,)) == pytest.approx(1.0)
    assert extract_partial(jet_apply_unary("sin", j), (3,)) == pytest.approx(-1.0)


def test_extract_partial_over_bound():
    j = jet_var(0, np.array([0.0]), (2,))
    with pytest.raises(JetUsageError):
        extract_partial(j, (3,))


def test_derivative_shifts_orders():
    j = jet_var(0, np.array([0.5]), (4,))
    g = jet_apply_unary("exp", jet_mul(j, j) * (-1.0))
    d = jet_derivative(g, (1,))
    x = 0.5
    assert d.orders == (3,)
    assert np.allclose(d.constant_term, -2 * x * np.exp(-(x**2)))


@st.composite
def small_jets(draw):
    orders = (draw(st.integers(0, 3)),)
    coeffs = draw(
        st.lists(
            st.complex_numbers(max_magnitude=4.0, allow_nan=False, allow_infinity=False),
            min_size=orders[0] + 1,
            max_size=orders[0] + 1,
        )
    )
    return Jet(np.array([0.0]), orders, np.array(coeffs, dtype=complex))


@given(small_jets(), small_jets())
@settings(max_examples=60, deadline=None)
def test_mul_commutative(a, b):
    if a.orders != b.orders:
        b = Jet(a.center, a.orders, np.resize(b.coeffs, a.dims))
    left = jet_mul(a, b).coeffs
    right = jet_mul(b, a).coeffs
    assert np.array_equal(left, right)


@given(small_jets(), small_jets(), small_jets())
@settings(max_examples=60, deadline=None)
def test_mul_associative(a, b, c):
    dims = a.dims
    b = Jet(a.center, a.orders, np.resize(b.coeffs, dims))
    c = Jet(a.center, a.orders, np.resize(c.coeffs, dims))
    left = jet_mul(jet_mul(a, b), c).coeffs
    right = jet_mul(a, jet_mul(b, c)).coeffs
    assert np.allclose(left, right, rtol=1e-12, atol=1e-12)


@given(small_jets(), small_jets())
@settings(max_examples=60, deadline=None)
def test_exp_of_sum_is_product(a, b):
    b = Jet(a.center, a.orders, np.resize(b.coeffs, a.dims))
    lhs = jet_apply_unary("exp", a + b).coeffs
    rhs = jet_mul(jet_apply_unary("exp", a), jet_apply_unary("exp", b)).coeffs
    scale = np.maximum(np.abs(lhs), 1.0)
    assert np.allclose(lhs / scale, rhs / scale, atol=1e-9)


def test_batched_centers_match_loop():
    centers = np.array([[0.3, -1.2, 0.7]])
    jb = jet_apply_unary("exp", jet_var(0, centers, (3,)) * 0.5)
    for i, c in enumerate(centers[0]):
        js = jet_apply_unary("exp", jet_var(0, np.array([c]), (3,)) * 0.5)
        assert np.allclose(jb.coeffs[:, i], js.coeffs)
