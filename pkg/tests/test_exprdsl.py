import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscdef.exprdsl import (
    BinOp,
    Call,
    ExprEvalError,
    ExprParseError,
    ImagUnit,
    Num,
    ParseDiagnostic,
    Pow,
    Var,
    VarLayout,
    eval_jet,
    eval_plain,
    parse,
    pretty,
    try_parse,
)
from oscdef.jets import extract_partial


def test_parse_gaussian():
    e = parse("exp(-x1^2)")
    assert isinstance(e, Call) and e.name == "exp"


def test_parse_imaginary():
    e = parse("x1*p1 + i")
    assert isinstance(e, BinOp) and isinstance(e.right, ImagUnit)


def test_unclosed_paren_offset():
    d = try_parse("exp(")
    assert isinstance(d, ParseDiagnostic)
    assert d.offset == 4


def test_unknown_identifier_offset():
    with pytest.raises(ExprParseError) as err:
        parse("2 + foo")
    assert err.value.offset == 4


def test_exponent_must_be_literal():
    with pytest.raises(ExprParseError):
        parse("x1^x1")


def test_eval_plain_examples():
    lay1 = VarLayout(0, 1)
    assert eval_plain(parse("exp(-x1^2)"), np.array([0.0]), lay1) == pytest.approx(1.0)
    lay2 = VarLayout(1, 1)
    # point layout is (p1, x1)
    v = eval_plain(parse("x1*p1"), np.array([3.0, 2.0]), lay2)
    assert v == pytest.approx(6.0)
    v = eval_plain(parse("1/(i+x1)"), np.array([0.0]), lay1)
    assert v == pytest.approx(-1j)


def test_eval_plain_division_by_zero():
    with pytest.raises(ExprEvalError):
        eval_plain(parse("1/x1"), np.array([0.0]), VarLayout(0, 1))


def test_eval_jet_examples():
    lay1 = VarLayout(0, 1)
    j = eval_jet(parse("exp(-x1^2)"), np.array([0.0]), (2,), lay1)
    assert np.allclose(j.coeffs, [1.0, 0.0, -1.0])
    lay2 = VarLayout(1, 1)
    j = eval_jet(parse("x1*p1"), np.array([0.0, 0.0]), (1, 1), lay2)
    expect = np.zeros((2, 2))
    expect[1, 1] = 1.0
    assert np.allclose(j.coeffs, expect)
    j = eval_jet(parse("sqrt(1+x1^2)"), np.array([0.0]), (2,), lay1)
    assert np.allclose(j.coeffs, [1.0, 0.0, 0.5])


def test_gauss_sugar():
    lay = VarLayout(0, 2)
    v = eval_plain(parse("gauss(x1, x2)"), np.array([1.0, 2.0]), lay)
    assert v == pytest.approx(np.exp(-2.5))


def test_jet_constant_term_matches_plain():
    lay = VarLayout(1, 1)
    e = parse("exp(-p1^2) * (1 + x1) / (2 + x1^2)")
    pt = np.array([0.7, -0.4])
    plain = eval_plain(e, pt, lay)
    j = eval_jet(e, pt, (2, 2), lay)
    assert j.constant_term == plain  # exact equality demanded


# ---------------------------------------------------------------------------
# random expressions: round trips, crash-freedom, derivative checks

_ATOMS = [Num(0.5), Num(2.0), Num(1.5), Var("x", 1), Var("x", 2)]


@st.composite
def real_exprs(draw, depth=0):
    if depth >= 3:
        return draw(st.sampled_from(_ATOMS))
    choice = draw(st.integers(0, 7))
    if choice <= 1:
        return draw(st.sampled_from(_ATOMS))
    a = draw(real_exprs(depth=depth + 1))
    b = draw(real_exprs(depth=depth + 1))
    if choice == 2:
        return BinOp("+", a, b)
    if choice == 3:
        return BinOp("-", a, b)
    if choice == 4:
        return BinOp("*", a, b)
    if choice == 5:
        return Call("sin", (a,))
    if choice == 6:
        return Call("gauss", (a,))
    return BinOp("/", a, BinOp("+", Num(2.0), Pow(b, 2.0)))


@given(real_exprs())
@settings(max_examples=80, deadline=None)
def test_pretty_parse_fixpoint(e):
    text = pretty(e)
    reparsed = parse(text)
    assert pretty(reparsed) == text
    assert parse(pretty(reparsed)) == reparsed


@given(real_exprs())
@settings(max_examples=40, deadline=None)
def test_random_exprs_evaluate(e):
    lay = VarLayout(0, 2)
    pts = np.array([[0.3, -1.1], [0.8, 0.2]])
    vals = eval_plain(e, pts, lay)
    assert np.all(np.isfinite(vals))
    j = eval_jet(e, np.array([0.3, -0.2]), (1, 1), lay)
    assert np.all(np.isfinite(j.coeffs))


@given(st.text(alphabet="xp12+-*/^()ei. ", max_size=24))
@settings(max_examples=120, deadline=None)
def test_fuzz_never_panics(text):
    out = try_parse(text)
    if isinstance(out, ParseDiagnostic):
        assert 0 <= out.offset <= len(text)


# spec-pinned finite-difference cross-check at h = 1e-4 for |mu| <= 2;
# the absolute floor reflects float64 rounding noise eps*f/h^2 of the
# second-difference stencil at that step
def _fd(e, lay, point, mu, h=1e-4):
    point = np.asarray(point, dtype=float)

    def f(shift):
        return complex(eval_plain(e, point + shift, lay))

    k = len(point)
    if sum(mu) == 1:
        ax = mu.index(1)
        s = np.zeros(k)
        s[ax] = h
        return (f(s) - f(-s)) / (2 * h)
    if mu.count(2) == 1 and sum(mu) == 2:
        ax = mu.index(2)
        s = np.zeros(k)
        s[ax] = h
        return (f(s) - 2 * f(np.zeros(k)) + f(-s)) / h**2
    axes = [i for i, v in enumerate(mu) if v == 1]
    s1 = np.zeros(k)
    s2 = np.zeros(k)
    s1[axes[0]] = h
    s2[axes[1]] = h
    return (f(s1 + s2) - f(s1 - s2) - f(-s1 + s2) + f(-s1 - s2)) / (4 * h**2)


def test_jets_match_low_order_differences_at_spec_step():
    rng = np.random.default_rng(11)
    lay = VarLayout(0, 2)
    exprs = [
        "exp(-x1^2-x2^2)",
        "sin(x1)*cos(x2)",
        "(1+x1)/(2+x2^2)",
        "gauss(x1, x2)*x2",
        "sqrt(1+x1^2+x2^2)",
    ]
    for text in exprs:
        e = parse(text)
        for _ in range(20):
            pt = rng.uniform(-2, 2, 2)
            for mu in [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1)]:
                j = eval_jet(e, pt, mu, lay)
                jv = complex(extract_partial(j, mu))
                fv = _fd(e, lay, pt, list(mu) if isinstance(mu, tuple) else mu)
                tol = 1e-5 * max(abs(jv), abs(fv)) + 2e-7
                assert abs(jv - fv) <= tol, (text, pt, mu, jv, fv)
