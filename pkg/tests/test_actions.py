import numpy as np
import pytest

from oscdef import actions, symbols
from oscdef.actions import (
    ActionSpec,
    CompactTau,
    act,
    action_order_profile,
    chi_margin,
    compact_time_jet,
    growth_exponent_fit,
    growth_report_csv,
    growth_table,
    tau1,
    tau1_rk_only,
    tau_n,
    tau_partials,
)
from oscdef.exprdsl import VarLayout
from oscdef.symbols import SymbolUsageError, scalar_profile

TAU = CompactTau()


def test_identity_outside_support():
    for x in (-7.0, 0.1, 42.0):
        assert tau1(x, 1.5, TAU) == 1.5
        assert tau1(x, -1.0, TAU) == -1.0


def test_flow_at_time_zero():
    for y in (-0.9, -0.2, 0.0, 0.4, 0.99):
        assert tau1(0.0, y, TAU) == y


def test_closed_form_matches_rk():
    cf = tau1(2.0, 0.75, TAU)
    rk = tau1_rk_only(2.0, 0.75, TAU)
    assert abs(cf - rk) < 1e-9


def test_range_stays_inside():
    for x in (-50.0, -1.0, 2.0, 80.0):
        for y in (-0.95, -0.4, 0.3, 0.8):
            v = tau1(x, y, TAU)
            assert -1.0 < v < 1.0


def test_group_law_sampled():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        x, xp = rng.uniform(-3, 3, 2)
        y = rng.uniform(-1.5, 1.5)
        worst = max(worst, abs(tau1(x, tau1(xp, y, TAU), TAU) - tau1(x + xp, y, TAU)))
    assert worst <= 1e-8


def test_tau_n_fixed_when_any_component_outside():
    y = np.array([2.0, 0.3])
    for x in ([1.0, -0.5], [10.0, 3.0]):
        out = tau_n(np.asarray(x), y, TAU)
        assert np.array_equal(out, y)


def test_tau_n_reduces_componentwise_inside():
    x = np.array([0.7, -0.4])
    y = np.array([0.5, -0.2])
    out = tau_n(x, y, TAU)
    expect = np.array([tau1(0.7, 0.5, TAU), tau1(-0.4, -0.2, TAU)])
    assert np.allclose(out, expect, atol=1e-14)


def test_tau_n_group_law():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(25):
        x = rng.uniform(-2, 2, 2)
        xp = rng.uniform(-2, 2, 2)
        y = rng.uniform(-1.2, 1.2, 2)
        lhs = tau_n(x, tau_n(xp, y, TAU), TAU)
        rhs = tau_n(x + xp, y, TAU)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert worst <= 10 * TAU.ode_tol


def test_partials_exactness():
    assert tau_partials(0, 1, 0.0, 0.3, TAU) == pytest.approx(1.0)
    v = tau1(1.0, 0.3, TAU)
    assert tau_partials(1, 0, 1.0, 0.3, TAU) == pytest.approx(actions.L_value(v))
    # identity region: exactly zero x-derivatives, unit y-derivative
    assert tau_partials(1, 0, 3.0, 1.4, TAU) == 0.0
    assert tau_partials(0, 1, 3.0, 1.4, TAU) == 1.0


def test_mixed_partial_matches_differences():
    h = 1e-4
    for (x, y) in [(1.0, 0.3), (2.0, 0.45), (0.7, -0.6), (1.5, 0.75)]:
        fd = (
            tau1(x + h, y + h, TAU) - tau1(x + h, y - h, TAU)
            - tau1(x - h, y + h, TAU) + tau1(x - h, y - h, TAU)
        ) / (4 * h * h)
        an = tau_partials(1, 1, x, y, TAU)
        assert abs(an - fd) <= 1e-4 * max(1.0, abs(fd))


def test_partials_order_cap():
    with pytest.raises(SymbolUsageError):
        tau_partials(4, 3, 1.0, 0.3, TAU)


def test_compact_time_jet_consistency():
    tj = compact_time_jet(0.8, 0.3, 3, TAU)
    assert tj[0] == pytest.approx(tau1(0.8, 0.3, TAU))
    assert tj[1] == pytest.approx(tau_partials(1, 0, 0.8, 0.3, TAU))
    assert 2 * tj[2] == pytest.approx(tau_partials(2, 0, 0.8, 0.3, TAU))


def test_growth_fits_within_caps():
    mags = np.logspace(0, 2, 8)
    entries = growth_table([(0, 0), (0, 1), (0, 2)], mags, tau=TAU)
    by_l = {e.l: e for e in entries}
    assert by_l[0].fitted_exponent <= 0.2
    assert by_l[1].fitted_exponent <= 3.3
    assert by_l[2].fitted_exponent <= 5.5


def test_growth_degenerate_fit_is_zero():
    e = growth_exponent_fit(1, 0, [1.0, 10.0], y_grid=np.array([1.5, 2.0]), tau=TAU)
    assert e.fitted_exponent == 0.0


def test_growth_csv_columns():
    entries = growth_table([(0, 1)], [1.0, 10.0], y_grid=np.array([0.3, 0.6]), tau=TAU)
    text = growth_report_csv(entries)
    header = text.splitlines()[0]
    assert header == "k,l,fitted_exponent,target_exponent,residual,x_min,x_max"


def _gauss():
    return symbols.expr_symbol("exp(-x1^2)", layout=VarLayout(0, 1), m=0.0, rho=0.0,
                               decay_radius=7.0)


def test_act_translation_identity():
    f = _gauss()
    spec = ActionSpec("translation", 1)
    g = act(spec, [0.0], f)
    xs = np.linspace(-2, 2, 9)[None, :]
    assert np.allclose(g(xs), f(xs))


def test_act_phase_identity_at_zero():
    f = _gauss()
    spec = ActionSpec("phase", 1, B=np.array([[1.0]]))
    g = act(spec, [0.0], f)
    xs = np.linspace(-2, 2, 9)[None, :]
    assert np.allclose(g(xs), f(xs))


def test_act_compact_outside_support_exact():
    f = _gauss()
    spec = ActionSpec("compact", 1)
    for xval in (-3.0, 0.5, 12.0):
        g = act(spec, [xval], f)
        v = g(np.array([[3.0]]))[0, 0]
        assert v == f(np.array([[3.0]]))[0, 0]


def test_act_compact_jets_match_differences():
    f = _gauss()
    spec = ActionSpec("compact", 1)
    g = act(spec, [0.8], f)
    j = g.jet(np.array([0.3]), (2,))
    h = 1e-5

    def val(y):
        return float(np.real(g(np.array([[y]]))[0, 0]))

    fd1 = (val(0.3 + h) - val(0.3 - h)) / (2 * h)
    fd2 = (val(0.3 + h) - 2 * val(0.3) + val(0.3 - h)) / h**2
    from oscdef.jets import extract_partial

    assert abs(float(np.real(extract_partial(j, (1,))[0])) - fd1) < 1e-7
    assert abs(float(np.real(extract_partial(j, (2,))[0])) - fd2) < 1e-4


def test_act_compact_two_dimensional():
    f2 = symbols.expr_symbol("exp(-x1^2-x2^2)", layout=VarLayout(0, 2), m=0.0, rho=0.0)
    spec = ActionSpec("compact", 2)
    g = act(spec, [0.5, -0.3], f2)
    pt_out = np.array([[2.0], [0.3]])
    assert g(pt_out)[0, 0] == f2(pt_out)[0, 0]
    pt_in = np.array([[0.4], [0.2]])
    mapped = tau_n(np.array([0.5, -0.3]), np.array([0.4, 0.2]), TAU)
    assert g(pt_in)[0, 0] == pytest.approx(complex(f2(mapped[:, None])[0, 0]))


def test_generator_difference_quotients():
    f = _gauss()
    ys = np.linspace(-0.8, 0.8, 33)[None, :]
    cases = {
        "translation": (ActionSpec("translation", 1), lambda: _dgauss(ys)),
        "phase": (
            ActionSpec("phase", 1, B=np.array([[1.0]])),
            lambda: 1j * ys * f(ys),
        ),
        "compact": (
            ActionSpec("compact", 1),
            lambda: np.array([[actions.L_value(v) for v in ys[0]]]) * _dgauss(ys),
        ),
    }
    for name, (spec, gen) in cases.items():
        errs = []
        for h in (1e-2, 1e-3, 1e-4):
            diff = (act(spec, [h], f)(ys) - f(ys)) / h
            errs.append(float(np.max(np.abs(diff - gen()))))
        assert errs[0] > errs[1] > errs[2], (name, errs)


def _dgauss(ys):
    return -2 * ys * np.exp(-(ys**2))


def test_polynomial_boundedness_translation():
    f = _gauss()
    spec = ActionSpec("translation", 1)
    ys = np.linspace(-6, 6, 49)[None, :]
    sups = []
    for xmag in (1.0, 10.0, 100.0):
        g = act(spec, [xmag], f)
        sups.append(float(np.max(np.abs(g(ys)))))
    # order 0 for the sup seminorm: bounded uniformly in x
    assert max(sups) <= 1.0 + 1e-12


def test_action_order_profiles():
    base = scalar_profile(0.0, 0.0)
    prof = action_order_profile(ActionSpec("translation", 1), base, max_mu=2)
    assert all(v == 0.0 for v in prof.order.values())
    prof = action_order_profile(ActionSpec("phase", 1, B=np.eye(1)), base, max_mu=2)
    assert prof.order["schwartz m=0|mu=2"] == 2.0
    prof = action_order_profile(ActionSpec("compact", 1), base, max_mu=2)
    assert prof.order["K|l=2"] == 8.0
    assert all(r == 0.0 for r in prof.rho.values())


def test_chi_margin_regions():
    eps = 0.25
    t = np.array([0.0, 1.0, 1.1, 1.25, 2.0])
    v = chi_margin(t, eps)
    assert v[0] == 1.0 and v[1] == 1.0
    assert 0.0 < v[2] < 1.0
    assert v[3] == 0.0 and v[4] == 0.0


def test_group_law_all_variants_on_grids():
    f = _gauss()
    ys = np.linspace(-2.5, 2.5, 41)[None, :]
    specs = {
        "translation": ActionSpec("translation", 1),
        "phase": ActionSpec("phase", 1, B=np.array([[1.0]])),
        "compact": ActionSpec("compact", 1),
    }
    for name, spec in specs.items():
        x1, x2 = 0.8, -1.3
        lhs = act(spec, [x1], act(spec, [x2], f))(ys)
        rhs = act(spec, [x1 + x2], f)(ys)
        worst = float(np.max(np.abs(lhs - rhs)))
        tol = 0.0 if name != "compact" else 10 * TAU.ode_tol
        assert worst <= max(tol, 1e-14), (name, worst)


def test_polynomial_boundedness_remaining_variants():
    f = _gauss()
    ys = np.linspace(-3, 3, 41)[None, :]
    phase = ActionSpec("phase", 1, B=np.array([[1.0]]))
    sups = [float(np.max(np.abs(act(phase, [x], f)(ys)))) for x in (1.0, 10.0, 100.0)]
    assert max(sups) <= 1.0 + 1e-12
    compact = ActionSpec("compact", 1)
    # first y-derivative grows at most like (1 + x^2)^{b_1/2}, b_1 = 3
    ratios = []
    for x in (1.0, 10.0, 100.0):
        g = act(compact, [x], f)
        j = g.jet(np.linspace(-0.95, 0.95, 41)[None, :], (1,))
        sup = float(np.max(np.abs(j.coeffs[1])))
        ratios.append(sup / (1.0 + x * x) ** 1.5)
    assert max(ratios) <= max(ratios[0], 1.0) * 1.05
