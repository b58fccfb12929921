import json
from dataclasses import replace

import numpy as np
import pytest

from oscdef import oscint, symbols
from oscdef.exprdsl import VarLayout
from oscdef.oscint import (
    IntegralResult,
    Pairing,
    QuadraturePlan,
    battery_symbols,
    cutoff_limit_integral,
    default_plan_for,
    oscillatory_integral,
    select_s,
    verify_identities,
)
from oscdef.symbols import SymbolUsageError, scalar_profile

PAIRING = Pairing(1)


def test_select_s_examples():
    assert select_s(1, scalar_profile(0.0, 0.0)) == 3
    assert select_s(1, scalar_profile(2.0, 1.0)) == 4
    assert select_s(1, scalar_profile(0.0, -0.5)) == 5


def test_select_s_rejects_inadmissible():
    with pytest.raises(SymbolUsageError):
        select_s(1, scalar_profile(0.0, -1.0))
    with pytest.raises(SymbolUsageError):
        select_s(1, scalar_profile(0.0, 1.5))


def test_pairing_validation():
    with pytest.raises(SymbolUsageError):
        Pairing(1, np.array([[2.0]])).matrix()
    M = Pairing(1, np.array([[-1.0]])).matrix()
    assert M[0, 0] == -1.0


def test_plan_validation():
    with pytest.raises(SymbolUsageError):
        QuadraturePlan(radius=-1.0)
    with pytest.raises(SymbolUsageError):
        QuadraturePlan(gauss_order=32)
    with pytest.raises(SymbolUsageError):
        QuadraturePlan(refinement="bogus")


def test_plan_s_below_minimum_rejected():
    batt = battery_symbols()
    with pytest.raises(SymbolUsageError):
        oscillatory_integral(batt["gauss_px"], QuadraturePlan(s=1, radius=12.0), PAIRING)


def test_normalization_gaussian_small_radius():
    lay = VarLayout(1, 1)
    F = symbols.expr_symbol("exp(-p1^2-x1^2)", layout=lay, m=-6.0, rho=0.0)
    res = oscillatory_integral(F, QuadraturePlan(radius=10.0), PAIRING)
    assert res.value[0] == pytest.approx(1.0 / (2.0 * np.sqrt(1.25)), abs=1e-10)


def test_separable_matches_general_path():
    batt = battery_symbols()
    F = batt["gauss_px"]
    plan = QuadraturePlan(radius=12.0, refinement="none")
    split = oscint._split_separable(F, 1)
    assert split is not None
    v_sep, _ = oscint._integrate_separable(split, 3, PAIRING, plan)
    v_gen, _ = oscint._integrate_general(F, 3, PAIRING, plan)
    assert abs(v_sep[0] - v_gen[0]) < 1e-9


def test_linearity():
    batt = battery_symbols()
    F = batt["gauss_px"]
    G = batt["gauss_poly"]
    plan = QuadraturePlan(radius=14.0)
    rng = np.random.default_rng(3)
    a = complex(*rng.uniform(-1, 1, 2))
    b = complex(*rng.uniform(-1, 1, 2))
    lay = VarLayout(1, 1)
    combo = symbols.pointwise_product(
        symbols.expr_symbol(f"({a.real}+i*{a.imag}) + ({b.real}+i*{b.imag})*(1+p1)",
                            layout=lay, m=0.0, rho=0.0),
        batt["gauss_px"],
    )
    vF = oscillatory_integral(F, plan, PAIRING).value[0]
    vG = oscillatory_integral(G, plan, PAIRING).value[0]
    vC = oscillatory_integral(combo, plan, PAIRING).value[0]
    assert abs(vC - (a * vF + b * vG)) < 1e-8


def test_s_independence_battery():
    batt = battery_symbols()
    for name in ("gauss_x", "gauss_px", "gauss_skew", "gauss_schwartz"):
        F = batt[name]
        plan = default_plan_for(name)
        s0 = select_s(1, F.profile)
        r1 = oscillatory_integral(F, plan, PAIRING)
        r2 = oscillatory_integral(F, replace(plan, s=s0 + 1), PAIRING)
        diff = abs(r1.value[0] - r2.value[0])
        assert diff <= max(1e-5, float(r1.err[0] + r2.err[0])), name
        assert diff <= 1e-5, name


def test_cutoff_limit_matches_oscillatory():
    batt = battery_symbols()
    r = oscillatory_integral(batt["gauss_px"], default_plan_for("gauss_px"), PAIRING)
    c = cutoff_limit_integral(batt["gauss_px"])
    assert abs(r.value[0] - c.value[0]) < 1e-6


def test_cutoff_center_shift_invariance():
    batt = battery_symbols()
    a = cutoff_limit_integral(batt["gauss_px"])
    b = cutoff_limit_integral(batt["gauss_px"], center=np.array([3.0, -2.0]))
    assert abs(a.value[0] - b.value[0]) < 1e-4


def test_cutoff_constant_limit():
    batt = battery_symbols()
    c = cutoff_limit_integral(batt["const"])
    assert abs(c.value[0] - (0.7 + 0.2j)) < 1e-4


def test_cutoff_schedule_validation():
    batt = battery_symbols()
    with pytest.raises(SymbolUsageError):
        cutoff_limit_integral(batt["const"], schedule=(1.0, 0.5))
    with pytest.raises(SymbolUsageError):
        cutoff_limit_integral(batt["const"], schedule=(0.5, 1.0, 0.25))


def test_conjugation_rule():
    lay = VarLayout(1, 1)
    batt = battery_symbols()
    plan = default_plan_for("gauss_poly")
    lhs = np.conj(oscillatory_integral(batt["gauss_poly"], plan, PAIRING).value[0])
    flipped = symbols.pointwise_product(
        symbols.expr_symbol("(1-p1)*exp(-p1^2)", layout=lay, m=0.0, rho=0.0),
        batt["gauss_x"],
    )
    rhs = oscillatory_integral(flipped, plan, PAIRING).value[0]
    assert abs(lhs - rhs) < 1e-8


def test_nontrivial_pairing_sign():
    # M = -1 flips the phase; on an even Gaussian the value is conjugated
    batt = battery_symbols()
    plan = QuadraturePlan(radius=12.0)
    plus = oscillatory_integral(batt["gauss_px"], plan, Pairing(1)).value[0]
    minus = oscillatory_integral(batt["gauss_px"], plan, Pairing(1, np.array([[-1.0]]))).value[0]
    assert abs(plus - np.conj(minus)) < 1e-8


def test_verify_identities_all_pass():
    rows = verify_identities()
    assert rows, "battery must not be empty"
    for r in rows:
        assert r.passed, (r.identity, r.case, r.residual)


def test_result_json_schema():
    res = IntegralResult(np.array([1 + 2j]), np.array([0.5]), 3, 40.0, 12)
    rec = json.loads(res.to_json())
    assert rec["value"] == [[1.0, 2.0]]
    assert rec["err"] == [0.5]
    assert rec["s"] == 3 and rec["radius"] == 40.0 and rec["panels"] == 12


def test_refinement_none_reports_zero_error():
    batt = battery_symbols()
    res = oscillatory_integral(
        batt["gauss_schwartz"], QuadraturePlan(radius=10.0, refinement="none"), PAIRING
    )
    assert np.all(res.err == 0.0)
