import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pebble_dryer.efficiency import (SurfaceMode, efficiency_full, efficiency_rate,
                                     efficiency_simplified, elasticities, sensitivities,
                                     surface_from_csv, surface_sweep, surface_to_csv)
from pebble_dryer.errors import UndefinedQuantityError
from pebble_dryer.params import PlantParameters


def random_triples(n=1000, seed=7):
    rng = np.random.default_rng(seed)
    T_amb = rng.uniform(250.0, 330.0, n)
    T_e = T_amb + rng.uniform(5.0, 600.0, n)
    T_in = T_e + rng.uniform(5.0, 700.0, n)
    return T_in, T_e, T_amb


# full form -----------------------------------------------------------------------

def test_full_arithmetic():
    p = PlantParameters(LH=2.0e6, HV=40e6)
    b = efficiency_full(2.0, 0.2, 0.1, 0.02, 0.0, 400.0, 293.0, p)
    assert b.eta == pytest.approx(0.5)
    assert b.warnings == []
    assert efficiency_full(2.0, 0.1, 0.1, 0.02, 0.3, 400.0, 293.0, p).eta == 0.0


def test_full_flags_table_values(params):
    b = efficiency_full(2.5, 0.15, 0.05, 0.012, 0.25, 370.0, 293.0, params)
    assert b.eta > 1
    assert any("565 kW" in w and "510 kW" in w for w in b.warnings)


def test_full_rejects_zero_fuel(params):
    with pytest.raises(UndefinedQuantityError):
        efficiency_full(5.0, 0.15, 0.05, 0.0, 0.25, 370.0, 293.0, params)


def test_full_flags_cold_exhaust(params):
    b = efficiency_full(1.0, 0.15, 0.05, 0.012, 0.25, 280.0, 293.0, params)
    assert b.q_loss < 0 and any("below ambient" in w for w in b.warnings)


# simplified form and its derivatives ----------------------------------------------

def test_simplified_examples():
    assert efficiency_simplified(720.0, 370.0, 293.0) == pytest.approx(0.819672, abs=1e-6)
    assert efficiency_simplified(720.0, 293.0, 293.0) == 1.0
    assert efficiency_simplified(720.0, 720.0, 293.0) == 0.0
    with pytest.raises(UndefinedQuantityError):
        efficiency_simplified(293.0, 280.0, 293.0)


def test_sensitivity_examples():
    s = sensitivities(720.0, 370.0, 293.0)
    assert s.d_eta_d_Te == pytest.approx(-2.3419e-3, rel=1e-4)
    assert s.d_eta_d_Tin == pytest.approx(4.2231e-4, rel=1e-4)
    assert sensitivities(720.0, 293.0, 293.0).d_eta_d_Tin == 0.0


def test_elasticity_examples():
    e = elasticities(720.0, 370.0, 293.0)
    assert e.e_Tin == pytest.approx(0.37096, abs=1e-5)
    assert e.e_Te == pytest.approx(-1.05714, abs=1e-5)
    assert e.e_Tamb == pytest.approx(0.68618, abs=1e-5)
    assert abs(e.total) < 1e-12
    assert elasticities(720.0, 293.0, 293.0).e_Tin == 0.0
    with pytest.raises(UndefinedQuantityError):
        elasticities(720.0, 720.0, 293.0)


def central(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h)


def test_sensitivities_match_finite_differences():
    T_in, T_e, T_amb = random_triples()
    s = sensitivities(T_in, T_e, T_amb)
    h = 1e-3
    fd = {
        "Tin": central(lambda v: efficiency_simplified(v, T_e, T_amb), T_in, h),
        "Te": central(lambda v: efficiency_simplified(T_in, v, T_amb), T_e, h),
        "Tamb": central(lambda v: efficiency_simplified(T_in, T_e, v), T_amb, h),
    }
    for name, analytic in (("Tin", s.d_eta_d_Tin), ("Te", s.d_eta_d_Te), ("Tamb", s.d_eta_d_Tamb)):
        rel = np.abs(fd[name] - analytic) / np.abs(analytic)
        assert rel.max() < 1e-6, name
    assert np.all(s.d_eta_d_Te < 0)


def test_elasticity_sum_vanishes():
    e = elasticities(*random_triples())
    assert np.max(np.abs(e.total)) < 1e-12


def test_offset_invariance():
    T_in, T_e, T_amb = random_triples()
    c = np.random.default_rng(3).uniform(-50.0, 50.0, T_in.size)
    base = efficiency_simplified(T_in, T_e, T_amb)
    moved = efficiency_simplified(T_in + c, T_e + c, T_amb + c)
    assert np.max(np.abs(moved - base)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(T_amb=st.floats(200.0, 350.0), dT=st.floats(1.0, 1000.0), frac=st.floats(0.0, 1.0))
def test_eta_stays_in_unit_interval_between_anchors(T_amb, dT, frac):
    T_in = T_amb + dT
    T_e = T_amb + frac * dT
    eta = efficiency_simplified(T_in, T_e, T_amb)
    assert -1e-12 <= eta <= 1 + 1e-12
    assert eta == pytest.approx(1 - frac, abs=1e-9)


# rate form ------------------------------------------------------------------------------

def smooth_signals(t):
    return {
        "F_s": 5.0 + 0.3 * math.sin(0.01 * t),
        "X_in": 0.15 + 0.02 * math.cos(0.02 * t),
        "X_out": 0.05 + 0.01 * math.sin(0.015 * t),
        "mdot_fuel": 0.012 + 0.002 * math.sin(0.005 * t),
        "mdot_stack": 0.25 + 0.05 * math.cos(0.01 * t),
        "T_e": 400.0 + 30.0 * math.sin(0.003 * t),
    }


def eta_at(params, t):
    v = smooth_signals(t)
    return efficiency_full(v["F_s"], v["X_in"], v["X_out"], v["mdot_fuel"], v["mdot_stack"],
                           v["T_e"], 293.0, params).eta


@pytest.mark.parametrize("t", [10.0, 137.0, 420.0, 911.0])
def test_rate_matches_derivative_of_full_form(params, t):
    h = 1e-3
    rates = {k: (smooth_signals(t + h)[k] - smooth_signals(t - h)[k]) / (2 * h)
             for k in smooth_signals(t)}
    analytic = efficiency_rate(smooth_signals(t), rates, params, 293.0)
    fd = (eta_at(params, t + h) - eta_at(params, t - h)) / (2 * h)
    assert analytic == pytest.approx(fd, rel=1e-6)


def test_rate_constant_inputs_and_fuel_sign(params):
    v = smooth_signals(0.0)
    zero = dict.fromkeys(v, 0.0)
    for form in ("exact", "printed"):
        assert efficiency_rate(v, zero, params, 293.0, form=form) == 0.0
        rising = dict(zero, mdot_fuel=1e-4)
        assert efficiency_rate(v, rising, params, 293.0, form=form) < 0


def test_printed_rate_is_first_order_accurate(params):
    # negligible stack loss: the dropped terms all carry L/I
    v = dict(smooth_signals(0.0), mdot_stack=1e-4)
    r = {k: 1e-3 * (i + 1) for i, k in enumerate(v)}
    r.update(mdot_stack=1e-7, T_e=1e-3)
    exact = efficiency_rate(v, r, params, 293.0)
    printed = efficiency_rate(v, r, params, 293.0, form="printed")
    assert printed == pytest.approx(exact, rel=1e-3)


def test_rate_errors(params):
    v = smooth_signals(0.0)
    with pytest.raises(KeyError, match="T_e"):
        efficiency_rate(v, {k: 0.0 for k in v if k != "T_e"}, params, 293.0)
    with pytest.raises(ValueError):
        efficiency_rate(v, dict.fromkeys(v, 0.0), params, 293.0, form="nope")


# surfaces ---------------------------------------------------------------------------------

def test_surface_counts():
    assert surface_sweep("fix_Tamb").n_cells == 2500
    assert surface_sweep("fix_Te", axis1=[600, 700], axis2=[280, 300]).n_cells == 4


def test_fix_tamb_decreasing_in_te():
    g = surface_sweep(SurfaceMode.FIX_TAMB)
    assert np.all(np.diff(g.values, axis=1) < 0)


def test_fix_tin_derivative_constant_along_te():
    g = surface_sweep("fix_Tin", quantity="d_eta_d_Te")
    assert g.axis1_name == "T_e"
    assert np.all(np.ptp(g.values, axis=0) == 0.0)


def test_surface_zero_where_te_equals_tin():
    g = surface_sweep("fix_Tamb", axis1=[500.0, 600.0], axis2=[500.0, 600.0])
    assert g.values[0, 0] == 0.0 and g.values[1, 1] == 0.0


def test_surface_masks_degenerate_cells():
    g = surface_sweep("fix_Te", axis1=[290.0, 293.0, 296.0], axis2=[293.0])
    assert g.degenerate[1, 0] and np.isnan(g.values[1, 0])
    assert g.degenerate.sum() == 1


@pytest.mark.parametrize("axis1", [[], [600.0, 600.0], [600.0, 700.0, 650.0]])
def test_surface_rejects_bad_axes(axis1):
    with pytest.raises(ValueError):
        surface_sweep("fix_Tamb", axis1=axis1)


def test_surface_csv_round_trip(tmp_path):
    g = surface_sweep("fix_Te", axis1=np.linspace(1000, 300, 7), axis2=[263.0, 293.0, 323.0],
                      quantity="d_eta_d_Tin")
    path = tmp_path / "s.csv"
    surface_to_csv(g, path)
    back = surface_from_csv(path)
    assert (back.axis1_name, back.axis2_name, back.fixed_name, back.quantity) == \
        (g.axis1_name, g.axis2_name, g.fixed_name, g.quantity)
    np.testing.assert_allclose(back.axis1, g.axis1)
    np.testing.assert_allclose(back.values, g.values, rtol=1e-8)
    np.testing.assert_array_equal(back.degenerate, g.degenerate)
