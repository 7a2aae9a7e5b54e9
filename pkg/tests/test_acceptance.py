"""Acceptance criteria 1-8, one PASS/FAIL line each.

The lines are printed as each check runs (visible with ``-s``) and repeated
in the terminal summary by conftest.py. Run directly with
``python3 tests/test_acceptance.py``.
"""

import dataclasses
import math
import time
import warnings

import numpy as np
import pytest

from conftest import table_kv
from pebble_dryer.cli import default_config_path
from pebble_dryer.config import load_config
from pebble_dryer.control import (MoistureLoopModel, closest_pole_distance,
                                  complementary_sensitivity, direct_synthesis,
                                  imc_compensator_g2, imc_compensator_g3, pi_direct_synthesis)
from pebble_dryer.efficiency import efficiency_simplified, elasticities, sensitivities
from pebble_dryer.errors import IntegrationBlowUp
from pebble_dryer.foms import deviation_notes, trace_foms
from pebble_dryer.linearize import (AlphaCoefficients, alpha_coefficients, assemble_coefficient_model,
                                    central_jacobian, compare_models, numeric_jacobian)
from pebble_dryer.loops import EvaporationClosure, design_loops
from pebble_dryer.params import PlantParameters, derive_constants
from pebble_dryer.simulate import closed_loop_simulate, integrate, load_scenario
from pebble_dryer.steady import UV_ORDER, UnknownVariables, closed_form_op, newton_solve, residuals
from pebble_dryer.steady import build_operating_point
from pebble_dryer.tf import RationalTransferFunction as TF

RESULTS = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def base():
    consts = derive_constants(PlantParameters())
    kv = table_kv()
    return consts, kv, build_operating_point(kv, consts)


def test_criterion_1_steady_state(base):
    consts, kv, _ = base
    t0 = time.perf_counter()
    uv = closed_form_op(kv, consts)
    elapsed = time.perf_counter() - t0
    op = build_operating_point(kv, consts)
    # rows 5 (bed water) and 10 (draft) are not solved by the closed form
    worst_res = op.norm()
    worst_newton = 0.0
    for factor in (0.8, 1.2):
        guess = UnknownVariables(*[getattr(uv, n) * factor for n in UV_ORDER])
        nv = newton_solve(kv, consts, guess)
        worst_newton = max(worst_newton, max(abs(getattr(nv, n) - getattr(uv, n)) / max(abs(getattr(uv, n)), 1e-300)
                                             for n in UV_ORDER))
    ok = worst_res < 1e-9 and worst_newton < 1e-8 and elapsed < 0.01
    record(1, ok, f"max scaled residual {worst_res:.2e} (< 1e-9), Newton +-20% deviation "
                  f"{worst_newton:.2e} (< 1e-8), closed form {elapsed * 1e3:.2f} ms (< 10 ms)")


def test_criterion_2_flow_chain(base):
    consts, kv, _ = base
    uv = closed_form_op(kv, consts)
    ok = (uv.mdot_chamber_to_windbox == 0.262 and uv.mdot_windbox_to_dryer == 0.262
          and abs(uv.mdot_gas_out - 0.25) <= math.ulp(0.25) and uv.mdot_stack == uv.mdot_gas_out)
    record(2, ok, f"chamber->windbox {uv.mdot_chamber_to_windbox!r}, gas out {uv.mdot_gas_out!r}, "
                  f"stack {uv.mdot_stack!r} kg/s")


def test_criterion_3_linearization(base):
    consts, _, op = base
    rng = np.random.default_rng(7)
    M, N = rng.normal(size=(10, 10)), rng.normal(size=(10, 14))
    x, u = rng.uniform(1.0, 10.0, 10), rng.uniform(0.5, 5.0, 14)
    A, B = central_jacobian(lambda x, u: M @ x + N @ u, x, u, rel_step=1e-3)
    synth = max(np.max(np.abs(A - M)), np.max(np.abs(B - N)))

    jac = numeric_jacobian(op, op.inputs(), consts)
    half = numeric_jacobian(op, op.inputs(), consts, step=0.5e-6)
    rich = max(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))
               for a, b in ((jac.A, half.A), (jac.B, half.B)))
    mass_rows = max(np.max(np.abs(jac.A[r])) for r in (0, 2, 4, 7))

    alphas = alpha_coefficients(op, consts)
    stencil_model = assemble_coefficient_model(alphas)
    stencil = (np.array_equal(stencil_model.B[0], [1, 1, -1] + [0] * 11)
               and all(not stencil_model.A[r].any() for r in (0, 2, 4, 7))
               and np.array_equal(stencil_model.C, np.eye(10)) and not stencil_model.D.any())
    report = compare_models(stencil_model, jac)
    listed = len(report.entries) > 0 and len(report.to_dict()["entries"]) == len(report.entries)
    ok = synth < 1e-10 and rich < 1e-6 and mass_rows < 1e-9 and stencil and listed
    record(3, ok, f"synthetic recovery {synth:.1e} (< 1e-10), Richardson {rich:.1e} (< 1e-6), "
                  f"rows 1/3/5/8 max {mass_rows:.1e}, stencil {'ok' if stencil else 'broken'}, "
                  f"{len(report.entries)} discrepancies listed")


def _identity_error(design, points):
    T = complementary_sensitivity(design.compensator, design.plant)
    target = design.noninvertible_part * design.filter
    return max(abs(complex(T(s)) - complex(target(s))) / abs(complex(target(s))) for s in points)


def test_criterion_4_control_identities(base):
    consts, _, op = base
    rng = np.random.default_rng(11)
    points = rng.uniform(-2, 2, 20) + 1j * rng.uniform(0.05, 3, 20)
    default_alphas = alpha_coefficients(op, consts)
    synthetic = AlphaCoefficients.from_mapping({12: 0.5, 5: 2.0}, default=1.0)

    t0 = time.perf_counter()
    # (a) direct synthesis against a first-order target is the PI with tau_I = tau
    g1 = MoistureLoopModel(1.0, 1.2033e-4, 332.41)
    tau_c = g1.tau / 3
    ds = direct_synthesis(g1.transfer_function(), TF([1.0], [1.0, tau_c]), reduce=False)
    pi = pi_direct_synthesis(g1, tau_c)
    pi_ok = ds.equals(pi.transfer_function(), rtol=1e-12) and pi.tau_I == g1.tau
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        designs = [imc_compensator_g2(synthetic, 1.5), imc_compensator_g2(default_alphas, 2.0),
                   imc_compensator_g3(default_alphas),
                   imc_compensator_g3(AlphaCoefficients.from_mapping({27: 2.0, 26: 1.0}, default=1.0), 8.0)]
    elapsed = time.perf_counter() - t0

    # (b) nominal complementary sensitivity
    ident = max(_identity_error(d, points) for d in designs)
    # (c) no compensator pole on a preserved RHP zero or origin pole
    gap = min(closest_pole_distance(d.compensator, [0.0] + ([d.rhp_zero] if d.rhp_zero else []))
              for d in designs)
    ok = pi_ok and ident < 1e-9 and gap > 1e-6 and elapsed < 0.1
    record(4, ok, f"DS==PI {'exact' if pi_ok else 'mismatch'}, IMC identity {ident:.1e} (< 1e-9), "
                  f"closest pole to kept zero/origin {gap:.2e} (> 1e-6), synthesis {elapsed * 1e3:.1f} ms")


def test_criterion_5_closed_loop_scenario():
    cfg = load_config(default_config_path())
    op = cfg.operating_point()
    plant = cfg.plant(op)
    loops = design_loops(plant, op, cfg.tuning)
    scenario = load_scenario(cfg.scenario_path)
    t0 = time.perf_counter()
    trace = closed_loop_simulate(plant, loops, scenario)
    elapsed = time.perf_counter() - t0
    reps = trace_foms(trace)
    notes = deviation_notes(reps)
    within = all(0.1 <= r.ise / {"moisture": 0.021, "temperature": 1.84e5, "pressure": 3.10e8}[k] <= 10
                 for k, r in reps.items())
    ok = (elapsed < 60 and scenario.step == 0.01 and scenario.horizon == 2000.0
          and all(r.ov < 20 and r.ess < 5 for r in reps.values()) and (within or bool(notes)))
    summary = ", ".join(f"{k} ov {r.ov:.1f}% ess {r.ess:.2f}% ISE {r.ise:.3g}" for k, r in reps.items())
    record(5, ok, f"{summary}; {elapsed:.1f} s (< 60 s); {len(notes)} ISE deviation note(s)")


def test_criterion_6_efficiency_math():
    rng = np.random.default_rng(5)
    T_amb = rng.uniform(250.0, 330.0, 1000)
    T_e = T_amb + rng.uniform(5.0, 600.0, 1000)
    T_in = T_e + rng.uniform(5.0, 700.0, 1000)
    s = sensitivities(T_in, T_e, T_amb)
    h = 1e-3
    fd = [(efficiency_simplified(T_in + h, T_e, T_amb) - efficiency_simplified(T_in - h, T_e, T_amb)) / (2 * h),
          (efficiency_simplified(T_in, T_e + h, T_amb) - efficiency_simplified(T_in, T_e - h, T_amb)) / (2 * h),
          (efficiency_simplified(T_in, T_e, T_amb + h) - efficiency_simplified(T_in, T_e, T_amb - h)) / (2 * h)]
    sens = max(np.max(np.abs(f - a) / np.abs(a))
               for f, a in zip(fd, (s.d_eta_d_Tin, s.d_eta_d_Te, s.d_eta_d_Tamb)))
    esum = np.max(np.abs(elasticities(T_in, T_e, T_amb).total))
    anchors = (np.all(efficiency_simplified(T_in, T_amb, T_amb) == 1.0)
               and np.all(efficiency_simplified(T_in, T_in, T_amb) == 0.0))
    c = rng.uniform(-50.0, 50.0, 1000)
    offset = np.max(np.abs(efficiency_simplified(T_in + c, T_e + c, T_amb + c)
                           - efficiency_simplified(T_in, T_e, T_amb)))
    ok = sens < 1e-6 and esum < 1e-12 and anchors and offset < 1e-12
    record(6, ok, f"sensitivity vs FD {sens:.1e} (< 1e-6), elasticity sum {esum:.1e} (< 1e-12), "
                  f"anchors {'exact' if anchors else 'off'}, offset shift {offset:.1e} (< 1e-12)")


def _eta_verdict(t, eta):
    late = eta[t >= 100.0]
    rises = float(np.max(np.diff(late))) if late.size > 1 else 0.0
    ok = eta[0] > 0.8 and 0.2 <= eta[-1] <= 0.5 and rises <= 0.0
    return ok, f"eta {eta[0]:.3f} -> {eta[-1]:.3f} at t = {t[-1]:.0f} s, largest rise after 100 s {rises:.2e}"


def test_criterion_7_efficiency_trajectory():
    """Undisturbed run with the falling-rate evaporation closure and bed energy state."""
    cfg = load_config(default_config_path())
    cfg.evaporation = EvaporationClosure.FALLING_RATE
    cfg.augment_bed = True
    op = cfg.operating_point()
    plant = cfg.plant(op)
    loops = design_loops(plant, op, cfg.tuning)
    scenario = load_scenario(cfg.scenario_path).without_events()
    try:
        trace = closed_loop_simulate(plant, loops, scenario)
    except IntegrationBlowUp as exc:
        # the frozen-rate run completes; report its trajectory next to the failure
        frozen = dataclasses.replace(plant, evaporation=EvaporationClosure.FROZEN)
        diag = closed_loop_simulate(frozen, design_loops(frozen, op, cfg.tuning), scenario)
        _, info = _eta_verdict(diag.t, diag["eta_d"])
        record(7, False, f"falling-rate run aborted: {exc}; frozen-rate run gives {info} "
                         "(the exhaust energy balance holds equilibrium eta above about 0.63, so the end band "
                         "[0.2, 0.5] is out of reach)")
        return
    ok, info = _eta_verdict(trace.t, trace["eta_d"])
    record(7, ok, info)


def test_criterion_8_integrator_order():
    exact = math.exp(-1.0)
    errs = [abs(integrate(lambda t, x: [-x[0]], [1.0], None, h, 1.0).x[-1, 0] - exact)
            for h in (0.1, 0.05)]
    ratio = errs[0] / errs[1]
    record(8, ratio >= 14.0, f"step-halving error ratio {ratio:.2f} (>= 14)")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
