"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path
from importlib import resources

import numpy as np

from . import plotting
from .config import RunConfig, load_config
from .control import (g1_model, g2_factorize, g3_model, imc_compensator_g2, imc_compensator_g3,
                      lambda2_diagnostics, lambda2_tuning, loop_shaping_report, pi_direct_synthesis,
                      stack_gain)
from .efficiency import SurfaceMode, SurfaceQuantity, surface_sweep, surface_to_csv
from .errors import ConfigError, DryerError
from .foms import deviation_notes, report_to_json, trace_foms
from .linearize import alpha_coefficients, assemble_coefficient_model, compare_models, numeric_jacobian
from .loops import design_loops
from .model import ModelVariant
from .simulate import Trace, closed_loop_simulate, load_scenario, operating_point_scenario
from .steady import operating_point_from_dict

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep the message on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def default_config_path() -> Path:
    return Path(str(resources.files("pebble_dryer") / "data" / "default_config.json"))


def _config(args) -> RunConfig:
    cfg = load_config(args.config or default_config_path())
    if getattr(args, "variant", None):
        cfg.variant = ModelVariant.parse(args.variant)
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out) if args.out else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o)}")


def _matrix_csv(path: Path, M: np.ndarray, rows, cols) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state"] + list(cols))
        for label, row in zip(rows, M):
            w.writerow([label] + [f"{v:.12g}" for v in row])


def read_matrix_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    cols = rows[0][1:]
    labels = [r[0] for r in rows[1:]]
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]]), labels, cols


# subcommands -------------------------------------------------------------------

def cmd_steady(args) -> int:
    cfg = _config(args)
    op = cfg.operating_point()
    out = _out_dir(args, cfg)
    doc = op.to_dict()
    doc["residual_norm_determined_rows"] = op.norm()
    doc["excluded_rows"] = [5, 10]
    _write_json(out / "operating_point.json", doc)
    uv = op.uv
    print(f"mdot_chamber_to_windbox_ss = {uv.mdot_chamber_to_windbox:.6g} kg/s")
    print(f"mdot_gas_out_ss = {uv.mdot_gas_out:.6g} kg/s, mdot_stack_ss = {uv.mdot_stack:.6g} kg/s")
    print(f"T_chamber = {uv.T_chamber:.6g} K, T_windbox = {uv.T_windbox:.6g} K, "
          f"T_dryergas = {uv.T_dryergas:.6g} K, T_exhaust = {uv.T_exhaust:.6g} K")
    print(f"residual norm (determined rows) = {op.norm():.3g}")
    print(f"wrote {out / 'operating_point.json'}")
    return EXIT_OK


def _load_op(args, cfg):
    consts = cfg.consts()
    if args.op:
        try:
            data = json.loads(Path(args.op).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"--op: cannot read {args.op}: {exc}") from None
        return operating_point_from_dict(data, consts), consts
    return cfg.operating_point(), consts


def cmd_linearize(args) -> int:
    cfg = _config(args)
    op, consts = _load_op(args, cfg)
    jac = numeric_jacobian(op, op.inputs(), consts, cfg.variant)
    stencil = assemble_coefficient_model(alpha_coefficients(op, consts))
    chosen = stencil if args.source == "paper" else jac
    out = _out_dir(args, cfg)
    _matrix_csv(out / f"A_{args.source}.csv", chosen.A, chosen.state_labels, chosen.state_labels)
    _matrix_csv(out / f"B_{args.source}.csv", chosen.B, chosen.state_labels, chosen.input_labels)
    report = compare_models(stencil, jac)
    doc = report.to_dict()
    doc["first"], doc["second"] = "paper", "jacobian"
    doc["alphas"] = alpha_coefficients(op, consts).as_dict()
    _write_json(out / "discrepancy.json", doc)
    print(f"{args.source} model written; {len(report.entries)} element(s) differ between the "
          f"alpha-coefficient and Jacobian matrices")
    for e in report.entries:
        print(f"  {e['matrix']}[{e['row_label']},{e['col_label']}]: "
              f"{e['first']:.6g} vs {e['second']:.6g}")
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = _config(args)
    op = cfg.operating_point()
    consts = cfg.consts()
    alphas = alpha_coefficients(op, consts)
    out = _out_dir(args, cfg)
    doc = {"loop": args.loop}
    failure = None
    if args.loop == "g1":
        model = g1_model(op, cfg.params.M_solid)
        tau_c = args.tau_c or cfg.tuning.tau_c or model.tau / 3.0
        pi = pi_direct_synthesis(model, tau_c)
        doc.update({"K1": model.K1, "tau_s": model.tau, "k_x": model.k_x, "tau_c_s": tau_c,
                    "Kc": pi.Kc, "tau_I_s": pi.tau_I,
                    "static_gain_from_balance": model.dc_gain,
                    "Kc_with_balance_gain": pi_direct_synthesis(model.rescaled(), tau_c).Kc})
    elif args.loop == "g2":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            parts = g2_factorize(alphas)
        diag = lambda2_diagnostics(alphas)
        doc.update({"plant": parts.plant.to_dict(), "rhp_zero": parts.rhp_zero,
                    "alpha_12": alphas[12], "lambda2_diagnostics": diag,
                    "warnings": [str(w.message) for w in caught]})
        lam = args.lam or cfg.tuning.lambda2
        try:
            if lam is None:
                lam = lambda2_tuning(alphas)
            design = imc_compensator_g2(alphas, lam, cfg.params.k_air_actuator)
            doc["lambda2_s"] = lam
            doc["floor_applied"] = bool(diag.get("floor_applied"))
            doc["design"] = design.to_dict()
        except DryerError as exc:
            failure = exc
            doc["design_error"] = str(exc)
    else:
        plant, z3 = g3_model(alphas)
        gs = stack_gain(cfg.params.k_fan, op.P_ss)
        lam = args.lam or cfg.tuning.lambda3
        design = imc_compensator_g3(alphas, lam, cfg.tuning.filter_order3 or 2, gs)
        doc.update({"plant": plant.to_dict(), "rhp_zero": z3, "lambda3_s": design.filter_lambda,
                    "stack_gain": gs, "design": design.to_dict(),
                    "compensator_poles": [[p.real, p.imag] for p in design.compensator.poles()]})
    if args.loop != "g1":
        loops = design_loops(cfg.plant(op), op, cfg.tuning)
        sim = loops.temperature if args.loop == "g2" else loops.pressure
        doc["simulation_design"] = sim.to_dict()
        doc["simulation_design"]["loop_shaping"] = loop_shaping_report(sim.compensator, sim.plant)
    path = out / f"tune_{args.loop}.json"
    _write_json(path, doc)
    print(json.dumps({k: v for k, v in doc.items() if not isinstance(v, dict)},
                     default=_json_default))
    print(f"wrote {path}")
    if failure is not None:
        print(f"numerical failure: {failure} (pass --lambda to force a filter time constant)",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def run_simulation(cfg: RunConfig, scenario_path=None, no_events: bool = False):
    """Build the loops and run the scenario; returns (trace, loops, scenario)."""
    op = cfg.operating_point()
    plant = cfg.plant(op)
    loops = design_loops(plant, op, cfg.tuning)
    if no_events:
        scenario = operating_point_scenario(op)
        if scenario_path or cfg.scenario_path:
            base = load_scenario(scenario_path or cfg.scenario_path)
            scenario.horizon = base.horizon
    else:
        path = scenario_path or cfg.scenario_path
        if path is None:
            raise ConfigError("simulation.scenario: no scenario file given")
        scenario = load_scenario(path)
    if cfg.step is not None and cfg.step != scenario.step:
        scenario.step = cfg.step
    trace = closed_loop_simulate(plant, loops, scenario, record_every=cfg.record_every)
    return trace, loops, scenario


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.lambda3:
        cfg.tuning = replace(cfg.tuning, lambda3=args.lambda3)
    t0 = time.perf_counter()
    trace, loops, scenario = run_simulation(cfg, args.scenario, args.no_events)
    elapsed = time.perf_counter() - t0
    out = _out_dir(args, cfg)
    trace.to_csv(out / "trace.csv")
    reports = trace_foms(trace)
    notes = deviation_notes(reports) + list(trace.notes) + list(loops.notes)
    (out / "foms.json").write_text(report_to_json(reports, notes, {
        "elapsed_s": elapsed, "loops": loops.to_dict()}) + "\n")
    plotting.plot_trace(trace, out / "trace.png")
    plotting.plot_efficiency(trace, out / "efficiency.png")
    for loop, rep in reports.items():
        print(f"{loop:12s} ISE={rep.ise:.4g} ov={rep.ov:.2f}% ess={rep.ess:.3f}%")
    for n in notes:
        print(f"note: {n}")
    print(f"simulated {scenario.horizon:g} s in {elapsed:.1f} s; wrote {out / 'trace.csv'}")
    return EXIT_OK


def cmd_foms(args) -> int:
    path = Path(args.trace)
    if not path.is_file():
        raise ConfigError(f"--trace: file not found: {path}")
    try:
        trace = Trace.from_csv(path)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"--trace: unreadable trace {path}: {exc}") from None
    window = tuple(args.window) if args.window else None
    reports = trace_foms(trace, window)
    text = report_to_json(reports, deviation_notes(reports))
    out = Path(args.out) if args.out else path.parent
    out.mkdir(parents=True, exist_ok=True)
    (out / "foms.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def _axis(spec):
    if spec is None:
        return None
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"axis spec {spec!r}: expected LO:HI:N") from None
    if n < 1:
        raise ConfigError(f"axis spec {spec!r}: empty grid")
    return np.linspace(lo, hi, n)


def cmd_surface(args) -> int:
    if args.n < 1:
        raise ConfigError(f"--n: empty grid ({args.n} points per axis)")
    try:
        grid = surface_sweep(args.mode, args.fixed, _axis(args.axis1), _axis(args.axis2),
                             args.quantity, args.n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out) if args.out else Path("out")
    out.mkdir(parents=True, exist_ok=True)
    stem = f"surface_{args.mode}_{args.quantity}"
    surface_to_csv(grid, out / f"{stem}.csv")
    plotting.plot_surface(grid, out / f"{stem}.png")
    print(f"wrote {out / (stem + '.csv')} ({grid.n_cells} cells, "
          f"{int(grid.degenerate.sum())} degenerate)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON (default: the packaged one)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--variant", choices=["paper", "consistent"],
                        help="gas-mass bookkeeping of the dryer-gas balance")

    p = _Parser(prog="pebble-dryer", description="Pebble-bed dryer model and control toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("steady", parents=[common], help="solve the operating point")
    s.set_defaults(func=cmd_steady)

    s = sub.add_parser("linearize", parents=[common], help="write A/B matrices and discrepancies")
    s.add_argument("--source", choices=["paper", "jacobian"], default="jacobian")
    s.add_argument("--op", help="operating point JSON written by `steady`")
    s.set_defaults(func=cmd_linearize)

    s = sub.add_parser("tune", parents=[common], help="design one loop compensator")
    s.add_argument("loop", choices=["g1", "g2", "g3"])
    s.add_argument("--tau-c", dest="tau_c", type=float, help="moisture closed-loop time constant [s]")
    s.add_argument("--lambda", dest="lam", type=float, help="IMC filter time constant [s]")
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("simulate", parents=[common], help="run the closed-loop scenario")
    s.add_argument("--scenario", help="scenario JSON (default: the one named in the config)")
    s.add_argument("--no-events", action="store_true", help="start at rest at the operating point")
    s.add_argument("--lambda3", type=float, help="override the pressure filter time constant [s]")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("foms", parents=[common], help="score a trace CSV")
    s.add_argument("--trace", required=True)
    s.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    s.set_defaults(func=cmd_foms)

    s = sub.add_parser("surface", parents=[common], help="efficiency surface CSV")
    s.add_argument("--mode", choices=[m.value for m in SurfaceMode], default="fix_Tamb")
    s.add_argument("--quantity", choices=[q.value for q in SurfaceQuantity], default="eta")
    s.add_argument("--n", type=int, default=50, help="points per axis")
    s.add_argument("--fixed", type=float, help="value of the held temperature [K]")
    s.add_argument("--axis1", help="LO:HI:N for the first axis")
    s.add_argument("--axis2", help="LO:HI:N for the second axis")
    s.set_defaults(func=cmd_surface)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DryerError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
