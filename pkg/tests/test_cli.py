import csv
import json

import numpy as np
import pytest

from pebble_dryer.cli import default_config_path, main, read_matrix_csv
from pebble_dryer.efficiency import surface_from_csv
from pebble_dryer.foms import report_from_json
from pebble_dryer.simulate import TRACE_COLUMNS, Trace


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, edit):
    doc = json.loads(default_config_path().read_text())
    doc["simulation"]["scenario"] = str(default_config_path().parent / "disturbance_scenario.json")
    edit(doc)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


# steady ----------------------------------------------------------------------

def test_steady(capsys, tmp_path):
    code, out, _ = run(capsys, "steady", "--out", tmp_path)
    assert code == 0
    assert "mdot_chamber_to_windbox_ss = 0.262 kg/s" in out
    doc = json.loads((tmp_path / "operating_point.json").read_text())
    assert doc["excluded_rows"] == [5, 10]


def test_steady_malformed_config(capsys, tmp_path):
    cfg = write_config(tmp_path, lambda d: d["plant"].__setitem__("cp_air", 1005.0))
    code, _, err = run(capsys, "steady", "--config", cfg, "--out", tmp_path)
    assert code == 2 and "plant" in err and "cp_air" in err


def test_steady_zero_flows(capsys, tmp_path):
    def zero(d):
        d["operating_point"].update(mdot_fuel_kg_per_s=0.0, mdot_air_kg_per_s=0.0)
    code, _, err = run(capsys, "steady", "--config", write_config(tmp_path, zero), "--out", tmp_path)
    assert code == 3 and "numerical failure" in err


def test_usage_errors(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "tune", "g4")[0] == 2
    assert run(capsys, "surface", "--mode", "fix_nothing")[0] == 2


# linearize ---------------------------------------------------------------------

def test_linearize_both_sources(capsys, tmp_path):
    for source in ("paper", "jacobian"):
        code, out, _ = run(capsys, "linearize", "--source", source, "--out", tmp_path)
        assert code == 0
        A, rows, cols = read_matrix_csv(tmp_path / f"A_{source}.csv")
        B, _, bcols = read_matrix_csv(tmp_path / f"B_{source}.csv")
        assert A.shape == (10, 10) and B.shape == (10, 14)
        assert rows[0] == "m_chamber" and bcols[0] == "mdot_fuel"
    assert not np.array_equal(read_matrix_csv(tmp_path / "A_paper.csv")[0],
                              read_matrix_csv(tmp_path / "A_jacobian.csv")[0])
    doc = json.loads((tmp_path / "discrepancy.json").read_text())
    assert len(doc["entries"]) > 0
    assert f"{len(doc['entries'])} element(s) differ" in out


def test_linearize_rejects_edited_op(capsys, tmp_path):
    assert run(capsys, "steady", "--out", tmp_path)[0] == 0
    path = tmp_path / "operating_point.json"
    doc = json.loads(path.read_text())
    doc["unknown"]["T_chamber"] += 50.0
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "linearize", "--op", path, "--out", tmp_path)
    assert code == 3 and "residual" in err


def test_linearize_unreadable_op(capsys, tmp_path):
    code, _, _ = run(capsys, "linearize", "--op", tmp_path / "missing.json", "--out", tmp_path)
    assert code == 2


# tune -------------------------------------------------------------------------------

def test_tune_g1(capsys, tmp_path):
    assert run(capsys, "tune", "g1", "--tau-c", 332.41, "--out", tmp_path)[0] == 0
    doc = json.loads((tmp_path / "tune_g1.json").read_text())
    assert doc["tau_I_s"] == doc["tau_s"]
    assert doc["Kc"] == pytest.approx(8310.2, rel=1e-4)


def test_tune_g2_default_is_untunable(capsys, tmp_path):
    code, _, err = run(capsys, "tune", "g2", "--out", tmp_path)
    assert code == 3 and "--lambda" in err
    doc = json.loads((tmp_path / "tune_g2.json").read_text())
    assert doc["rhp_zero"] == doc["alpha_12"] or doc["rhp_zero"] is None
    assert doc["lambda2_diagnostics"]["omega_n_squared"] < 0
    assert "design_error" in doc


def test_tune_g2_forced_lambda(capsys, tmp_path):
    assert run(capsys, "tune", "g2", "--lambda", 2, "--out", tmp_path)[0] == 0
    doc = json.loads((tmp_path / "tune_g2.json").read_text())
    assert doc["lambda2_s"] == 2.0 and "design" in doc
    assert "loop_shaping" in doc["simulation_design"]


def test_tune_g3(capsys, tmp_path):
    assert run(capsys, "tune", "g3", "--out", tmp_path)[0] == 0
    doc = json.loads((tmp_path / "tune_g3.json").read_text())
    assert doc["stack_gain"] == pytest.approx(9.4868, rel=1e-4)
    assert doc["lambda3_s"] > 0


# simulate / foms ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def shipped_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = main(["simulate", "--out", str(out)])
    return code, out


def test_simulate_shipped_scenario(shipped_run):
    code, out = shipped_run
    assert code == 0
    doc = json.loads((out / "foms.json").read_text())
    for loop in ("moisture", "temperature", "pressure"):
        assert doc[loop]["ov"] < 20 and doc[loop]["ess"] < 5, loop
    assert doc["criteria"]["met"]
    for name in ("trace.csv", "trace.png", "efficiency.png"):
        assert (out / name).stat().st_size > 0
    trace = Trace.from_csv(out / "trace.csv")
    assert trace.columns == TRACE_COLUMNS
    assert trace.t[-1] == pytest.approx(2000.0)


def test_foms_rescoring_matches(capsys, shipped_run, tmp_path):
    _, out = shipped_run
    first = report_from_json((out / "foms.json").read_text())
    code, _, _ = run(capsys, "foms", "--trace", out / "trace.csv", "--out", tmp_path)
    assert code == 0
    again = report_from_json((tmp_path / "foms.json").read_text())
    for loop in first:
        assert again[loop].ov == pytest.approx(first[loop].ov, rel=1e-6, abs=1e-9)
        assert again[loop].ise == pytest.approx(first[loop].ise, rel=1e-6)


def test_foms_window_and_errors(capsys, shipped_run, tmp_path):
    _, out = shipped_run
    assert run(capsys, "foms", "--trace", out / "trace.csv", "--window", 0, 500, "--out", tmp_path)[0] == 0
    assert json.loads((tmp_path / "foms.json").read_text())["moisture"]["window"] == [0.0, 500.0]
    assert run(capsys, "foms", "--trace", tmp_path / "none.csv")[0] == 2


def test_simulate_no_events_is_flat(capsys, tmp_path):
    cfg = write_config(tmp_path, lambda d: d["simulation"].update(step_s=0.05, record_every=20))
    code, _, _ = run(capsys, "simulate", "--config", cfg, "--no-events", "--out", tmp_path)
    assert code == 0
    trace = Trace.from_csv(tmp_path / "trace.csv")
    for col in TRACE_COLUMNS[1:7]:
        v = trace[col]
        assert np.ptp(v) <= 1e-8 * max(abs(v[0]), 1.0), col


def test_simulate_blow_up(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--lambda3", 1e-6, "--out", tmp_path)
    assert code == 3 and "t = " in err


# surface -----------------------------------------------------------------------------------

def test_surface_default(capsys, tmp_path):
    assert run(capsys, "surface", "--out", tmp_path)[0] == 0
    path = tmp_path / "surface_fix_Tamb_eta.csv"
    with open(path) as fh:
        assert sum(1 for _ in csv.reader(fh)) == 2501
    assert surface_from_csv(path).values.shape == (50, 50)
    assert (tmp_path / "surface_fix_Tamb_eta.png").exists()


def test_surface_derivative_constant_in_te(capsys, tmp_path):
    assert run(capsys, "surface", "--mode", "fix_Tin", "--quantity", "d_eta_d_Te", "--n", 10,
               "--out", tmp_path)[0] == 0
    grid = surface_from_csv(tmp_path / "surface_fix_Tin_d_eta_d_Te.csv")
    assert np.all(np.ptp(grid.values, axis=0) == 0.0)


@pytest.mark.parametrize("argv", [["--n", "0"], ["--axis1", "500:900:0"], ["--axis1", "oops"],
                                  ["--axis1", "500:500:3"]])
def test_surface_bad_grids(capsys, tmp_path, argv):
    assert run(capsys, "surface", *argv, "--out", tmp_path)[0] == 2
