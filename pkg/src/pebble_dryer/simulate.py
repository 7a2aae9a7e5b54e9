"""Fixed-step RK4 integration and scripted closed-loop scenarios."""

from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .efficiency import efficiency_simplified
from .errors import ConfigError, IntegrationBlowUp, SingularStateError
from .loops import ClosedPlant, DiscreteController, DiscretePI, LoopSet
from .model import INPUT_LABELS, STATE_LABELS, ExogenousInputs, PlantState


@dataclass
class IntegrationResult:
    t: np.ndarray
    x: np.ndarray


def rk4_step(f, t, x, h, u=None):
    if u is None:
        k1 = f(t, x)
        k2 = f(t + h / 2, [xi + h / 2 * ki for xi, ki in zip(x, k1)])
        k3 = f(t + h / 2, [xi + h / 2 * ki for xi, ki in zip(x, k2)])
        k4 = f(t + h, [xi + h * ki for xi, ki in zip(x, k3)])
    else:
        k1 = f(t, x, u)
        k2 = f(t + h / 2, [xi + h / 2 * ki for xi, ki in zip(x, k1)], u)
        k3 = f(t + h / 2, [xi + h / 2 * ki for xi, ki in zip(x, k2)], u)
        k4 = f(t + h, [xi + h * ki for xi, ki in zip(x, k3)], u)
    return [xi + h / 6 * (a + 2 * b + 2 * c + d) for xi, a, b, c, d in zip(x, k1, k2, k3, k4)]


def _n_steps(step: float, horizon: float) -> int:
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if horizon < step:
        raise ValueError(f"horizon {horizon} shorter than step {step}")
    n = round(horizon / step)
    if abs(n * step - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not a whole number of steps of {step}")
    return n


def integrate(rhs: Callable, x0, inputs_fn: Optional[Callable], step: float, horizon: float,
              method: str = "rk4") -> IntegrationResult:
    """Integrate dx/dt = rhs(t, x[, u]) with inputs held over each step.

    ``inputs_fn(t)`` is sampled at the start of every step (zero-order hold);
    pass None for an autonomous rhs(t, x). Aborts on the first non-finite state.
    """
    if method != "rk4":
        raise ValueError(f"unsupported method {method!r}")
    n = _n_steps(step, horizon)
    x = [float(v) for v in np.atleast_1d(x0)]
    out = np.empty((n + 1, len(x)))
    out[0] = x
    for i in range(n):
        t = i * step
        u = inputs_fn(t) if inputs_fn is not None else None
        try:
            x = rk4_step(rhs, t, x, step, u)
        except (OverflowError, ZeroDivisionError) as exc:
            raise IntegrationBlowUp((i + 1) * step, repr(exc)) from None
        if not all(map(math.isfinite, x)):
            raise IntegrationBlowUp((i + 1) * step, "non-finite state")
        out[i + 1] = x
    return IntegrationResult(np.arange(n + 1) * step, out)


# scenarios ---------------------------------------------------------------------------

class EventTarget(str, enum.Enum):
    FUEL_FLOW = "fuel_flow"
    DRYER_INLET_TEMP = "dryer_inlet_temp"
    INLET_MOISTURE = "inlet_moisture"
    MOISTURE_SETPOINT = "moisture_setpoint"
    PRESSURE_SETPOINT = "pressure_setpoint"
    CHAMBER_TEMP_SETPOINT = "chamber_temp_setpoint"


@dataclass(frozen=True)
class Event:
    time: float
    target: EventTarget
    value: float


@dataclass
class Scenario:
    horizon: float
    step: float
    events: list
    initial_state: PlantState
    initial_inputs: ExogenousInputs
    initial_setpoints: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"step_s must be positive, got {self.step}")
        last = 0.0
        for ev in self.events:
            if not 0.0 <= ev.time <= self.horizon:
                raise ConfigError(f"event time {ev.time} outside [0, {self.horizon}]")
            if ev.time < last:
                raise ConfigError("event times must be nondecreasing")
            last = ev.time
        unknown = set(self.initial_setpoints) - {"moisture_setpoint", "chamber_temp_setpoint",
                                                 "pressure_setpoint"}
        if unknown:
            raise ConfigError(f"unknown initial setpoint(s): {sorted(unknown)}")

    def without_events(self) -> "Scenario":
        return Scenario(self.horizon, self.step, [], self.initial_state, self.initial_inputs,
                        dict(self.initial_setpoints))


_SCENARIO_KEYS = {"horizon_s", "step_s", "initial_state", "initial_inputs", "events",
                  "initial_setpoints"}
_REQUIRED_SCENARIO_KEYS = {"horizon_s", "step_s", "initial_state", "initial_inputs", "events"}


def _strict_fields(block: dict, names: Sequence[str], where: str, optional=()) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(block) - set(names) - set(optional)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = set(names) - set(block)
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {sorted(missing)}")
    out = {}
    for k, v in block.items():
        if v is None and k in optional:
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}.{k} must be a number, got {v!r}")
        out[k] = float(v)
    return out


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    unknown = set(data) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario key(s): {sorted(unknown)}")
    missing = _REQUIRED_SCENARIO_KEYS - set(data)
    if missing:
        raise ConfigError(f"missing scenario key(s): {sorted(missing)}")
    state = _strict_fields(data["initial_state"], STATE_LABELS, "initial_state", optional=("T_bed",))
    inputs = _strict_fields(data["initial_inputs"], INPUT_LABELS, "initial_inputs")
    setpoints = _strict_fields(data.get("initial_setpoints", {}), (), "initial_setpoints",
                               optional=("moisture_setpoint", "chamber_temp_setpoint",
                                         "pressure_setpoint"))
    events = []
    if not isinstance(data["events"], list):
        raise ConfigError("events must be a list")
    for i, ev in enumerate(data["events"]):
        if not isinstance(ev, dict) or set(ev) != {"t_s", "target", "value"}:
            raise ConfigError(f"events[{i}] must have exactly the keys t_s, target, value")
        try:
            target = EventTarget(ev["target"])
        except ValueError:
            raise ConfigError(f"events[{i}].target: unknown target {ev['target']!r}") from None
        events.append(Event(float(ev["t_s"]), target, float(ev["value"])))
    for key in ("horizon_s", "step_s"):
        if isinstance(data[key], bool) or not isinstance(data[key], (int, float)):
            raise ConfigError(f"{key} must be a number")
    return Scenario(float(data["horizon_s"]), float(data["step_s"]), events,
                    PlantState(**state), ExogenousInputs(**inputs), setpoints)


def scenario_to_dict(sc: Scenario) -> dict:
    state = sc.initial_state.as_dict()
    if state.get("T_bed") is None:
        state.pop("T_bed", None)
    out = {
        "horizon_s": sc.horizon,
        "step_s": sc.step,
        "initial_state": state,
        "initial_inputs": sc.initial_inputs.as_dict(),
        "events": [{"t_s": e.time, "target": e.target.value, "value": e.value} for e in sc.events],
    }
    if sc.initial_setpoints:
        out["initial_setpoints"] = dict(sc.initial_setpoints)
    return out


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(data)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


# traces -----------------------------------------------------------------------------

TRACE_COLUMNS = (("t",) + STATE_LABELS + (
    "x_out", "sp_xout", "sp_tc", "sp_p", "f_s", "c2", "mdot_air", "c3", "mdot_stack", "eta_d",
    "saturation"))
SAT_FS, SAT_AIR, SAT_STACK = 1, 2, 4


@dataclass
class Trace:
    data: np.ndarray
    columns: tuple = TRACE_COLUMNS
    notes: list = field(default_factory=list)
    saturation_counts: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self["t"]

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.data:
                w.writerow([f"{v:.9g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header = tuple(rows[0])
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        return cls(data.reshape(-1, len(header)), header)


# closed loop ----------------------------------------------------------------------------

@dataclass
class SimulationResult:
    trace: Trace
    loops: LoopSet


def closed_loop_simulate(plant: ClosedPlant, loops: LoopSet, scenario: Scenario,
                         record_every: int = 10, anti_windup: Optional[bool] = None,
                         bias_from_op: Optional[dict] = None) -> Trace:
    """Run the three loops against the nonlinear plant with RK4.

    Measurements are taken at the start of each step, controller outputs are
    held over the step. Events take effect at the first step whose start time
    is at or after the event time. Actuator outputs below zero are clamped and
    flagged in the ``saturation`` column (bit 1 feed, 2 air, 4 stack).
    """
    dt = scenario.step
    n = _n_steps(dt, scenario.horizon)
    f = plant.make_rhs()
    p = plant.params
    Ms, Tamb = p.M_solid, p.T_ambient
    k_a, G_s = loops.k_air_actuator, loops.stack_gain

    ui = scenario.initial_inputs
    bias = {"F_solids": ui.F_solids, "mdot_air": ui.mdot_air, "mdot_stack": ui.mdot_stack}
    if bias_from_op:
        bias.update(bias_from_op)
    mf, Tdin, Xin, Ts_in = ui.mdot_fuel, ui.T_dryer_in, ui.X_in, ui.T_bed_input

    sp = {"moisture_setpoint": ui.X_out_cmd, "chamber_temp_setpoint": scenario.initial_state.T_chamber,
          "pressure_setpoint": scenario.initial_state.P_draft}
    sp.update(scenario.initial_setpoints)

    if anti_windup is None:
        anti_windup = loops.anti_windup
    pi = DiscretePI(loops.pi.Kc, loops.pi.tau_I, dt, anti_windup)
    c_tc = DiscreteController.from_tf(loops.temperature.compensator, dt)
    c_p = DiscreteController.from_tf(loops.pressure.compensator, dt)

    x = scenario.initial_state.to_array().tolist()
    if plant.augment_bed:
        T_bed0 = scenario.initial_state.T_bed
        x.append(float(T_bed0 if T_bed0 is not None else Ts_in))

    # event index by step
    pending = sorted(scenario.events, key=lambda e: e.time)
    ev_steps = [max(0, math.ceil(e.time / dt - 1e-9)) for e in pending]
    ev_ptr = 0

    rows = []
    sat_counts = {"F_solids": 0, "mdot_air": 0, "mdot_stack": 0}
    for i in range(n + 1):
        while ev_ptr < len(pending) and ev_steps[ev_ptr] <= i:
            ev = pending[ev_ptr]
            tgt = ev.target.value
            if tgt == "fuel_flow":
                mf = ev.value
            elif tgt == "dryer_inlet_temp":
                Tdin = ev.value
            elif tgt == "inlet_moisture":
                Xin = ev.value
            else:
                sp[tgt] = ev.value
            ev_ptr += 1

        X = x[4] / (Ms + x[4])
        e1 = sp["moisture_setpoint"] - X
        e2 = sp["chamber_temp_setpoint"] - x[1]
        e3 = sp["pressure_setpoint"] - x[9]
        fs_raw = bias["F_solids"] + pi.output(e1)
        ma_raw = bias["mdot_air"] + c_tc.output(e2)
        ms_raw = bias["mdot_stack"] + c_p.output(e3)
        sat = 0
        Fs, ma, mst = fs_raw, ma_raw, ms_raw
        if Fs < 0:
            Fs = 0.0
            sat |= SAT_FS
            sat_counts["F_solids"] += 1
        if ma < 0:
            ma = 0.0
            sat |= SAT_AIR
            sat_counts["mdot_air"] += 1
        if mst < 0:
            mst = 0.0
            sat |= SAT_STACK
            sat_counts["mdot_stack"] += 1

        if i % record_every == 0:
            eta = efficiency_simplified(Tdin, x[8], Tamb)
            rows.append([i * dt] + x[:10] + [X, sp["moisture_setpoint"], sp["chamber_temp_setpoint"],
                                             sp["pressure_setpoint"], Fs, ma / k_a, ma, mst / G_s,
                                             mst, eta, float(sat)])
        if i == n:
            break

        pi.update(e1, fs_raw, Fs)
        c_tc.update(e2)
        c_p.update(e3)

        rhs = lambda t, xx, _u=None: f(xx, mf, Tdin, Xin, Ts_in, Fs, ma, mst)
        try:
            x = rk4_step(rhs, i * dt, x, dt)
        except SingularStateError as exc:
            raise IntegrationBlowUp((i + 1) * dt, str(exc)) from None
        except (OverflowError, ZeroDivisionError) as exc:
            raise IntegrationBlowUp((i + 1) * dt, repr(exc)) from None
        if not all(map(math.isfinite, x)):
            raise IntegrationBlowUp((i + 1) * dt, "non-finite state")

    notes = [f"actuator clamp engaged on {k} for {v} steps" for k, v in sat_counts.items() if v]
    return Trace(np.array(rows), TRACE_COLUMNS, notes, sat_counts)


class StiffnessWarning(UserWarning):
    """Step halving moved the trajectory by more than the tolerance."""


def operating_point_scenario(op, horizon: float = 2000.0, step: float = 0.01) -> Scenario:
    """No events, started at rest at ``op`` with the setpoints on it."""
    state = op.state()
    state = PlantState.from_array(state.to_array(), T_bed=op.kv.T_bed_ss)
    return Scenario(horizon, step, [], state, op.inputs(), {
        "moisture_setpoint": op.kv.X_out, "chamber_temp_setpoint": op.uv.T_chamber,
        "pressure_setpoint": op.P_ss})


def stiffness_check(plant: ClosedPlant, loops: LoopSet, scenario: Scenario, window: float = 20.0,
                    rtol: float = 1e-3) -> float:
    """Rerun the first ``window`` seconds at half the step and compare.

    Returns the largest relative state difference on the common samples and
    warns with StiffnessWarning when it exceeds ``rtol``.
    """
    window = min(window, scenario.horizon)
    n = max(1, round(window / scenario.step))
    window = n * scenario.step
    coarse = Scenario(window, scenario.step, [e for e in scenario.events if e.time <= window],
                      scenario.initial_state, scenario.initial_inputs, dict(scenario.initial_setpoints))
    fine = Scenario(window, scenario.step / 2, coarse.events, scenario.initial_state,
                    scenario.initial_inputs, dict(scenario.initial_setpoints))
    a = closed_loop_simulate(plant, loops, coarse, record_every=1)
    b = closed_loop_simulate(plant, loops, fine, record_every=2)
    cols = [TRACE_COLUMNS.index(s) for s in STATE_LABELS]
    xa, xb = a.data[:, cols], b.data[:, cols]
    scale = np.maximum(np.abs(xa), 1e-9)
    worst = float(np.max(np.abs(xa - xb) / scale))
    if worst > rtol:
        warnings.warn(f"halving the step changed the states by {worst:.3g} relative (over {rtol:g}); "
                      "the step may be too coarse for these dynamics", StiffnessWarning, stacklevel=2)
    return worst
