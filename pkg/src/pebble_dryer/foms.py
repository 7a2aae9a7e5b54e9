"""Figures of merit for setpoint tracking: ISE, percent overshoot, steady-state error."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

# reference magnitudes from the published run, used only for the order-of-magnitude note
REFERENCE_ISE = {"moisture": 0.021, "temperature": 1.84e5, "pressure": 3.10e8}

LOOP_CHANNELS = {
    "moisture": ("x_out", "sp_xout"),
    "temperature": ("T_chamber", "sp_tc"),
    "pressure": ("P_draft", "sp_p"),
}


@dataclass
class FoMReport:
    ise: float
    ov: float
    ess: float
    window: tuple
    steps: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _trapezoid(y, t) -> float:
    return float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2.0)


def compute_foms(t, value, setpoint, window: Optional[tuple] = None,
                 tail_fraction: float = 0.05) -> FoMReport:
    """Score one loop over ``window`` (defaults to the whole record).

    Overshoot is taken per setpoint step, normalized by the step size, and
    the worst one is reported. The steady-state error averages the last
    ``tail_fraction`` of the window.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(value, dtype=float)
    r = np.broadcast_to(np.asarray(setpoint, dtype=float), t.shape)
    if window is None:
        window = (float(t[0]), float(t[-1]))
    t0, t1 = window
    if not t1 > t0:
        raise ValueError(f"zero-length window {window}")
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12:
        raise ValueError(f"window {window} outside the record [{t[0]}, {t[-1]}]")
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    t, y, r = t[sel], y[sel], r[sel]
    if len(t) < 2:
        raise ValueError("window holds fewer than two samples")

    e = r - y
    ise = _trapezoid(e * e, t)

    # setpoint steps
    jumps = np.flatnonzero(np.diff(r) != 0.0) + 1
    ov = 0.0
    bounds = list(jumps) + [len(t)]
    for k, j in enumerate(jumps):
        step = r[j] - r[j - 1]
        seg = slice(j, bounds[k + 1])
        peak = np.max((y[seg] - r[j]) * math.copysign(1.0, step)) / abs(step) * 100.0
        ov = max(ov, float(peak))

    tail = t >= t1 - tail_fraction * (t1 - t0) - 1e-12
    err = float(np.mean(np.abs(e[tail])))
    scale = abs(r[-1])
    if scale == 0.0:
        scale = abs(r[jumps[-1]] - r[jumps[-1] - 1]) if len(jumps) else 0.0
    if scale == 0.0:
        ess = 0.0 if err == 0.0 else math.inf
    else:
        ess = err / scale * 100.0
    return FoMReport(ise, ov, ess, (float(t0), float(t1)), len(jumps))


def trace_foms(trace, window: Optional[tuple] = None) -> dict:
    out = {}
    for loop, (col, sp) in LOOP_CHANNELS.items():
        out[loop] = compute_foms(trace.t, trace[col], trace[sp], window)
    return out


def deviation_notes(reports: dict, reference: dict = REFERENCE_ISE) -> list:
    notes = []
    for loop, rep in reports.items():
        ref = reference.get(loop)
        if ref is None:
            continue
        if rep.ise <= 0 or not math.isfinite(rep.ise):
            notes.append(f"{loop}: ISE {rep.ise:.3g} cannot be compared with reference {ref:.3g}")
            continue
        ratio = rep.ise / ref
        if not 0.1 <= ratio <= 10.0:
            notes.append(
                f"{loop}: ISE {rep.ise:.3g} is {ratio:.3g}x the reference {ref:.3g}; the reference "
                "run used unpublished loop speeds, actuator gains and integrator, so only the "
                "order of magnitude is comparable")
    return notes


def report_to_json(reports: dict, notes=(), extra: Optional[dict] = None) -> str:
    doc = {loop: rep.to_dict() for loop, rep in reports.items()}
    doc["criteria"] = {"ov_max_pct": 20.0, "ess_max_pct": 5.0,
                       "met": all(r.ov < 20.0 and r.ess < 5.0 for r in reports.values())}
    doc["reference_ise"] = dict(REFERENCE_ISE)
    doc["notes"] = list(notes)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2)


def report_from_json(text: str) -> dict:
    doc = json.loads(text)
    out = {}
    for loop in LOOP_CHANNELS:
        if loop in doc:
            d = doc[loop]
            out[loop] = FoMReport(d["ise"], d["ov"], d["ess"], tuple(d["window"]), d.get("steps", 0))
    return out
