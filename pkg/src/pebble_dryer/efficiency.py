"""Dryer thermal efficiency: energy-based, temperature-ratio, and its rate of change."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import UndefinedQuantityError
from .params import PlantParameters


@dataclass
class EfficiencyBreakdown:
    q_useful: float
    q_input: float
    q_loss: float
    eta: float
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class SensitivityTriple:
    d_eta_d_Tin: float
    d_eta_d_Te: float
    d_eta_d_Tamb: float


@dataclass(frozen=True)
class ElasticityTriple:
    e_Tin: float
    e_Te: float
    e_Tamb: float

    @property
    def total(self) -> float:
        return self.e_Tin + self.e_Te + self.e_Tamb


def efficiency_full(F_s, X_in, X_out, mdot_fuel, mdot_stack, T_e, T_amb,
                    params: PlantParameters) -> EfficiencyBreakdown:
    """Useful evaporation power over fuel power, derated by the stack loss fraction."""
    if not mdot_fuel > 0:
        raise UndefinedQuantityError(f"efficiency undefined for mdot_fuel = {mdot_fuel}")
    q_useful = params.LH * F_s * (X_in - X_out)
    q_input = params.HV * mdot_fuel
    q_loss = params.cp_exhaust_gas * mdot_stack * (T_e - T_amb)
    eta = (q_useful / q_input) * (1.0 - q_loss / q_input)
    notes = []
    if q_useful < 0:
        notes.append(f"negative useful power {q_useful:.6g} W")
    if q_loss < 0:
        notes.append(f"negative stack loss {q_loss:.6g} W (T_e below ambient)")
    if eta > 1:
        notes.append(f"efficiency {eta:.4f} > 1: useful power {q_useful / 1e3:.0f} kW "
                     f"exceeds fuel power {q_input / 1e3:.0f} kW")
    elif eta < 0:
        notes.append(f"efficiency {eta:.4f} < 0")
    return EfficiencyBreakdown(q_useful, q_input, q_loss, eta, notes)


def _lift(T_in, T_amb):
    lift = T_in - T_amb
    if np.any(lift == 0):
        raise UndefinedQuantityError("degenerate temperature lift: T_in = T_amb")
    return lift


def efficiency_simplified(T_in, T_e, T_amb):
    """(T_in - T_e)/(T_in - T_amb); works on scalars or arrays."""
    return (T_in - T_e) / _lift(T_in, T_amb)


def sensitivities(T_in, T_e, T_amb) -> SensitivityTriple:
    lift = _lift(T_in, T_amb)
    return SensitivityTriple(
        d_eta_d_Tin=(T_e - T_amb) / lift ** 2,
        d_eta_d_Te=-1.0 / lift,
        d_eta_d_Tamb=(T_in - T_e) / lift ** 2,
    )


def elasticities(T_in, T_e, T_amb) -> ElasticityTriple:
    lift = _lift(T_in, T_amb)
    drop = T_in - T_e
    if np.any(drop == 0):
        raise UndefinedQuantityError("elasticity undefined: T_in = T_e (zero efficiency)")
    return ElasticityTriple(
        e_Tin=T_in * (T_e - T_amb) / (lift * drop),
        e_Te=-T_e / drop,
        e_Tamb=T_amb / lift,
    )


_RATE_CHANNELS = ("F_s", "X_in", "X_out", "mdot_fuel", "mdot_stack", "T_e")


def efficiency_rate(values: Mapping[str, float], rates: Mapping[str, float],
                    params: PlantParameters, T_amb: float, dT_amb: float = 0.0,
                    form: str = "exact") -> float:
    """d(eta)/dt of the energy-based efficiency from signal values and their rates.

    ``form="exact"`` is the full chain rule of the product U/I*(1 - L/I)
    with U = useful power, I = fuel power, L = stack loss, split into the
    useful-power term, the fuel term and the loss term. ``form="printed"``
    keeps only the first-order terms (it omits the loss factor on the first
    two terms and the fuel coupling of the third); it is close to the exact
    value only when L << I.
    """
    missing = [c for c in _RATE_CHANNELS if c not in values or c not in rates]
    if missing:
        raise KeyError(f"missing channel(s) for efficiency rate: {missing}")
    v, r = values, rates
    if not v["mdot_fuel"] > 0:
        raise UndefinedQuantityError("efficiency rate undefined for mdot_fuel <= 0")
    LH, HV, cp = params.LH, params.HV, params.cp_exhaust_gas
    dX = v["X_in"] - v["X_out"]
    U = LH * v["F_s"] * dX
    dU = LH * (r["F_s"] * dX + v["F_s"] * (r["X_in"] - r["X_out"]))
    I = HV * v["mdot_fuel"]
    dI = HV * r["mdot_fuel"]
    dT = v["T_e"] - T_amb
    L = cp * v["mdot_stack"] * dT
    dL = cp * (r["mdot_stack"] * dT + v["mdot_stack"] * (r["T_e"] - dT_amb))
    if form == "exact":
        useful = dU / I * (1.0 - L / I)
        fuel = -U * dI / I ** 2 * (1.0 - 2.0 * L / I)
        loss = -U * dL / I ** 2
        return useful + fuel + loss
    if form == "printed":
        ratio = v["mdot_stack"] * dT / v["mdot_fuel"]
        d_ratio = (dL / cp) / v["mdot_fuel"] - ratio * r["mdot_fuel"] / v["mdot_fuel"]
        return dU / I - U * dI / I ** 2 - cp / HV * d_ratio
    raise ValueError(f"unknown form {form!r}")


class SurfaceMode(str, enum.Enum):
    FIX_TAMB = "fix_Tamb"
    FIX_TE = "fix_Te"
    FIX_TIN = "fix_Tin"


class SurfaceQuantity(str, enum.Enum):
    ETA = "eta"
    D_ETA_D_TIN = "d_eta_d_Tin"
    D_ETA_D_TE = "d_eta_d_Te"


DEFAULT_RANGES = {"T_in": (500.0, 1300.0), "T_e": (350.0, 900.0), "T_amb": (263.0, 323.0)}
DEFAULT_FIXED = {"T_in": 993.15, "T_e": 643.15, "T_amb": 293.0}
_AXES = {
    SurfaceMode.FIX_TAMB: ("T_in", "T_e", "T_amb"),
    SurfaceMode.FIX_TE: ("T_in", "T_amb", "T_e"),
    SurfaceMode.FIX_TIN: ("T_e", "T_amb", "T_in"),
}


@dataclass
class SurfaceGrid:
    axis1_name: str
    axis1: np.ndarray
    axis2_name: str
    axis2: np.ndarray
    fixed_name: str
    fixed_value: float
    quantity: str
    values: np.ndarray     # shape (len(axis1), len(axis2)), NaN where degenerate
    degenerate: np.ndarray  # bool mask, same shape

    @property
    def n_cells(self) -> int:
        return self.values.size


def surface_axes(mode) -> tuple:
    return _AXES[SurfaceMode(mode)]


def surface_sweep(mode, fixed_value: Optional[float] = None, axis1=None, axis2=None,
                  quantity="eta", n: int = 50) -> SurfaceGrid:
    """Evaluate efficiency or one of its sensitivities on a 2-D temperature grid.

    Cells where T_in = T_amb are masked (value NaN, flag set).
    """
    mode = SurfaceMode(mode)
    quantity = SurfaceQuantity(quantity)
    a1_name, a2_name, fixed_name = _AXES[mode]
    if axis1 is None:
        axis1 = np.linspace(*DEFAULT_RANGES[a1_name], n)
    if axis2 is None:
        axis2 = np.linspace(*DEFAULT_RANGES[a2_name], n)
    if fixed_value is None:
        fixed_value = DEFAULT_FIXED[fixed_name]
    axis1 = np.asarray(axis1, dtype=float)
    axis2 = np.asarray(axis2, dtype=float)
    if axis1.size == 0 or axis2.size == 0:
        raise ValueError("surface grid axes must be nonempty")
    for name, ax in ((a1_name, axis1), (a2_name, axis2)):
        d = np.diff(ax)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError(f"axis {name} must be strictly monotone")
    g1, g2 = np.meshgrid(axis1, axis2, indexing="ij")
    temps = {a1_name: g1, a2_name: g2, fixed_name: np.full_like(g1, float(fixed_value))}
    T_in, T_e, T_amb = temps["T_in"], temps["T_e"], temps["T_amb"]
    lift = T_in - T_amb
    degenerate = lift == 0
    safe = np.where(degenerate, 1.0, lift)
    if quantity is SurfaceQuantity.ETA:
        vals = (T_in - T_e) / safe
    elif quantity is SurfaceQuantity.D_ETA_D_TIN:
        vals = (T_e - T_amb) / safe ** 2
    else:
        vals = -1.0 / safe
    vals = np.where(degenerate, np.nan, vals)
    return SurfaceGrid(a1_name, axis1, a2_name, axis2, fixed_name, float(fixed_value),
                       quantity.value, vals, degenerate)


def surface_to_csv(grid: SurfaceGrid, path) -> None:
    """Long format, one row per cell: both axes, the fixed temperature, the value, the mask."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([grid.axis1_name + "_K", grid.axis2_name + "_K", grid.fixed_name + "_K",
                    grid.quantity, "degenerate"])
        for i, a in enumerate(grid.axis1):
            for j, b in enumerate(grid.axis2):
                v = grid.values[i, j]
                w.writerow([f"{a:.9g}", f"{b:.9g}", f"{grid.fixed_value:.9g}",
                            "nan" if np.isnan(v) else f"{v:.9g}", int(grid.degenerate[i, j])])


def surface_from_csv(path) -> SurfaceGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(-1, 5)
    # keep file order, the axes may be descending
    axis1 = np.array(list(dict.fromkeys(data[:, 0])))
    axis2 = np.array(list(dict.fromkeys(data[:, 1])))
    shape = (len(axis1), len(axis2))
    return SurfaceGrid(head[0][:-2], axis1, head[1][:-2], axis2, head[2][:-2], float(data[0, 2]),
                       head[3], data[:, 3].reshape(shape), data[:, 4].reshape(shape).astype(bool))
