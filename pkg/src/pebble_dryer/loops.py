"""Closed-loop plant and the three loop controllers used in simulation.

The published balance equations leave several inputs free (inter-vessel
flows, outlet moisture, gas outflow, dryer outlet temperature). Inside a
simulation they are tied to the states and manipulated variables:

* chamber->windbox and windbox->dryer flows equal fuel + air,
* outlet moisture is the wet-basis moisture of the bed water,
* evaporation follows a closure (frozen, falling-rate or heat-limited),
* gas leaving the dryer equals evaporation (plus the windbox inflow in the
  mass-consistent variant),
* dryer outlet gas temperature equals the dryer gas temperature.

Loop models for tuning come from a central-difference Jacobian of this
closed plant, which is the linearization the controllers actually see.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .control import (IMCDesign, MoistureLoopModel, PIGains, g1_model, imc_design,
                      pi_direct_synthesis, stack_gain)
from .errors import DesignError
from .linearize import central_jacobian
from .model import ModelVariant, rhs_vector
from .params import DerivedConstants, PlantParameters, derive_constants
from .steady import OperatingPoint
from .tf import RationalTransferFunction as TF, discretize_zoh, ss_to_tf


class EvaporationClosure(str, enum.Enum):
    FROZEN = "frozen"              # E = E_ss
    FALLING_RATE = "falling_rate"  # E = E_ss * min(1, X / X_crit)
    HEAT_LIMITED = "heat_limited"  # falling rate, capped by UA*(Tg - Ts)/LH


@dataclass
class ClosedPlant:
    params: PlantParameters
    consts: DerivedConstants
    variant: ModelVariant = ModelVariant.PAPER_VERBATIM
    evaporation: EvaporationClosure = EvaporationClosure.FROZEN
    E_ss: float = 0.25
    X_crit: float = 0.08
    augment_bed: bool = False
    T_air_in: float = 298.0
    mdot_evap_to_windbox: float = 0.2

    def __post_init__(self):
        self.variant = ModelVariant.parse(self.variant)
        self.evaporation = EvaporationClosure(self.evaporation)

    @property
    def n_states(self) -> int:
        return 11 if self.augment_bed else 10

    def evap(self, Mw: float, Tg: float, Ts: float) -> float:
        if self.evaporation is EvaporationClosure.FROZEN:
            return self.E_ss
        X = Mw / (self.params.M_solid + Mw)
        cap = self.E_ss * min(1.0, max(X, 0.0) / self.X_crit)
        if self.evaporation is EvaporationClosure.FALLING_RATE:
            return cap
        heat = self.params.UA_bed * max(Tg - Ts, 0.0) / self.params.LH
        return min(cap, heat)

    def make_rhs(self):
        """Return f(x, mf, Tdin, Xin, Ts_input, Fs, ma, mst) -> list of derivatives."""
        k = self.consts
        p = self.params
        consistent = self.variant is ModelVariant.MASS_CONSISTENT
        Ms = p.M_solid
        mew, Ta = self.mdot_evap_to_windbox, self.T_air_in
        augment = self.augment_bed
        evap = self.evap
        cap_s, cp_lw, UA, LH, Tamb = p.cp_solid * Ms, p.cp_liquid_water, p.UA_bed, p.LH, p.T_ambient
        cp_s = p.cp_solid

        def f(x, mf, Tdin, Xin, Ts_input, Fs, ma, mst):
            Mw = x[4]
            Tg = x[6]
            Ts = x[10] if augment else Ts_input
            X = Mw / (Ms + Mw)
            E = evap(Mw, Tg, Ts)
            mcw = mf + ma
            mgo = E + mcw if consistent else E
            u = (mf, ma, mcw, mew, Ta, mcw, Tdin, Fs, Xin, X, mgo, Ts, mst, Tg)
            d = rhs_vector(x[:10] if augment else x, u, k, consistent, E)
            if augment:
                capacity = cap_s + cp_lw * Mw
                d.append((UA * (Tg - Ts) - LH * E
                          - Fs * (cp_s * (Ts - Tamb) + cp_lw * X * (Ts - Tamb))) / capacity)
            return d

        return f


@dataclass
class DiscreteController:
    """State-space difference equation x+ = Ad x + Bd e, u = Cd x + Dd e."""

    Ad: list
    Bd: list
    Cd: list
    Dd: float
    x: list = field(default_factory=list)

    @classmethod
    def from_tf(cls, tf: TF, dt: float) -> "DiscreteController":
        Ad, Bd, Cd, Dd = discretize_zoh(tf, dt)
        n = Ad.shape[0]
        return cls(Ad.tolist(), Bd[:, 0].tolist(), Cd[0, :].tolist() if n else [],
                   float(Dd[0, 0]), [0.0] * n)

    def output(self, e: float) -> float:
        return sum(c * xi for c, xi in zip(self.Cd, self.x)) + self.Dd * e

    def update(self, e: float) -> None:
        x = self.x
        self.x = [sum(a * xj for a, xj in zip(row, x)) + b * e for row, b in zip(self.Ad, self.Bd)]

    def reset(self) -> None:
        self.x = [0.0] * len(self.x)


@dataclass
class DiscretePI:
    """Kc*(e + I/tau_I) with optional back-calculation anti-windup."""

    Kc: float
    tau_I: float
    dt: float
    anti_windup: bool = False
    integral: float = 0.0

    def output(self, e: float) -> float:
        return self.Kc * (e + self.integral / self.tau_I)

    def update(self, e: float, u: float, u_applied: float) -> None:
        step = e
        if self.anti_windup and u_applied != u:
            step += (u_applied - u) / self.Kc
        self.integral += self.dt * step

    def reset(self) -> None:
        self.integral = 0.0


@dataclass
class Tuning:
    tau_c: Optional[float] = None         # default tau/3
    lambda2: Optional[float] = None       # default max(1/wn, 0.3*T_dom) of the loop model
    lambda3: Optional[float] = None       # default 3 lag time constants of the loop model
    filter_order2: Optional[int] = None
    filter_order3: Optional[int] = None
    anti_windup: bool = False
    moisture_gain: str = "balance"        # "balance" uses K1*tau, "printed" uses K1 as is


@dataclass
class LoopSet:
    moisture_model: MoistureLoopModel
    pi: PIGains
    tau_c: float
    temperature: IMCDesign
    pressure: IMCDesign
    k_air_actuator: float
    stack_gain: float
    notes: list = field(default_factory=list)
    anti_windup: bool = False

    def to_dict(self) -> dict:
        return {
            "moisture": {"K1": self.moisture_model.K1, "tau_s": self.moisture_model.tau,
                         "k_x": self.moisture_model.k_x, "tau_c_s": self.tau_c,
                         "Kc": self.pi.Kc, "tau_I_s": self.pi.tau_I},
            "temperature": self.temperature.to_dict(),
            "pressure": self.pressure.to_dict(),
            "k_air_actuator": self.k_air_actuator,
            "stack_gain": self.stack_gain,
            "anti_windup": self.anti_windup,
            "notes": list(self.notes),
        }


def closed_plant_jacobian(plant: ClosedPlant, op: OperatingPoint):
    """(A, B) of the closed plant at ``op``; B columns are (F_s, mdot_air, mdot_stack)."""
    f = plant.make_rhs()
    kv = op.kv
    x0 = op.state().to_array()
    if plant.augment_bed:
        x0 = np.append(x0, kv.T_bed_ss)
    v0 = np.array([kv.F_solids, kv.mdot_air, op.uv.mdot_stack])
    g = lambda x, v: f(list(x), kv.mdot_fuel, kv.T_dryer_in_ss, kv.X_in, kv.T_bed_ss, *v)
    return central_jacobian(g, x0, v0)


def siso_model(A, B, out_index: int, in_index: int, tol: float = 1e-6) -> TF:
    n = A.shape[0]
    C = np.zeros((1, n))
    C[0, out_index] = 1.0
    tf = ss_to_tf(A, B[:, [in_index]], C, np.zeros((1, 1)))
    return tf.minreal(tol)


def _default_lambda(plant: TF, integrating: bool) -> float:
    poles = [p for p in plant.poles() if abs(p) > 1e-9]
    if not poles:
        raise DesignError("loop model has no finite nonzero poles to tie the filter to")
    if integrating:
        # three time constants of the slowest finite lag
        return 3.0 / min(abs(p.real) for p in poles)
    wn = math.sqrt(abs(np.prod(poles).real))
    T_dom = max(1.0 / abs(p.real) for p in poles)
    return max(1.0 / wn, 0.3 * T_dom)


def design_loops(plant: ClosedPlant, op: OperatingPoint, tuning: Optional[Tuning] = None,
                 P_ss: Optional[float] = None) -> LoopSet:
    tuning = tuning or Tuning()
    notes = []
    g1 = g1_model(op, plant.params.M_solid)
    tau_c = tuning.tau_c if tuning.tau_c is not None else g1.tau / 3.0
    if tuning.moisture_gain == "balance":
        pi = pi_direct_synthesis(g1.rescaled(), tau_c)
        notes.append(f"moisture PI uses static gain K1*tau = {g1.dc_gain:.6g}")
    elif tuning.moisture_gain == "printed":
        pi = pi_direct_synthesis(g1, tau_c)
    else:
        raise ValueError(f"moisture_gain must be 'balance' or 'printed', got {tuning.moisture_gain!r}")

    A, B = closed_plant_jacobian(plant, op)
    g_tc = siso_model(A, B, 1, 1)
    lam2 = tuning.lambda2 if tuning.lambda2 is not None else _default_lambda(g_tc, False)
    temp = imc_design(g_tc, lam2, tuning.filter_order2)

    g_p = siso_model(A, B, 9, 2)
    integrating = any(abs(p) < 1e-9 for p in g_p.poles()) or g_p.den[0] == 0.0
    lam3 = tuning.lambda3 if tuning.lambda3 is not None else _default_lambda(g_p, integrating)
    press = imc_design(g_p, lam3, tuning.filter_order3)

    gs = stack_gain(plant.params.k_fan, op.P_ss if P_ss is None else P_ss)
    temp.drive_compensator = temp.compensator * (1.0 / plant.params.k_air_actuator)
    press.drive_compensator = press.compensator * (1.0 / gs)
    return LoopSet(g1, pi, tau_c, temp, press, plant.params.k_air_actuator, gs, notes,
                   tuning.anti_windup)
