"""Nonlinear balance equations of the dryer: combustor, windbox, bed, exhaust.

States and inputs are kept in the fixed order used everywhere else in the
package (CSV columns, Jacobian rows/columns). The hot path is
``rhs_vector`` which works on plain float sequences; the dataclass wrappers
are for callers that want names.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .errors import SingularStateError, UndefinedQuantityError
from .params import DerivedConstants, PlantParameters

STATE_LABELS = (
    "m_chamber", "T_chamber", "m_windbox", "T_windbox", "M_bedwater",
    "m_dryergas", "T_dryergas", "m_exhaust", "T_exhaust", "P_draft",
)
INPUT_LABELS = (
    "mdot_fuel", "mdot_air", "mdot_chamber_to_windbox", "mdot_evap_to_windbox",
    "T_air_in", "mdot_windbox_to_dryer", "T_dryer_in", "F_solids", "X_in",
    "X_out_cmd", "mdot_gas_out", "T_bed_input", "mdot_stack", "T_dryer_out",
)
N_STATES = len(STATE_LABELS)
N_INPUTS = len(INPUT_LABELS)

# states that sit in a denominator
_MASS_INDEX = {0: "m_chamber", 2: "m_windbox", 5: "m_dryergas", 7: "m_exhaust"}


class ModelVariant(str, enum.Enum):
    """Which gas-inventory row to use for the dryer gas mass.

    PAPER_VERBATIM keeps the row exactly as published, where only evaporated
    water enters the dryer gas. MASS_CONSISTENT adds the windbox inflow so the
    inventory does not drain at steady flows.
    """

    PAPER_VERBATIM = "paper"
    MASS_CONSISTENT = "consistent"

    @classmethod
    def parse(cls, value) -> "ModelVariant":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class UnphysicalConditionWarning(UserWarning):
    """Raised through :mod:`warnings` for values that compute but make no physical sense."""


@dataclass
class _Vector:
    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self._order()], dtype=float)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def _order(cls):
        raise NotImplementedError

    @classmethod
    def from_array(cls, values, **extra):
        values = list(values)
        if len(values) != len(cls._order()):
            raise ValueError(f"{cls.__name__} needs {len(cls._order())} values, got {len(values)}")
        return cls(**dict(zip(cls._order(), map(float, values))), **extra)


@dataclass
class PlantState(_Vector):
    m_chamber: float
    T_chamber: float
    m_windbox: float
    T_windbox: float
    M_bedwater: float
    m_dryergas: float
    T_dryergas: float
    m_exhaust: float
    T_exhaust: float
    P_draft: float
    T_bed: Optional[float] = None   # only with bed-energy augmentation

    @classmethod
    def _order(cls):
        return STATE_LABELS


@dataclass
class ExogenousInputs(_Vector):
    mdot_fuel: float
    mdot_air: float
    mdot_chamber_to_windbox: float
    mdot_evap_to_windbox: float
    T_air_in: float
    mdot_windbox_to_dryer: float
    T_dryer_in: float
    F_solids: float
    X_in: float
    X_out_cmd: float
    mdot_gas_out: float
    T_bed_input: float
    mdot_stack: float
    T_dryer_out: float

    @classmethod
    def _order(cls):
        return INPUT_LABELS

    def replace(self, **changes) -> "ExogenousInputs":
        data = self.as_dict()
        data.update(changes)
        return ExogenousInputs(**data)


def rhs_vector(x: Sequence[float], u: Sequence[float], k: DerivedConstants,
               consistent: bool = False, evaporation: Optional[float] = None) -> list:
    """Ten state derivatives from raw sequences (the simulation hot path).

    Row 10 takes its trailing stack and duct loss terms,
    ``- mstack*(Te - Tamb) - k29*(Tdout - Tamb)``, from the steady-state form
    of the same row.

    With ``evaporation`` given, bed water loses that rate in addition to the
    feed/discharge difference and the dryer gas gains it instead of the
    feed/discharge difference (the closed-loop moisture balance).
    """
    mc, Tc, mw, Tw, Mw, mg, Tg, me, Te, P = x
    mf, ma, mcw, _mew, Ta, mwd, Tdin, Fs, Xin, Xout, mgo, Ts, mst, Tdo = u
    for idx in (0, 2, 5, 7):
        if not x[idx] > 0.0:
            raise SingularStateError(_MASS_INDEX[idx], x[idx])
    Tamb = k.T_ambient
    feed_diff = Fs * (Xin - Xout)
    if evaporation is None:
        evap = feed_diff
        dMw = feed_diff
    else:
        evap = evaporation
        dMw = feed_diff - evaporation

    dmc = mf + ma - mcw
    dTc = (k.k12 * mf - mf * Tc + k.k22 * ma * (Ta - Tc) - ma * Tc - mcw * (Tc - Tw)) / mc
    dmw = mcw - mwd
    dTw = (k.k14 * mcw * (Tc - Tw) - k.k24 * mcw * Tw
           - k.k34 * mwd * (Tw - Tdin) + k.k44 * mwd * Tw) / mw
    dmg = evap - mgo + (mwd if consistent else 0.0)
    dTg = (mwd * (Tw - Tg) - evap * Tg - mgo * (Tg - Te) + mgo * Tg - k.k17 * (Tg - Ts)) / mg
    dme = mgo - mst
    dTe = (mgo * (Tdo - Te) - mgo * Te - mst * (Te - Tamb) + mst * Te
           - mst * (Te - Tamb) - k.k18 * (Tdo - Tamb)) / me
    dP = (k.k19 * Te * (mgo - mst) + k.k19 * mgo * (Tdo - Te) - k.k19 * mgo * Te
          - k.k19 * mst * (Te - Tamb) + mst * Te - mst * (Te - Tamb) - k.k29 * (Tdo - Tamb))
    return [dmc, dTc, dmw, dTw, dMw, dmg, dTg, dme, dTe, dP]


def nonlinear_rhs(state: PlantState, inputs: ExogenousInputs, consts: DerivedConstants,
                  variant: ModelVariant = ModelVariant.PAPER_VERBATIM,
                  evaporation: Optional[float] = None) -> PlantState:
    """Time derivatives of the ten states, returned in a PlantState container."""
    variant = ModelVariant.parse(variant)
    d = rhs_vector(state.to_array().tolist(), inputs.to_array().tolist(), consts,
                   variant is ModelVariant.MASS_CONSISTENT, evaporation)
    return PlantState.from_array(d)


def bed_energy_rhs(state: PlantState, inputs: ExogenousInputs, params: PlantParameters,
                   evaporation: Optional[float] = None) -> float:
    """dT_bed/dt from the wet-bed heat balance.

    Incoming solids and water are taken at ambient temperature. The water
    carried out with the solids uses the liquid-water heat capacity.
    """
    capacity = params.cp_solid * params.M_solid + params.cp_liquid_water * state.M_bedwater
    if not capacity > 0:
        raise SingularStateError("bed thermal capacity", capacity)
    Ts = state.T_bed if state.T_bed is not None else inputs.T_bed_input
    Fs = inputs.F_solids
    E = Fs * (inputs.X_in - inputs.X_out_cmd) if evaporation is None else evaporation
    Tamb = params.T_ambient
    gain = params.UA_bed * (state.T_dryergas - Ts)
    latent = params.LH * E
    solids_out = Fs * (params.cp_solid * (Ts - Tamb)
                       + params.cp_liquid_water * inputs.X_out_cmd * (Ts - Tamb))
    return (gain - latent - solids_out) / capacity


def outlet_moisture(M_bedwater: float, M_solid: float) -> float:
    total = M_solid + M_bedwater
    if not total > 0:
        raise UndefinedQuantityError(
            f"moisture undefined for M_bedwater={M_bedwater}, M_solid={M_solid}")
    return M_bedwater / total


def bedwater_for_moisture(X: float, M_solid: float) -> float:
    """Inverse of :func:`outlet_moisture`."""
    if not 0.0 <= X < 1.0:
        raise UndefinedQuantityError(f"wet-basis moisture {X} outside [0, 1)")
    return X * M_solid / (1.0 - X)


def evaporation_rate(F_solids: float, X_in: float, X_out: float) -> float:
    if F_solids < 0:
        raise ValueError(f"F_solids must be >= 0, got {F_solids}")
    rate = F_solids * (X_in - X_out)
    if rate < 0:
        warnings.warn(
            f"negative evaporation {rate:.6g} kg/s (X_out={X_out} > X_in={X_in}) "
            "implies condensation on the bed", UnphysicalConditionWarning, stacklevel=2)
    return rate


@dataclass(frozen=True)
class Finding:
    severity: str   # "error" or "warning"
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.field}: {self.message}"


def validate_parameters(params: PlantParameters, inputs: ExogenousInputs) -> list:
    """Report invariant violations (errors) and physical inconsistencies (warnings).

    Never raises; an empty list means nothing to report.
    """
    found = []
    for f in fields(params):
        value = getattr(params, f.name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            found.append(Finding("error", f.name, f"must be strictly positive, got {value!r}"))
    for name in INPUT_LABELS:
        value = getattr(inputs, name)
        if not math.isfinite(value):
            found.append(Finding("error", name, f"not finite: {value!r}"))
        elif name.startswith(("mdot_", "F_")) and value < 0:
            found.append(Finding("error", name, f"flow must be >= 0, got {value}"))
        elif name.startswith("X_") and not 0.0 <= value <= 1.0:
            found.append(Finding("error", name, f"moisture fraction must be in [0, 1], got {value}"))
        elif name.startswith("T_") and value <= 0:
            found.append(Finding("error", name, f"absolute temperature must be > 0, got {value}"))
    if any(f.severity == "error" for f in found):
        return found

    if inputs.X_out_cmd > inputs.X_in:
        found.append(Finding("warning", "X_out_cmd",
                             f"outlet moisture {inputs.X_out_cmd} above inlet {inputs.X_in}"))
    useful = params.LH * inputs.F_solids * (inputs.X_in - inputs.X_out_cmd)
    fuel = params.HV * inputs.mdot_fuel
    if useful > fuel:
        found.append(Finding(
            "warning", "energy_balance",
            f"useful power {useful / 1e3:.0f} kW exceeds fuel power {fuel / 1e3:.0f} kW"))
    return found
