"""Physical parameters of the dryer and the lumped constants built from them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from .errors import InvalidParameterError

# Fields that must be strictly positive (everything except T_ambient, which only
# has to be a positive absolute temperature, is checked identically).
_POSITIVE = (
    "HV", "LH", "cp_chamber", "cp_air", "cp_windbox_gas", "cp_dryer_gas",
    "cp_exhaust_gas", "cp_solid", "cp_liquid_water", "UA_bed", "UeAe_duct",
    "R_gas", "V_exhaust", "M_solid", "T_ambient", "k_air_actuator", "k_fan",
)


@dataclass(frozen=True)
class PlantParameters:
    """SI-unit plant parameters. Temperatures are absolute (K).

    None of these are published with the process data; the defaults are
    handbook values (fuel oil heating value, water latent heat, air/flue gas
    specific heats) and every one can be overridden from the config file.
    """

    HV: float = 42.5e6              # J/kg fuel (lower heating value)
    LH: float = 2.26e6              # J/kg water
    cp_chamber: float = 1100.0      # J/(kg K)
    cp_air: float = 1005.0
    cp_windbox_gas: float = 1100.0
    cp_dryer_gas: float = 1100.0
    cp_exhaust_gas: float = 1100.0
    cp_solid: float = 900.0
    cp_liquid_water: float = 4186.0
    UA_bed: float = 500.0           # W/K, gas -> bed
    UeAe_duct: float = 50.0         # W/K, duct -> ambient
    R_gas: float = 287.0            # J/(kg K)
    V_exhaust: float = 2.0          # m^3
    M_solid: float = 750.0          # kg dry pebbles in the bed
    T_ambient: float = 293.0        # K
    k_air_actuator: float = 0.05    # (kg/s) per drive unit
    k_fan: float = 0.03             # (kg/s) per (drive unit * sqrt(Pa))

    def check(self) -> None:
        for name in _POSITIVE:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(name, value)

    def replace(self, **changes) -> "PlantParameters":
        data = asdict(self)
        unknown = set(changes) - set(data)
        if unknown:
            raise TypeError(f"unknown parameter(s): {sorted(unknown)}")
        data.update(changes)
        return PlantParameters(**data)


@dataclass(frozen=True)
class DerivedConstants:
    """Lumped ratios of the balance equations.

    ``k44`` multiplies the windbox outflow enthalpy term and is not among the
    published ratios; it is fixed at 1 like ``k34`` (it is the same
    cp_windbox/cp_windbox quotient). ``T_ambient`` is carried along because the
    exhaust rows need it and it is not an input.
    """

    k12: float
    k22: float
    k14: float
    k24: float
    k34: float
    k44: float
    k17: float
    k18: float
    k19: float
    k29: float
    T_ambient: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def derive_constants(params: PlantParameters) -> DerivedConstants:
    params.check()
    return DerivedConstants(
        k12=params.HV / params.cp_chamber,
        k22=params.cp_air / params.cp_chamber,
        k14=params.cp_chamber / params.cp_windbox_gas,
        k24=params.cp_air / params.cp_windbox_gas,
        k34=1.0,
        k44=1.0,
        k17=params.UA_bed / params.cp_windbox_gas,
        k18=params.UeAe_duct / params.cp_exhaust_gas,
        k19=params.R_gas / params.V_exhaust,
        k29=params.R_gas * params.UeAe_duct / (params.V_exhaust * params.cp_exhaust_gas),
        T_ambient=params.T_ambient,
    )
