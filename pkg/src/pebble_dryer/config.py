"""Run configuration: strict JSON with the unit spelled out in every key."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .loops import ClosedPlant, EvaporationClosure, Tuning
from .model import ModelVariant
from .params import PlantParameters, derive_constants
from .steady import KnownVariables, build_operating_point

# json key -> PlantParameters field
PLANT_KEYS = {
    "HV_J_per_kg": "HV",
    "LH_J_per_kg": "LH",
    "cp_chamber_J_per_kgK": "cp_chamber",
    "cp_air_J_per_kgK": "cp_air",
    "cp_windbox_gas_J_per_kgK": "cp_windbox_gas",
    "cp_dryer_gas_J_per_kgK": "cp_dryer_gas",
    "cp_exhaust_gas_J_per_kgK": "cp_exhaust_gas",
    "cp_solid_J_per_kgK": "cp_solid",
    "cp_liquid_water_J_per_kgK": "cp_liquid_water",
    "UA_bed_W_per_K": "UA_bed",
    "UeAe_duct_W_per_K": "UeAe_duct",
    "R_gas_J_per_kgK": "R_gas",
    "V_exhaust_m3": "V_exhaust",
    "M_solid_kg": "M_solid",
    "T_ambient_K": "T_ambient",
    "k_air_actuator_kg_per_s": "k_air_actuator",
    "k_fan_kg_per_s_sqrtPa": "k_fan",
}

OP_KEYS = {
    "mdot_fuel_kg_per_s": "mdot_fuel",
    "mdot_air_kg_per_s": "mdot_air",
    "F_solids_kg_per_s": "F_solids",
    "X_in": "X_in",
    "X_out": "X_out",
    "T_air_in_K": "T_air_in",
    "T_dryer_in_K": "T_dryer_in_ss",
    "T_bed_K": "T_bed_ss",
}
OP_OPTIONAL = {
    "m_chamber_kg": "m_chamber_ss",
    "m_windbox_kg": "m_windbox_ss",
    "m_dryergas_kg": "m_dryergas_ss",
    "m_exhaust_kg": "m_exhaust_ss",
    "M_bedwater_kg": "M_bedwater_ss",
    "P_draft_Pa": "P_ss",
    "mdot_evap_to_windbox_kg_per_s": "mdot_evap_to_windbox_ss",
}

TUNING_KEYS = {
    "tau_c_s": "tau_c",
    "lambda2_s": "lambda2",
    "lambda3_s": "lambda3",
    "filter_order2": "filter_order2",
    "filter_order3": "filter_order3",
    "anti_windup": "anti_windup",
    "moisture_gain": "moisture_gain",
}

CLOSURE_KEYS = {"evaporation", "X_crit", "augment_bed"}
SIM_KEYS = {"scenario", "step_s", "record_every"}
TOP_KEYS = {"plant", "operating_point", "tuning", "closure", "simulation", "variant", "output_dir"}


def _number(value, where: str, positive: bool = False, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where}: expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be positive, got {value!r}")
    return float(value)


def _block(data: dict, name: str, allowed) -> dict:
    block = data.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {sorted(unknown)}")
    return block


@dataclass
class RunConfig:
    params: PlantParameters = field(default_factory=PlantParameters)
    kv_fields: dict = field(default_factory=lambda: {
        "mdot_fuel": 0.012, "mdot_air": 0.25, "F_solids": 2.5, "X_in": 0.15, "X_out": 0.05,
        "T_air_in": 298.0, "T_dryer_in_ss": 993.15, "T_bed_ss": 643.15})
    op_extras: dict = field(default_factory=dict)
    tuning: Tuning = field(default_factory=Tuning)
    evaporation: EvaporationClosure = EvaporationClosure.FROZEN
    X_crit: float = 0.08
    augment_bed: bool = False
    scenario_path: Optional[Path] = None
    step: Optional[float] = None     # overrides the scenario step when set
    record_every: int = 10
    variant: ModelVariant = ModelVariant.PAPER_VERBATIM
    output_dir: Path = Path("out")

    def known_variables(self) -> KnownVariables:
        return KnownVariables(T_ambient=self.params.T_ambient, **self.kv_fields)

    def consts(self):
        return derive_constants(self.params)

    def operating_point(self):
        return build_operating_point(self.known_variables(), self.consts(),
                                     M_solid=self.params.M_solid, **self.op_extras)

    def plant(self, op=None) -> ClosedPlant:
        kv = self.known_variables()
        op = op or self.operating_point()
        return ClosedPlant(self.params, self.consts(), self.variant, self.evaporation,
                           E_ss=kv.F_solids * (kv.X_in - kv.X_out), X_crit=self.X_crit,
                           augment_bed=self.augment_bed, T_air_in=kv.T_air_in,
                           mdot_evap_to_windbox=op.mdot_evap_to_windbox_ss)


def config_from_dict(data: dict, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    cfg = RunConfig()

    plant = _block(data, "plant", PLANT_KEYS)
    changes = {PLANT_KEYS[k]: _number(v, f"plant.{k}", positive=True) for k, v in plant.items()}
    cfg.params = cfg.params.replace(**changes)

    opb = _block(data, "operating_point", set(OP_KEYS) | set(OP_OPTIONAL))
    for k, v in opb.items():
        if k in OP_KEYS:
            cfg.kv_fields[OP_KEYS[k]] = _number(v, f"operating_point.{k}")
        else:
            cfg.op_extras[OP_OPTIONAL[k]] = _number(v, f"operating_point.{k}")
    for k in ("mdot_fuel", "mdot_air", "F_solids"):
        if cfg.kv_fields[k] < 0:
            raise ConfigError(f"operating_point.{k}: must be nonnegative")
    for k in ("X_in", "X_out"):
        if not 0.0 <= cfg.kv_fields[k] < 1.0:
            raise ConfigError(f"operating_point.{k}: must lie in [0, 1)")
    for k in ("T_air_in", "T_dryer_in_ss", "T_bed_ss"):
        if not cfg.kv_fields[k] > 0:
            raise ConfigError(f"operating_point: absolute temperature {k} must be positive")

    tb = _block(data, "tuning", TUNING_KEYS)
    tune = {}
    for k, v in tb.items():
        name = TUNING_KEYS[k]
        if name == "anti_windup":
            if not isinstance(v, bool):
                raise ConfigError(f"tuning.{k}: expected true or false")
            tune[name] = v
        elif name == "moisture_gain":
            if v not in ("balance", "printed"):
                raise ConfigError(f"tuning.{k}: expected 'balance' or 'printed', got {v!r}")
            tune[name] = v
        elif name.startswith("filter_order"):
            if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
                raise ConfigError(f"tuning.{k}: expected a positive integer or null")
            tune[name] = v
        else:
            tune[name] = _number(v, f"tuning.{k}", positive=True, allow_none=True)
    cfg.tuning = Tuning(**tune)

    cb = _block(data, "closure", CLOSURE_KEYS)
    if "evaporation" in cb:
        try:
            cfg.evaporation = EvaporationClosure(cb["evaporation"])
        except ValueError:
            raise ConfigError(f"closure.evaporation: unknown closure {cb['evaporation']!r}") from None
    if "X_crit" in cb:
        cfg.X_crit = _number(cb["X_crit"], "closure.X_crit", positive=True)
    if "augment_bed" in cb:
        if not isinstance(cb["augment_bed"], bool):
            raise ConfigError("closure.augment_bed: expected true or false")
        cfg.augment_bed = cb["augment_bed"]

    sb = _block(data, "simulation", SIM_KEYS)
    if "scenario" in sb:
        if not isinstance(sb["scenario"], str):
            raise ConfigError("simulation.scenario: expected a path string")
        path = Path(sb["scenario"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"simulation.scenario: file not found: {path}")
        cfg.scenario_path = path
    if "step_s" in sb:
        cfg.step = _number(sb["step_s"], "simulation.step_s", positive=True)
    if "record_every" in sb:
        v = sb["record_every"]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError("simulation.record_every: expected a positive integer")
        cfg.record_every = v

    if "variant" in data:
        try:
            cfg.variant = ModelVariant.parse(data["variant"])
        except ValueError:
            raise ConfigError(f"variant: expected 'paper' or 'consistent', got {data['variant']!r}") from None
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("output_dir: expected a path string")
        cfg.output_dir = Path(data["output_dir"])
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data, path.parent)


def config_to_dict(cfg: RunConfig) -> dict:
    p = cfg.params
    inv = {v: k for k, v in PLANT_KEYS.items()}
    out = {
        "plant": {inv[name]: getattr(p, name) for name in PLANT_KEYS.values()},
        "operating_point": {k: cfg.kv_fields[v] for k, v in OP_KEYS.items()},
        "tuning": {k: getattr(cfg.tuning, v) for k, v in TUNING_KEYS.items()},
        "closure": {"evaporation": cfg.evaporation.value, "X_crit": cfg.X_crit,
                    "augment_bed": cfg.augment_bed},
        "simulation": {"record_every": cfg.record_every},
        "variant": cfg.variant.value,
        "output_dir": str(cfg.output_dir),
    }
    inv_op = {v: k for k, v in OP_OPTIONAL.items()}
    out["operating_point"].update({inv_op[k]: v for k, v in cfg.op_extras.items()})
    if cfg.step is not None:
        out["simulation"]["step_s"] = cfg.step
    if cfg.scenario_path is not None:
        out["simulation"]["scenario"] = str(cfg.scenario_path)
    return out
