"""Dynamic model, operating-point solver, loop design and closed-loop simulation
of a fuel-fired pebble-bed dryer."""

from .config import RunConfig, load_config
from .control import imc_design, pi_direct_synthesis
from .efficiency import efficiency_full, efficiency_simplified
from .loops import ClosedPlant, Tuning, design_loops
from .model import ExogenousInputs, ModelVariant, PlantState, nonlinear_rhs
from .params import PlantParameters, derive_constants
from .simulate import Scenario, closed_loop_simulate, integrate, load_scenario
from .steady import KnownVariables, build_operating_point, closed_form_op, newton_solve

__version__ = "0.1.0"

__all__ = [
    "ClosedPlant", "ExogenousInputs", "KnownVariables", "ModelVariant", "PlantParameters",
    "PlantState", "RunConfig", "Scenario", "Tuning", "build_operating_point", "closed_form_op",
    "closed_loop_simulate", "derive_constants", "design_loops", "efficiency_full",
    "efficiency_simplified", "imc_design", "integrate", "load_config", "load_scenario",
    "newton_solve", "nonlinear_rhs", "pi_direct_synthesis",
]
