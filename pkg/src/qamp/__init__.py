"""Open three-level quantum amplifier: dynamics, thermodynamics and phase space."""

from .config import ScenarioConfig, parse_config, serialize_config
from .hilbert import AtomStateSpec, FieldStateSpec, HilbertLayout, build_joint_state, partial_trace
from .integrate import IntegratorConfig, evolve
from .liouville import AmplifierModel
from .phasespace import GridSpec, PhaseSpaceGrid, q_function, wigner_function
from .scenario import preset_configs, reproduce_preset, run_scenario
from .semiclassical import SemiclassicalModel, sc_analytic_currents, sc_numeric_steady_state

__version__ = "0.1.0"
