"""Event-triggered adaptive cooperative output regulation: synthesis and simulation."""

from .controller import ControllerParams, ControllerState, Mode
from .graph import Topology, check_assumptions, compute_h_matrix
from .plant import AgentPlant, Exosystem, build_example_scenario
from .regulator import InternalModelPair, synthesize
from .scenario import Scenario, load_scenario
from .sim import Trace, run, run_baseline

__all__ = [
    "AgentPlant", "ControllerParams", "ControllerState", "Exosystem", "InternalModelPair",
    "Mode", "Scenario", "Topology", "Trace", "build_example_scenario", "check_assumptions",
    "compute_h_matrix", "load_scenario", "run", "run_baseline", "synthesize",
]
