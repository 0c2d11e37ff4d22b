"""Bandit-driven simulated annealing for the capacitated electric vehicle routing problem."""
from .instance import Instance, InstanceFormatError, load_instance, parse_instance
from .solution import Tour, Unrepairable, evaluate, validate
from .solver import RunRecord, SolverConfig, run

__version__ = "0.1.0"

__all__ = [
    "Instance", "InstanceFormatError", "load_instance", "parse_instance",
    "Tour", "Unrepairable", "evaluate", "validate",
    "RunRecord", "SolverConfig", "run",
]
