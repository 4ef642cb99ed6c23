"""Level-barrier scheduling for multi-robot timber slab assembly."""

from .cp import CpModel, SolveReport, Status, solve_monolithic
from .errors import LaserError
from .generator import GeneratorSpec, generate_slab_instance, random_instance
from .hetero import BottomConfig, solve_bottom
from .homo import TopConfig, set_partition, solve_top
from .model import (Actor, ProblemInstance, Schedule, TaskKind, TaskPrimitive, TemporalConstraint,
                    load_instance, load_schedule, save_instance, save_schedule)
from .oracle import validate_schedule
from .pipeline import solve
from .sim import NoiseModel, compile_schedule, simulate

__version__ = "0.1.0"

__all__ = [
    "Actor", "BottomConfig", "CpModel", "GeneratorSpec", "LaserError", "NoiseModel", "ProblemInstance",
    "Schedule", "SolveReport", "Status", "TaskKind", "TaskPrimitive", "TemporalConstraint", "TopConfig",
    "compile_schedule", "generate_slab_instance", "load_instance", "load_schedule", "random_instance",
    "save_instance", "save_schedule", "set_partition", "simulate", "solve", "solve_bottom", "solve_monolithic",
    "solve_top", "validate_schedule",
]
