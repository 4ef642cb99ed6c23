"""One entry point for every solve mode, shared by the CLI, the benchmark and the estimators."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .cp import DEFAULT_TIME_LIMIT, CpModel, Status, solve_monolithic
from .errors import LaserError
from .generator import session_split
from .hetero import BottomConfig, bottom_pipeline
from .homo import TopConfig, top_pipeline
from .model import ProblemInstance, Schedule
from .stn import Propagator, make_schedule, trivial_horizon

logger = logging.getLogger(__name__)

MODES = ("monolithic", "bottom", "top", "hybrid")


@dataclass
class SolveOutcome:
    mode: str
    status: Status
    schedule: Schedule | None
    wall_time_s: float
    details: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return self.status.exit_code


def _lift(schedule: Schedule, keep: list[int], level_offset: int = 0):
    """Map a sub-instance schedule's decisions back to parent ids."""
    assignment = {keep[i]: k for i, k in schedule.assignment.items()}
    sequences = {k: [keep[i] for i in seq] for k, seq in schedule.sequences.items()}
    level = {keep[i]: l + level_offset for i, l in schedule.level.items()}
    return assignment, sequences, level


def _assignment_fraction(rep) -> float:
    """Share of the priority and reinforcement sets placed by their own partitions."""
    total = sum(len(p.assignment) + len(p.unassigned) for p in rep.partitions[:2])
    placed = sum(len(p.assignment) for p in rep.partitions[:2])
    return placed / total if total else 1.0


def solve_hybrid(instance: ProblemInstance, bottom: BottomConfig, top: TopConfig) -> tuple[Schedule, dict]:
    """Bottom session then top session, stitched into one schedule of the whole instance."""
    inst = instance
    low, high = session_split(inst)
    assignment: dict[int, int] = {}
    sequences: dict[int, list[int]] = {k: [] for k in range(inst.n_actors)}
    level: dict[int, int] = {}
    details: dict = {}
    offset = 0
    if low:
        sub = inst.subset(low)
        rep = bottom_pipeline(sub, bottom)
        a, s, l = _lift(rep.schedule, low)
        assignment.update(a)
        level.update(l)
        for k, seq in s.items():
            sequences[k].extend(seq)
        offset = rep.schedule.n_levels
        details.update(bottom_levels=rep.schedule.n_levels, bottom_iterations=rep.iterations,
                       bottom_splits=rep.splits)
    if high:
        sub = inst.subset(high)
        rep = top_pipeline(sub, top)
        a, s, l = _lift(rep.schedule, high, offset)
        assignment.update(a)
        level.update(l)
        for k, seq in s.items():
            sequences[k].extend(seq)
        details.update(top_levels=rep.schedule.n_levels, demoted=len(rep.demoted),
                       assignment_fraction=_assignment_fraction(rep))
    frac = inst.safety_buffer_fraction if bottom.buffer_fraction is None else bottom.buffer_fraction
    timing = Propagator(inst, inst.buffered_temporal(frac), trivial_horizon(inst)).times(assignment, sequences, level)
    if timing is None:
        raise LaserError("stitched sessions admit no schedule")
    return make_schedule(assignment, sequences, level, timing), details


def solve(instance: ProblemInstance, mode: str = "monolithic", *, lam: float = 1.0,
          time_limit_s: float = DEFAULT_TIME_LIMIT, buffer_fraction: float | None = None,
          bottom: BottomConfig | None = None, top: TopConfig | None = None) -> SolveOutcome:
    """Solve ``instance`` in ``mode``.

    Heuristic modes (bottom, top, hybrid) never prove optimality and report
    ``feasible`` on success.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    t0 = time.monotonic()
    bottom = bottom or BottomConfig(lam=lam, buffer_fraction=buffer_fraction,
                                   cp_time_limit_s=min(BottomConfig.cp_time_limit_s, time_limit_s))
    top = top or TopConfig(lam=lam, buffer_fraction=buffer_fraction, time_budget_s=time_limit_s)
    if mode == "monolithic":
        rep = solve_monolithic(CpModel(instance, lam=lam, buffer_fraction=buffer_fraction, time_limit_s=time_limit_s))
        return SolveOutcome(mode, rep.status, rep.schedule, time.monotonic() - t0,
                            {"objective": rep.objective, "nodes": rep.nodes_explored})
    if mode == "bottom":
        rep = bottom_pipeline(instance, bottom)
        return SolveOutcome(mode, Status.FEASIBLE, rep.schedule, time.monotonic() - t0,
                            {"iterations": rep.iterations, "splits": rep.splits})
    if mode == "top":
        rep = top_pipeline(instance, top)
        return SolveOutcome(mode, Status.FEASIBLE, rep.schedule, time.monotonic() - t0,
                            {"demoted": len(rep.demoted), "bounced": len(rep.bounced),
                             "assignment_fraction": _assignment_fraction(rep)})
    sched, details = solve_hybrid(instance, bottom, top)
    return SolveOutcome(mode, Status.FEASIBLE, sched, time.monotonic() - t0, details)
