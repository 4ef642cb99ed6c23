"""Independent schedule checker.

Evaluates each constraint of the level-barrier model directly on the
timestamps of a finished schedule. It deliberately shares nothing with the
solvers' propagation code, so a solver bug shows up here as a violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import ScheduleReferenceError
from .model import INF, Eta, ProblemInstance, Schedule


@dataclass(frozen=True)
class Violation:
    constraint: str
    tasks: tuple
    amount: float
    message: str

    def __str__(self):
        return f"[{self.constraint}] {self.message} (tasks {self.tasks}, by {self.amount})"


def validate_schedule(inst: ProblemInstance, schedule: Schedule, strict_windows: bool = True,
                      temporal=None) -> list[Violation]:
    """Return every violated constraint; an empty list means the schedule is valid.

    With ``strict_windows`` the temporal constraints are checked at their
    unbuffered bounds, otherwise at the instance's safety-buffered bounds.
    ``temporal`` overrides the constraint set altogether.
    """
    n, m = inst.n_tasks, inst.n_actors
    out: list[Violation] = []
    add = out.append

    for table in (schedule.assignment, schedule.level, schedule.start, schedule.end):
        for i in table:
            if not (isinstance(i, int) and 0 <= i < n):
                raise ScheduleReferenceError(f"unknown task {i!r}")
    for k, seq in schedule.sequences.items():
        if not (isinstance(k, int) and 0 <= k < m):
            raise ScheduleReferenceError(f"unknown actor {k!r}")
        for i in seq:
            if not (isinstance(i, int) and 0 <= i < n):
                raise ScheduleReferenceError(f"unknown task {i!r}")
    for i, k in schedule.assignment.items():
        if not (isinstance(k, int) and 0 <= k < m):
            raise ScheduleReferenceError(f"unknown actor {k!r}")

    # every task on exactly one actor, matching its sequence
    where: dict[int, list[int]] = {}
    for k, seq in schedule.sequences.items():
        for i in seq:
            where.setdefault(i, []).append(k)
    for i in range(n):
        k = schedule.assignment.get(i)
        if k is None:
            add(Violation("assignment", (i,), 1, f"task {i} unassigned"))
            continue
        if k not in inst.tasks[i].durations:
            add(Violation("assignment", (i,), 1, f"task {i} assigned to incapable actor {k}"))
        if where.get(i) != [k]:
            add(Violation("assignment", (i,), len(where.get(i, [])), f"task {i} appears in sequences {where.get(i, [])}, assigned to {k}"))
        if i not in schedule.start or i not in schedule.end or i not in schedule.level:
            add(Violation("assignment", (i,), 1, f"task {i} lacks times or level"))
    if any(v.constraint == "assignment" and "lacks" in v.message for v in out):
        return out

    S, E, L = schedule.start, schedule.end, schedule.level

    def dur(i):
        return inst.tasks[i].durations.get(schedule.assignment[i], 0)

    # durations
    for i in range(n):
        if S[i] < 0:
            add(Violation("duration", (i,), -S[i], f"task {i} starts before time 0"))
        gap = S[i] + dur(i) - E[i]
        if gap > 0:
            add(Violation("duration", (i,), gap, f"task {i} ends {gap}s before its duration elapses"))

    # gaps, level order and edge conflicts along each sequence
    for k, seq in schedule.sequences.items():
        for a, b in zip(seq, seq[1:]):
            need = E[a] + inst.rho(k, a, b) - S[b]
            if need > 0:
                add(Violation("transition", (a, b), need, f"actor {k}: gap {a}->{b} short by {need}s"))
            if L[b] < L[a]:
                add(Violation("level-order", (a, b), L[a] - L[b], f"actor {k}: level drops from {L[a]} to {L[b]}"))
            if L[a] == L[b] and inst.conflicts.edge(a, b):
                add(Violation("edge-conflict", (a, b), 1, f"edge conflict {a}->{b} inside level {L[a]}"))

    # temporal windows
    if temporal is None:
        temporal = inst.temporal if strict_windows else inst.buffered_temporal()
    for c in temporal:
        tv = E[c.v] if c.eta_v is Eta.END else S[c.v]
        if c.u is None:
            tu = 0
        else:
            tu = E[c.u] if c.eta_u is Eta.END else S[c.u]
        diff = tv - tu
        if diff < c.lower:
            add(Violation("temporal", (c.u, c.v), c.lower - diff, f"{c.u}->{c.v} separation {diff}s below {c.lower}s"))
        if c.upper != INF and diff > c.upper:
            add(Violation("temporal", (c.u, c.v), diff - c.upper, f"{c.u}->{c.v} separation {diff}s above {c.upper}s"))

    # node conflicts
    by_level: dict[int, list[int]] = {}
    for i in range(n):
        by_level.setdefault(L[i], []).append(i)
    A = schedule.assignment
    for lvl, members in by_level.items():
        for i, j in combinations(members, 2):
            if inst.conflicts.node(i, j, A[i], A[j]):
                add(Violation("node-conflict", (i, j), 1, f"node conflict between {i} and {j} on level {lvl}"))

    # barriers
    B = schedule.barriers
    top = max(L.values(), default=0)
    if len(B) < top + 1:
        add(Violation("barrier", (), top + 1 - len(B), f"{len(B)} barriers for {top + 1} levels"))
    else:
        for l in range(len(B) - 1):
            if B[l] > B[l + 1]:
                add(Violation("barrier", (), B[l] - B[l + 1], f"barrier {l} after barrier {l + 1}"))
        for i in range(n):
            if E[i] > B[L[i]]:
                add(Violation("barrier", (i,), E[i] - B[L[i]], f"task {i} ends after barrier {L[i]}"))
        earliest_after = {}
        for i in range(n):
            for l in range(L[i]):
                if l not in earliest_after or S[i] < S[earliest_after[l]]:
                    earliest_after[l] = i
        for l, j in earliest_after.items():
            if l in by_level and S[j] < B[l]:
                add(Violation("barrier", (j,), B[l] - S[j], f"task {j} starts before barrier {l}"))

    # objective terms
    cmax = max(E.values(), default=0)
    if schedule.makespan != cmax:
        add(Violation("objective", (), abs(schedule.makespan - cmax), f"makespan {schedule.makespan} != last end {cmax}"))
    if schedule.max_level != top:
        add(Violation("objective", (), abs(schedule.max_level - top), f"max_level {schedule.max_level} != {top}"))
    return out
