"""Bottom session: glue batching, relaxed solves, batch splitting, deferred screws.

The bottom session mixes gluing, placing and screwing. Solving it whole is
too large for the exact model, so consecutive glue lines are first merged
into batched nodes and each element's placement absorbs its critical
screws. The merged problem is solved with the glue open-time windows of
batched nodes relaxed; any window the expanded schedule breaks sends its
batch back to be split, and the loop repeats. The remaining screws are
inserted into idle slots of the finished level structure at the end.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cp import CpModel, Status, solve_monolithic
from .errors import InsertionError, IterationLimit, LaserError
from .model import (
    INF, ConflictMatrices, Eta, ProblemInstance, Schedule, TaskKind, TaskPrimitive, TemporalConstraint,
)
from .stn import Propagator, Timing, make_schedule, trivial_horizon

logger = logging.getLogger(__name__)

ACTIVE_WARN = 100


@dataclass
class BottomConfig:
    lam: float = 1.0
    cp_time_limit_s: float = 5.0
    max_splits: int = 20
    max_batch: int | None = None
    buffer_fraction: float | None = None
    check_insertions: bool = False


@dataclass
class WindowViolation:
    element: int | None
    constraint: TemporalConstraint
    overshoot: int


@dataclass
class BatchPlan:
    """Active nodes of the merged problem.

    ``groups[n]`` lists the original tasks of node ``n`` in execution order;
    ``relaxed[n]`` says whether the glue windows of node ``n`` are relaxed.
    """

    instance: ProblemInstance
    groups: list[tuple[int, ...]]
    kinds: list[TaskKind]
    relaxed: list[bool]
    deferred: list[int]

    @property
    def batch_membership(self) -> dict[int, list[int]]:
        return {n: list(g) for n, g in enumerate(self.groups) if self.kinds[n] in (TaskKind.GLUE, TaskKind.BATCHED_GLUE)}

    def node_of(self) -> dict[int, int]:
        return {i: n for n, g in enumerate(self.groups) for i in g}

    def relaxed_glues(self) -> set[int]:
        out = set()
        for n, g in enumerate(self.groups):
            if self.relaxed[n]:
                out.update(g)
        return out


@dataclass
class BottomReport:
    schedule: Schedule
    iterations: int
    splits: int
    plan: BatchPlan
    history: list[list[WindowViolation]] = field(default_factory=list)
    statuses: list[Status] = field(default_factory=list)


def _order_along(inst: ProblemInstance, ids: list[int]) -> list[int]:
    """Sort task ids along the principal axis of their coordinates."""
    if len(ids) < 2:
        return list(ids)
    pts = np.array([inst.tasks[i].entry for i in ids], dtype=float)
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    axis = vt[0]
    if abs(axis[1]) >= abs(axis[0]):
        axis = axis if axis[1] >= 0 else -axis
    else:
        axis = axis if axis[0] >= 0 else -axis
    proj = centred @ axis
    return [ids[p] for p in sorted(range(len(ids)), key=lambda p: (round(float(proj[p]), 9), ids[p]))]


def critical_screws(inst: ProblemInstance, screws: list[int]) -> list[int]:
    """The two end screws and the centre screw of an element (all of them if at most 3)."""
    if len(screws) <= 3:
        return list(screws)
    line = _order_along(inst, screws)
    return [line[0], line[len(line) // 2], line[-1]]


def _common_actors(inst, ids):
    caps = set(inst.tasks[ids[0]].durations)
    for i in ids[1:]:
        caps &= set(inst.tasks[i].durations)
    return caps


def initialize_batches(instance: ProblemInstance, max_batch: int | None = None) -> BatchPlan:
    inst = instance
    edge = inst.conflicts.edge
    glues = sorted((i for i, t in enumerate(inst.tasks) if t.kind is TaskKind.GLUE),
                   key=lambda i: (inst.tasks[i].element if inst.tasks[i].element is not None else math.inf, i))
    groups: list[tuple[int, ...]] = []
    kinds: list[TaskKind] = []
    cur: list[int] = []

    def flush():
        if cur:
            groups.append(tuple(cur))
            kinds.append(TaskKind.BATCHED_GLUE if len(cur) > 1 else TaskKind.GLUE)
            cur.clear()

    for g in glues:
        if cur and (set(inst.tasks[g].durations) != set(inst.tasks[cur[-1]].durations)
                    or (max_batch is not None and len(cur) >= max_batch)
                    or edge(cur[-1], g)):
            flush()
        cur.append(g)
    flush()

    screws_of: dict[int, list[int]] = {}
    for i, t in enumerate(inst.tasks):
        if t.kind is TaskKind.SCREW and t.element is not None and t.priority_class is None:
            screws_of.setdefault(t.element, []).append(i)
    placed_elements = set()
    deferred: list[int] = []
    taken = set(i for grp in groups for i in grp)
    for p, t in enumerate(inst.tasks):
        if t.kind is not TaskKind.PLACE or t.element is None or t.element in placed_elements:
            continue
        placed_elements.add(t.element)
        screws = screws_of.get(t.element, [])
        crit = critical_screws(inst, screws)
        members = [p]
        pending = list(crit)
        while pending:
            last = inst.tasks[members[-1]].exit
            nxt = min(pending, key=lambda s: (math.dist(last, inst.tasks[s].entry), s))
            pending.remove(nxt)
            if edge(members[-1], nxt) or not (_common_actors(inst, members) & set(inst.tasks[nxt].durations)):
                deferred.append(nxt)
                continue
            members.append(nxt)
        groups.append(tuple(members))
        kinds.append(TaskKind.PLACE)
        taken.update(members)
        deferred.extend(s for s in screws if s not in crit)
    taken.update(deferred)
    for i, t in enumerate(inst.tasks):
        if i not in taken:
            groups.append((i,))
            kinds.append(t.kind)
    relaxed = [k in (TaskKind.GLUE, TaskKind.BATCHED_GLUE) for k in kinds]
    return BatchPlan(inst, groups, kinds, relaxed, sorted(set(deferred)))


def apply_relaxation(temporal: list[TemporalConstraint], plan: BatchPlan) -> tuple[list[TemporalConstraint], set[int]]:
    """Lift the window upper bounds leaving relaxed glue nodes.

    Returns the new list (same order) and the indices that were relaxed.
    """
    glues = plan.relaxed_glues()
    out, idx = [], set()
    for n, c in enumerate(temporal):
        if c.u in glues and c.upper != INF:
            out.append(TemporalConstraint(c.u, c.v, c.eta_u, c.eta_v, c.lower, INF))
            idx.add(n)
        else:
            out.append(c)
    return out, idx


def _offsets(inst, members, k):
    """Start offset of every member inside a merged node run by actor k, and the node duration."""
    t, off = 0, {}
    for pos, m in enumerate(members):
        off[m] = t
        t += inst.tasks[m].durations[k]
        if pos + 1 < len(members):
            t += inst.rho(k, m, members[pos + 1])
    return off, t


def build_active(plan: BatchPlan, temporal: list[TemporalConstraint]) -> ProblemInstance:
    """Merged problem over the plan's active nodes.

    Constraints between members are mapped onto node start/end so that any
    schedule of the merged problem satisfies them after expansion: each
    endpoint moves to whichever node boundary makes the constraint tighter.
    """
    inst = plan.instance
    node_of = plan.node_of()
    tasks = []
    for n, grp in enumerate(plan.groups):
        if len(grp) == 1:
            t = inst.tasks[grp[0]]
            tasks.append(TaskPrimitive(n, t.kind, t.element, t.coords, t.durations, t.footprint,
                                       t.priority_class, t.tool, ()))
            continue
        durations = {k: _offsets(inst, grp, k)[1] for k in sorted(_common_actors(inst, list(grp)))}
        first, last = inst.tasks[grp[0]], inst.tasks[grp[-1]]
        fp = frozenset().union(*(inst.tasks[m].footprint for m in grp))
        tasks.append(TaskPrimitive(n, plan.kinds[n], first.element, (first.entry, last.exit), durations, fp,
                                   None, first.tool, tuple(grp)))

    def endpoint(i, eta, want_late):
        n = node_of[i]
        grp = plan.groups[n]
        if eta is Eta.START and i == grp[0]:
            return n, Eta.START
        if eta is Eta.END and i == grp[-1]:
            return n, Eta.END
        return n, Eta.END if want_late else Eta.START

    mapped = []
    for c in temporal:
        if c.v not in node_of or (c.u is not None and c.u not in node_of):
            continue
        if c.u is not None and node_of[c.u] == node_of[c.v]:
            continue
        # lower part: v as early as possible, u as late as possible
        v_lo = endpoint(c.v, c.eta_v, False)
        u_lo = endpoint(c.u, c.eta_u, True) if c.u is not None else (None, Eta.START)
        if c.upper == INF:
            mapped.append(TemporalConstraint(u_lo[0], v_lo[0], u_lo[1], v_lo[1], c.lower, INF))
            continue
        v_hi = endpoint(c.v, c.eta_v, True)
        u_hi = endpoint(c.u, c.eta_u, False) if c.u is not None else (None, Eta.START)
        if (v_lo, u_lo) == (v_hi, u_hi):
            mapped.append(TemporalConstraint(u_lo[0], v_lo[0], u_lo[1], v_lo[1], c.lower, c.upper))
        else:
            mapped.append(TemporalConstraint(u_lo[0], v_lo[0], u_lo[1], v_lo[1], c.lower, INF))
            mapped.append(TemporalConstraint(u_hi[0], v_hi[0], u_hi[1], v_hi[1], -10 ** 12, c.upper))

    node = set()
    for i, j, a, b in inst.conflicts.node_entries():
        if i in node_of and j in node_of and node_of[i] != node_of[j]:
            node.add((node_of[i], node_of[j], a, b))
    groups = plan.groups
    parent = inst.conflicts
    conflicts = ConflictMatrices(node, (), lambda x, y: parent.edge(groups[x][-1], groups[y][0]))

    transitions = {}
    for k in range(inst.n_actors):
        mine = [n for n, t in enumerate(tasks) if k in t.durations]
        for x in mine:
            for y in mine:
                if x != y:
                    transitions[(k, x, y)] = inst.rho(k, groups[x][-1], groups[y][0])
    active = ProblemInstance(
        tasks=tasks, actors=inst.actors, temporal=mapped, conflicts=conflicts, transitions=transitions,
        adhesive_open_s=inst.adhesive_open_s, adhesive_close_s=inst.adhesive_close_s,
        safety_buffer_fraction=0.0, meta={"name": "active"},
    )
    if active.n_tasks > ACTIVE_WARN:
        logger.warning("%d active nodes after batching; the merged model may be slow", active.n_tasks)
    return active


def expand(plan: BatchPlan, schedule: Schedule) -> tuple[dict[int, int], dict[int, list[int]], dict[int, int]]:
    """Assignment, sequences and levels of the original tasks behind a merged schedule."""
    assignment, level = {}, {}
    sequences: dict[int, list[int]] = {}
    for k, seq in schedule.sequences.items():
        out = sequences.setdefault(k, [])
        for n in seq:
            for m in plan.groups[n]:
                out.append(m)
                assignment[m] = k
                level[m] = schedule.level[n]
    return assignment, sequences, level


def find_violations(instance: ProblemInstance, timing: Timing, temporal: list[TemporalConstraint]) -> list[WindowViolation]:
    """Every constraint between scheduled tasks that the timestamps break, with its overshoot."""
    S, E = timing.start, timing.end
    out = []
    for c in temporal:
        if c.v not in S or (c.u is not None and c.u not in S):
            continue
        tv = E[c.v] if c.eta_v is Eta.END else S[c.v]
        tu = 0 if c.u is None else (E[c.u] if c.eta_u is Eta.END else S[c.u])
        diff = tv - tu
        over = max(c.lower - diff, diff - c.upper if c.upper != INF else 0)
        if over > 0:
            anchor = c.u if c.u is not None else c.v
            out.append(WindowViolation(instance.tasks[anchor].element, c, int(over)))
    return out


def split_batches(plan: BatchPlan, violations: list[WindowViolation]) -> tuple[BatchPlan, int]:
    """Bisect every batch behind a violation; a violating singleton loses its relaxation.

    Returns the new plan and the number of batches changed. Batches only
    ever shrink, so repeated splitting terminates.
    """
    node_of = plan.node_of()
    hit = set()
    for v in violations:
        for i in (v.constraint.u, v.constraint.v):
            if i is not None and i in node_of and plan.relaxed[node_of[i]]:
                hit.add(node_of[i])
    if not hit:
        raise IterationLimit("violations not caused by a relaxed batch", violations)
    groups, kinds, relaxed = [], [], []
    for n, grp in enumerate(plan.groups):
        if n not in hit:
            groups.append(grp)
            kinds.append(plan.kinds[n])
            relaxed.append(plan.relaxed[n])
        elif len(grp) == 1:
            groups.append(grp)
            kinds.append(plan.kinds[n])
            relaxed.append(False)
        else:
            half = (len(grp) + 1) // 2
            for part in (grp[:half], grp[half:]):
                groups.append(part)
                kinds.append(TaskKind.BATCHED_GLUE if len(part) > 1 else TaskKind.GLUE)
                relaxed.append(True)
    return BatchPlan(plan.instance, groups, kinds, relaxed, plan.deferred), len(hit)


def _lowest_level(inst, temporal, i, level):
    lo = 0
    for c in temporal:
        if c.v == i and c.u is not None and c.u in level and c.lower >= 0:
            lo = max(lo, level[c.u])
    return lo


def insert_deferred(instance: ProblemInstance, temporal: list[TemporalConstraint], horizon: int,
                    assignment: dict[int, int], sequences: dict[int, list[int]], level: dict[int, int],
                    deferred: list[int], check: bool = False) -> Timing:
    """Insert each deferred task into an idle slot, or open a level for it.

    A slot is the end of one actor's run on a level. The task must be free
    of node conflicts with the other actors' tasks on that level and of edge
    conflicts with its neighbours in the sequence. Among feasible slots the
    first one that leaves the makespan unchanged wins, otherwise the one
    with the smallest makespan. When no slot works, positions inside runs
    are tried (a later task of the run may depend on this one), then a new
    level of its own. Mutates the decision maps and returns the timing.
    """
    inst = instance
    prop = Propagator(inst, temporal, horizon)
    node_pairs = inst.conflicts.node_pairs
    edge = inst.conflicts.edge
    timing = prop.times(assignment, sequences, level)
    if timing is None:
        raise InsertionError("the schedule is infeasible before insertion")
    if check:
        base = _violation_count(inst, temporal, assignment, sequences, level, timing)
    for s in sorted(deferred, key=lambda i: (_lowest_level(inst, temporal, i, level), i)):
        top = max(level.values(), default=-1)
        lo = _lowest_level(inst, temporal, s, level)
        on_level: dict[int, list[int]] = {}
        for i, l in level.items():
            on_level.setdefault(l, []).append(i)
        best = None
        # end-of-run slots first; positions inside a run only if none fits
        for inside in (False, True):
            for l in range(lo, top + 1):
                for k in inst.capable(s):
                    if any((k, assignment[j]) in node_pairs(s, j) for j in on_level.get(l, ()) if assignment[j] != k):
                        continue
                    seq = sequences.setdefault(k, [])
                    end = 0
                    while end < len(seq) and level[seq[end]] <= l:
                        end += 1
                    if inside:
                        first = end
                        while first > 0 and level[seq[first - 1]] == l:
                            first -= 1
                        positions = range(first, end)
                    else:
                        positions = (end,)
                    for pos in positions:
                        if pos > 0 and level[seq[pos - 1]] == l and edge(seq[pos - 1], s):
                            continue
                        if pos < len(seq) and level[seq[pos]] == l and edge(s, seq[pos]):
                            continue
                        seq.insert(pos, s)
                        assignment[s], level[s] = k, l
                        t = prop.times(assignment, sequences, level)
                        seq.pop(pos)
                        del assignment[s], level[s]
                        if t is None:
                            continue
                        key = (t.makespan, l, k, pos)
                        if best is None or key < best[0]:
                            best = (key, k, pos, l, t)
                if best is not None and best[0][0] == timing.makespan:
                    break
            if best is not None:
                break
        fresh = False
        if best is None:
            # a level of its own, opened at p (later levels shift up by one)
            for p in range(lo, top + 2):
                shifted = {i: (l + 1 if l >= p else l) for i, l in level.items()}
                for k in inst.capable(s):
                    seq = sequences.setdefault(k, [])
                    pos = sum(1 for i in seq if level[i] < p)
                    seq.insert(pos, s)
                    assignment[s], shifted[s] = k, p
                    t = prop.times(assignment, sequences, shifted)
                    seq.pop(pos)
                    del assignment[s], shifted[s]
                    if t is not None and (best is None or (t.makespan, p, k) < best[0]):
                        best = ((t.makespan, p, k), k, pos, p, t)
            fresh = True
        if best is None:
            raise InsertionError(f"task {inst.task_ids[s]!r} fits no slot and no new level")
        _, k, pos, l, timing = best
        if fresh:
            for i in level:
                if level[i] >= l:
                    level[i] += 1
        sequences[k].insert(pos, s)
        assignment[s], level[s] = k, l
        if check:
            now = _violation_count(inst, temporal, assignment, sequences, level, timing)
            if now > base:
                raise InsertionError(f"inserting {inst.task_ids[s]!r} added violations")
    return timing


def _violation_count(inst, temporal, assignment, sequences, level, timing):
    from .oracle import validate_schedule

    keep = sorted(assignment)
    sub = inst.subset(keep)
    remap = {old: new for new, old in enumerate(keep)}
    sched = make_schedule({remap[i]: k for i, k in assignment.items()},
                          {k: [remap[i] for i in seq] for k, seq in sequences.items()},
                          {remap[i]: l for i, l in level.items()},
                          Timing({remap[i]: v for i, v in timing.start.items()},
                                 {remap[i]: v for i, v in timing.end.items()}, timing.barriers))
    return len(validate_schedule(sub, sched, temporal=sub_temporal(temporal, remap)))


def sub_temporal(temporal, remap):
    return [TemporalConstraint(None if c.u is None else remap[c.u], remap[c.v], c.eta_u, c.eta_v, c.lower, c.upper)
            for c in temporal if c.v in remap and (c.u is None or c.u in remap)]


def bottom_pipeline(instance: ProblemInstance, config: BottomConfig | None = None) -> BottomReport:
    cfg = config or BottomConfig()
    inst = instance
    frac = inst.safety_buffer_fraction if cfg.buffer_fraction is None else cfg.buffer_fraction
    temporal = inst.buffered_temporal(frac)
    horizon = trivial_horizon(inst)
    plan = initialize_batches(inst, cfg.max_batch)
    history, statuses = [], []
    splits = 0
    iteration = 0
    while True:
        iteration += 1
        relaxed, _ = apply_relaxation(temporal, plan)
        active = build_active(plan, relaxed)
        report = solve_monolithic(CpModel(active, lam=cfg.lam, temporal=active.temporal,
                                          horizon=trivial_horizon(active), time_limit_s=cfg.cp_time_limit_s))
        statuses.append(report.status)
        if report.schedule is None:
            raise LaserError(f"merged bottom model: {report.status.value} in iteration {iteration}")
        assignment, sequences, level = expand(plan, report.schedule)
        timing = Propagator(inst, relaxed, horizon).times(assignment, sequences, level)
        if timing is None:
            raise LaserError("expanded bottom schedule is inconsistent")
        violations = find_violations(inst, timing, temporal)
        history.append(violations)
        logger.info("bottom iteration %d: %d active nodes, %d violations", iteration, active.n_tasks, len(violations))
        if not violations:
            break
        if iteration > cfg.max_splits:
            raise IterationLimit(f"violations persist after {cfg.max_splits} split rounds", violations)
        plan, changed = split_batches(plan, violations)
        splits += changed
    timing = insert_deferred(inst, temporal, horizon, assignment, sequences, level, plan.deferred,
                             check=cfg.check_insertions)
    for k in range(inst.n_actors):
        sequences.setdefault(k, [])
    schedule = make_schedule(assignment, sequences, level, timing)
    return BottomReport(schedule, iteration, splits, plan, history, statuses)


def solve_bottom(instance: ProblemInstance, config: BottomConfig | None = None) -> Schedule:
    return bottom_pipeline(instance, config).schedule
