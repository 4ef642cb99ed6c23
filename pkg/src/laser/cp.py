"""Monolithic level-barrier model and its branch-and-bound search.

Decisions are branched in the order assignment -> insertion position in
the actor's sequence -> level. Levels are kept as a relative order while
searching (a new level may be opened between two existing ones) and are
compacted on output. Timestamps are never branched on: after every
decision the earliest start times are recomputed by
:class:`~laser.stn.Propagator`, which also detects infeasibility.
"""

from __future__ import annotations

import enum
import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .model import INF, Eta, ProblemInstance, Schedule, TemporalConstraint
from .stn import Propagator, make_schedule, trivial_horizon

logger = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 1800.0


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"

    @property
    def exit_code(self) -> int:
        return {"optimal": 0, "feasible": 2, "infeasible": 3, "timeout": 4}[self.value]


@dataclass
class CpModel:
    instance: ProblemInstance
    lam: float = 1.0
    buffer_fraction: float | None = None
    horizon: int | None = None
    time_limit_s: float = DEFAULT_TIME_LIMIT
    relax_edge_conflicts: bool = False
    relax_assignment: bool = False
    fixed_levels: int | None = None
    temporal: Sequence[TemporalConstraint] | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.horizon is None:
            self.horizon = trivial_horizon(self.instance)
        if self.temporal is None:
            frac = self.instance.safety_buffer_fraction if self.buffer_fraction is None else self.buffer_fraction
            self.temporal = self.instance.buffered_temporal(frac)


@dataclass
class SolveReport:
    status: Status
    schedule: Schedule | None
    objective: float | None
    nodes_explored: int = 0
    wall_time_s: float = 0.0
    unassigned: list[int] = field(default_factory=list)


def static_heads(inst: ProblemInstance, temporal: Sequence[TemporalConstraint]) -> list[int]:
    """Earliest start of each task from lower bounds alone, with every task at its fastest actor."""
    n = inst.n_tasks
    dmin = [inst.min_duration(i) for i in range(n)]
    dmax = [max(t.durations.values()) for t in inst.tasks]
    head = [0] * n
    for c in temporal:
        if c.u is None:
            off = dmax[c.v] if c.eta_v is Eta.END else 0
            head[c.v] = max(head[c.v], c.lower - off)
    arcs = []
    for c in temporal:
        if c.u is None:
            continue
        # s_v >= s_u + lower + d_u[end] - d_v[end]; pick the weakest durations for a valid bound
        w = c.lower + (dmin[c.u] if c.eta_u is Eta.END else 0) - (dmax[c.v] if c.eta_v is Eta.END else 0)
        arcs.append((c.u, c.v, w))
    for _ in range(n):
        changed = False
        for u, v, w in arcs:
            if head[u] + w > head[v]:
                head[v] = head[u] + w
                changed = True
        if not changed:
            break
    return [max(h, 0) for h in head]


def lower_bound(model: CpModel) -> int:
    """max(critical path over lower-bound constraints, total work / number of actors)."""
    inst = model.instance
    if not inst.n_tasks:
        return 0
    heads = static_heads(inst, model.temporal)
    cp = max(heads[i] + inst.min_duration(i) for i in range(inst.n_tasks))
    work = sum(inst.min_duration(i) for i in range(inst.n_tasks))
    return max(cp, math.ceil(work / inst.n_actors))


def branching_order(inst: ProblemInstance, temporal: Sequence[TemporalConstraint]) -> list[int]:
    """Topological order of the constraint graph.

    Among ready tasks, those tied to an already ordered task by a bounded
    window come first, so window partners are decided close together;
    otherwise the lowest id goes first.
    """
    n = inst.n_tasks
    succ: dict[int, set[int]] = {i: set() for i in range(n)}
    windowed: dict[int, set[int]] = {i: set() for i in range(n)}
    indeg = [0] * n
    for c in temporal:
        if c.u is None or c.u == c.v:
            continue
        if c.upper != INF:
            windowed[c.u].add(c.v)
            windowed[c.v].add(c.u)
        if c.lower >= 0 and c.v not in succ[c.u]:
            succ[c.u].add(c.v)
            indeg[c.v] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    urgent: list[int] = []
    pulled = set()
    done = set()
    order = []
    while ready or urgent:
        if urgent:
            i = heapq.heappop(urgent)
            if i in done:
                continue
        else:
            i = heapq.heappop(ready)
            if i in done:
                continue
        done.add(i)
        order.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(urgent if j in pulled else ready, j)
        for j in windowed[i]:
            if j not in done and j not in pulled:
                pulled.add(j)
                if indeg[j] == 0:
                    heapq.heappush(urgent, j)
    if len(order) < n:
        return list(range(n))
    return order


class _Search:
    def __init__(self, model: CpModel, deadline: float):
        self.model = model
        self.inst = inst = model.instance
        self.lam = model.lam
        self.deadline = deadline
        self.prop = Propagator(inst, model.temporal, model.horizon)
        self.order = branching_order(inst, model.temporal)
        self.heads = static_heads(inst, model.temporal)
        self.dmin = [inst.min_duration(i) for i in range(inst.n_tasks)]
        self.K = inst.n_actors
        self.root_lb = lower_bound(model)
        self._rho_lb = self._make_rho_lb()
        self.assignment: dict[int, int] = {}
        self.sequences: dict[int, list[int]] = {k: [] for k in range(self.K)}
        self.level: dict[int, int] = {}
        self.groups: list[list[int]] = []
        self.skipped: list[int] = []
        self.best_obj = INF
        self.best: Schedule | None = None
        self.best_skipped: list[int] = []
        self.nodes = 0
        self.timed_out = False
        self.exhausted = False
        self.diving = False

    def _make_rho_lb(self):
        """Transition weight that no later insertion between a and b can undercut.

        Inserting tasks between consecutive a, b replaces rho(a, b) by a path
        through at least one more task, which costs at least the cheapest
        transition out of a, the shortest duration, and the cheapest
        transition into b.
        """
        inst = self.inst
        n = inst.n_tasks
        out_min, in_min, dmin = {}, {}, {}
        for k in range(self.K):
            mine = [i for i in range(n) if k in inst.tasks[i].durations]
            dmin[k] = min((inst.tasks[i].durations[k] for i in mine), default=0)
            if len(mine) > 300:
                # the quadratic scan is too slow; zero is always a valid floor
                for i in mine:
                    out_min[(k, i)] = in_min[(k, i)] = 0
                continue
            for i in mine:
                out_min[(k, i)] = min((inst.rho(k, i, j) for j in mine if j != i), default=0)
                in_min[(k, i)] = min((inst.rho(k, j, i) for j in mine if j != i), default=0)

        def rho_lb(k, a, b):
            return min(inst.rho(k, a, b), out_min[(k, a)] + dmin[k] + in_min[(k, b)])

        return rho_lb

    def timing(self, depth):
        if depth == len(self.order) or self.diving:
            return self.prop.times(self.assignment, self.sequences, self.level)
        return self.prop.times(self.assignment, self.sequences, self.level, rho=self._rho_lb)

    # -- state edits -------------------------------------------------------
    def _apply(self, i, k, p, g, new):
        self.assignment[i] = k
        self.sequences[k].insert(p, i)
        if new:
            for j, l in self.level.items():
                if l >= g:
                    self.level[j] = l + 1
            self.groups.insert(g, [i])
        else:
            self.groups[g].append(i)
        self.level[i] = g

    def _undo(self, i, k, p, g, new):
        del self.assignment[i]
        self.sequences[k].pop(p)
        del self.level[i]
        if new:
            self.groups.pop(g)
            for j, l in self.level.items():
                if l > g:
                    self.level[j] = l - 1
        else:
            self.groups[g].pop()

    # -- search ------------------------------------------------------------
    def bound(self, timing, depth) -> float:
        lb = timing.makespan if timing else 0
        if not self.model.relax_assignment:
            lb = max(lb, self.root_lb)
        busy = [0] * self.K
        for i, k in self.assignment.items():
            busy[k] += self.inst.tasks[i].durations[k]
        rest = 0
        for i in self.order[depth:]:
            if i in self.skipped:
                continue
            rest += self.dmin[i]
            lb = max(lb, self.heads[i] + self.dmin[i])
        lb = max(lb, math.ceil((sum(busy) + rest) / self.K))
        obj = lb + self.lam * max(len(self.groups) - 1, 0)
        if self.model.relax_assignment:
            obj += self.model.horizon * len(self.skipped)
        return obj

    def children(self, i, timing):
        inst = self.inst
        ends = {k: 0 for k in range(self.K)}
        if timing:
            for k, seq in self.sequences.items():
                if seq:
                    ends[k] = timing.end[seq[-1]]
        out = []
        m = len(self.groups)
        cap = self.model.fixed_levels
        for k in inst.capable(i):
            seq = self.sequences[k]
            d = inst.tasks[i].durations[k]
            for p in range(len(seq) + 1):
                pred = seq[p - 1] if p > 0 else None
                succ = seq[p] if p < len(seq) else None
                lo = self.level[pred] if pred is not None else 0
                hi = self.level[succ] if succ is not None else m - 1
                at_end = p == len(seq)
                est = max(ends[k] if at_end else 0, self.heads[i]) + d
                for g in range(lo, hi + 1):
                    if self._conflicts(i, k, g):
                        continue
                    pen = self._edge_penalty(i, pred, succ, g, g)
                    out.append(((0 if at_end else 1, pen, est, -g, k, p, 0), (k, p, g, False)))
                if cap is not None and m + 1 > cap:
                    continue
                qlo = self.level[pred] + 1 if pred is not None else 0
                qhi = self.level[succ] if succ is not None else m
                for q in range(qlo, qhi + 1):
                    pen = self._edge_penalty(i, pred, succ, None, None)
                    out.append(((0 if at_end else 1, pen, est + self.lam, -q, k, p, 1), (k, p, q, True)))
        out.sort(key=lambda x: x[0])
        return [c for _, c in out]

    def _conflicts(self, i, k, g):
        node_pairs = self.inst.conflicts.node_pairs
        for j in self.groups[g]:
            pairs = node_pairs(i, j)
            if pairs and (k, self.assignment[j]) in pairs:
                return True
        return False

    def _edge_penalty(self, i, pred, succ, gl, _):
        if self.model.relax_edge_conflicts:
            return 0
        e = self.inst.conflicts.edge
        pen = 0
        if pred is not None and gl is not None and self.level[pred] == gl and e(pred, i):
            pen += 1
        if succ is not None and gl is not None and self.level[succ] == gl and e(i, succ):
            pen += 1
        return pen

    def _edges_ok(self) -> bool:
        if self.model.relax_edge_conflicts:
            return True
        e = self.inst.conflicts.edge
        for seq in self.sequences.values():
            for a, b in zip(seq, seq[1:]):
                if self.level[a] == self.level[b] and e(a, b):
                    return False
        return True

    def run(self, dive_share: float = 0.5):
        # Dive first with true transition times. That pruning is unsound (a
        # later insertion may separate two tasks), but it finds an incumbent
        # fast where the optimistic bound lets windows fail only at the leaves.
        final = self.deadline
        self.diving = True
        self.deadline = time.monotonic() + dive_share * max(final - time.monotonic(), 0.0)
        self.dfs(0, None)
        self.diving, self.timed_out, self.deadline = False, False, final
        if self.best is not None and self.best_obj <= self.root_lb and not self.model.relax_assignment:
            return
        self.dfs(0, None)
        if not self.timed_out:
            self.exhausted = True

    def dfs(self, depth, timing):
        self.nodes += 1
        if self.nodes % 64 == 0 and time.monotonic() > self.deadline:
            self.timed_out = True
            return
        if depth == len(self.order):
            if not self._edges_ok():
                return
            if self.skipped:
                # reached by skipping, so ``timing`` is still the relaxed one
                timing = self.prop.times(self.assignment, self.sequences, self.level)
                if timing is None and self.assignment:
                    return
            obj = (timing.makespan if timing else 0) + self.lam * max(len(self.groups) - 1, 0)
            obj += self.model.horizon * len(self.skipped) if self.model.relax_assignment else 0
            if obj < self.best_obj:
                self.best_obj = obj
                self.best = make_schedule(self.assignment, self.sequences, self.level, timing) if timing else None
                self.best_skipped = list(self.skipped)
                if self.diving:
                    self.timed_out = True  # one incumbent is all the dive is for
            return
        i = self.order[depth]
        for k, p, g, new in self.children(i, timing):
            if self.timed_out:
                return
            self._apply(i, k, p, g, new)
            t = self.timing(depth + 1)
            if t is not None and self.bound(t, depth + 1) < self.best_obj:
                self.dfs(depth + 1, t)
            self._undo(i, k, p, g, new)
            if self.best_obj <= self.root_lb and not self.model.relax_assignment:
                return
            if time.monotonic() > self.deadline:
                self.timed_out = True
                return
        if self.model.relax_assignment:
            self.skipped.append(i)
            if self.bound(timing, depth + 1) < self.best_obj:
                self.dfs(depth + 1, timing)
            self.skipped.pop()


def _bnb(model: CpModel) -> SolveReport:
    t0 = time.monotonic()
    inst = model.instance
    if inst.n_tasks == 0:
        empty = Schedule({}, {k: [] for k in range(inst.n_actors)}, {}, {}, {}, [], 0, 0)
        return SolveReport(Status.OPTIMAL, empty, 0.0, 0, 0.0)
    s = _Search(model, t0 + model.time_limit_s)
    s.run()
    wall = time.monotonic() - t0
    proven = s.exhausted or (s.best is not None and s.best_obj <= s.root_lb and not model.relax_assignment)
    if s.best is None:
        status = Status.INFEASIBLE if s.exhausted else Status.TIMEOUT
        return SolveReport(status, None, None, s.nodes, wall)
    status = Status.OPTIMAL if proven else Status.FEASIBLE
    sched = s.best
    if s.best_skipped:
        sched.max_level = max(sched.level.values(), default=0)
    return SolveReport(status, sched, sched.objective(model.lam), s.nodes, wall, sorted(s.best_skipped))


SOLVERS: dict[str, Callable[[CpModel], SolveReport]] = {"bnb": _bnb}


def register_solver(name: str, fn: Callable[[CpModel], SolveReport]) -> None:
    """Plug in an alternative backend (e.g. an external CP engine) under ``name``."""
    SOLVERS[name] = fn


def solve_monolithic(model: CpModel, backend: str = "bnb") -> SolveReport:
    if backend not in SOLVERS:
        raise ValueError(f"unknown solver backend {backend!r}; registered: {sorted(SOLVERS)}")
    report = SOLVERS[backend](model)
    logger.info("monolithic solve: %s objective=%s nodes=%d %.2fs", report.status.value, report.objective,
                report.nodes_explored, report.wall_time_s)
    return report
