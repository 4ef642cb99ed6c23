"""Earliest-start timestamps for fixed assignment, sequence and level decisions.

Every constraint is a difference ``s_v >= s_u + w`` on start times, so the
earliest feasible timestamps are longest paths from the origin. A positive
cycle, or any timestamp beyond the horizon, means the decisions admit no
schedule.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import INF, Eta, ProblemInstance, Schedule, TemporalConstraint


@dataclass
class Timing:
    start: dict[int, int]
    end: dict[int, int]
    barriers: list[int]

    @property
    def makespan(self) -> int:
        return max(self.end.values(), default=0)


class Propagator:
    def __init__(self, inst: ProblemInstance, temporal: Sequence[TemporalConstraint], horizon: int):
        self.inst = inst
        self.horizon = horizon
        # (u, v, lower, upper, u-at-end, v-at-end) per constraint, indexed by both endpoints
        self.pair: list[tuple[int | None, int, int, float, int, int]] = []
        for c in temporal:
            self.pair.append((c.u, c.v, c.lower, c.upper,
                              1 if c.eta_u is Eta.END else 0, 1 if c.eta_v is Eta.END else 0))
        self.by_task: dict[int, list[int]] = {}
        for idx, (u, v, *_rest) in enumerate(self.pair):
            self.by_task.setdefault(v, []).append(idx)
            if u is not None and u != v:
                self.by_task.setdefault(u, []).append(idx)

    def times(self, assignment: Mapping[int, int], sequences: Mapping[int, Sequence[int]],
              level: Mapping[int, int], rho=None) -> Timing | None:
        """Earliest timing, or None if infeasible. ``rho`` overrides the transition function."""
        inst = self.inst
        rho = rho or inst.rho
        tasks = list(assignment)
        dur = {i: inst.tasks[i].durations[assignment[i]] for i in tasks}
        lo = {i: 0 for i in tasks}
        edges: dict[int | tuple, list[tuple[object, int]]] = {i: [] for i in tasks}
        ub_origin: list[tuple[int, float]] = []

        seen = set()
        for i in tasks:
            for idx in self.by_task.get(i, ()):
                if idx in seen:
                    continue
                seen.add(idx)
                u, v, lower, upper, eu, ev = self.pair[idx]
                if v not in dur:
                    continue
                off_v = dur[v] if ev else 0
                if u is None:
                    lo[v] = max(lo[v], lower - off_v)
                    if upper != INF:
                        ub_origin.append((v, upper - off_v))
                    continue
                if u not in dur:
                    continue
                off_u = dur[u] if eu else 0
                edges[u].append((v, lower + off_u - off_v))
                if upper != INF:
                    edges[v].append((u, -upper + off_v - off_u))

        for k, seq in sequences.items():
            for a, b in zip(seq, seq[1:]):
                edges[a].append((b, dur[a] + rho(k, a, b)))

        groups: dict[int, list[int]] = {}
        for i in tasks:
            groups.setdefault(level[i], []).append(i)
        used = sorted(groups)
        for pos, l in enumerate(used):
            bnode = ("B", l)
            edges[bnode] = []
            lo[bnode] = 0
            for i in groups[l]:
                edges[i].append((bnode, dur[i]))
            if pos + 1 < len(used):
                for j in groups[used[pos + 1]]:
                    edges[bnode].append((j, 0))

        dist = _longest_paths(edges, lo, self.horizon)
        if dist is None:
            return None
        for v, cap in ub_origin:
            if dist[v] > cap:
                return None
        start = {i: dist[i] for i in tasks}
        end = {i: dist[i] + dur[i] for i in tasks}
        max_level = used[-1] if used else -1
        barriers = []
        last = 0
        for l in range(max_level + 1):
            if l in groups:
                last = dist[("B", l)]
            barriers.append(last)
        return Timing(start, end, barriers)


def _longest_paths(edges, lo, horizon):
    dist = dict(lo)
    n = len(dist)
    # edges on the current best path to each node; n or more means a positive cycle
    hops = {v: 0 for v in dist}
    queue = deque(dist)
    inq = set(dist)
    while queue:
        u = queue.popleft()
        inq.discard(u)
        du = dist[u]
        for v, w in edges[u]:
            nd = du + w
            if nd > dist[v]:
                if nd > horizon:
                    return None
                dist[v] = nd
                hops[v] = hops[u] + 1
                if hops[v] >= n:
                    return None
                if v not in inq:
                    inq.add(v)
                    queue.append(v)
    return dist


def make_schedule(assignment: Mapping[int, int], sequences: Mapping[int, Sequence[int]],
                  level: Mapping[int, int], timing: Timing) -> Schedule:
    return Schedule(
        assignment=dict(assignment),
        sequences={k: list(v) for k, v in sequences.items()},
        level=dict(level),
        start=dict(timing.start),
        end=dict(timing.end),
        barriers=list(timing.barriers),
        makespan=timing.makespan,
        max_level=max(level.values(), default=0),
    )


def trivial_horizon(inst: ProblemInstance) -> int:
    """Serial upper bound: every task at its slowest actor plus a worst-case transition each."""
    work = sum(max(t.durations.values()) for t in inst.tasks)
    xs = [p[0] for t in inst.tasks for p in t.coords] or [0.0]
    ys = [p[1] for t in inst.tasks for p in t.coords] or [0.0]
    diag = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    worst = 0
    for a in inst.actors:
        w = diag / a.travel_speed + max(a.tool_switch_times.values(), default=0) + max(a.prep_times.values(), default=0)
        worst = max(worst, math.ceil(w) + 1)
    worst = max([worst, *inst.transitions.values()])
    lowers = sum(max(c.lower, 0) for c in inst.temporal)
    return int(work + worst * inst.n_tasks + lowers) + 1
