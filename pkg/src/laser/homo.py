"""Top session: balanced level partitioning, per-level routing, leftover insertion.

Top-session screws are interchangeable apart from where they sit, so the
session is decomposed. A partition step spreads each screw set over a few
levels and the actors, keeping each level's workloads within ``delta``
seconds of each other and keeping actors on a level clear of each other's
footprints. A routing step then orders each actor's screws on each level,
chaining the end of one level's route into the start of the next.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import LaserError
from .model import PriorityClass, ProblemInstance, Schedule, TaskKind
from .routing import route
from .stn import Propagator, make_schedule, trivial_horizon

logger = logging.getLogger(__name__)

INFINITE_DELTA = math.inf


@dataclass
class TopConfig:
    lam: float = 1.0
    delta: float = 16
    delta_dist: float = 1.0
    levels_per_set: int = 2
    time_budget_s: float = 300.0
    exact_limit: int = 30
    buffer_fraction: float | None = None


@dataclass
class PartitionResult:
    assignment: dict[int, tuple[int, int]]
    unassigned: set[int]
    workload: dict[int, dict[int, int]]
    g: dict[int, float]
    n_levels: int
    exhausted: bool = False

    @property
    def assigned_fraction(self) -> float:
        total = len(self.assignment) + len(self.unassigned)
        return len(self.assignment) / total if total else 1.0


class _Levels:
    """Mutable (actor, level) placement of a task set with incremental loads."""

    def __init__(self, inst: ProblemInstance, tasks: list[int], actors: list[int], n_levels: int):
        self.inst = inst
        self.tasks = list(tasks)
        self.actors = list(actors)
        self.n_levels = n_levels
        self.where: dict[int, tuple[int, int]] = {}
        self.members: list[set[int]] = [set() for _ in range(n_levels)]
        self.load = [{k: 0 for k in actors} for _ in range(n_levels)]
        inside = set(tasks)
        self.conf_nb = {j: [i for i in inst.conflicts.neighbours(j) if i in inside] for j in tasks}

    def add_level(self) -> int:
        self.members.append(set())
        self.load.append({k: 0 for k in self.actors})
        self.n_levels += 1
        return self.n_levels - 1

    def w(self, j: int, k: int) -> int:
        return self.inst.tasks[j].durations[k]

    def capable(self, j: int, k: int) -> bool:
        return k in self.inst.tasks[j].durations

    def place(self, j, k, l):
        self.where[j] = (k, l)
        self.members[l].add(j)
        self.load[l][k] += self.w(j, k)

    def remove(self, j):
        k, l = self.where.pop(j)
        self.members[l].discard(j)
        self.load[l][k] -= self.w(j, k)

    def free(self, j, k, l) -> bool:
        """True if ``j`` on actor ``k`` would clash with nothing on level ``l``."""
        node_pairs = self.inst.conflicts.node_pairs
        for i in self.conf_nb[j]:
            if i == j:
                continue
            wi = self.where.get(i)
            if wi is not None and wi[1] == l and (k, wi[0]) in node_pairs(j, i):
                return False
        return True

    def conflicts_of(self, j) -> int:
        k, l = self.where[j]
        node_pairs = self.inst.conflicts.node_pairs
        n = 0
        for i in self.conf_nb[j]:
            wi = self.where.get(i)
            if wi is not None and wi[1] == l and (k, wi[0]) in node_pairs(j, i):
                n += 1
        return n

    def g(self, l, extra: dict[int, int] | None = None) -> float:
        loads = self.load[l]
        if extra:
            loads = {k: v + extra.get(k, 0) for k, v in loads.items()}
        vals = list(loads.values())
        return max(vals) - min(vals) if vals else 0


def _axis_projection(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.zeros(len(points))
    c = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    ax = vt[0]
    if ax[np.argmax(np.abs(ax))] < 0:
        ax = -ax
    return c @ ax


def _level_counts(total: int, weights: list[float]) -> list[int]:
    """Split ``total`` tasks over actors with per-task weights so loads are as even as possible."""
    K = len(weights)
    if K == 1:
        return [total]
    if K <= 3:
        best = None
        for head in itertools.product(range(total + 1), repeat=K - 1):
            if sum(head) > total:
                continue
            counts = list(head) + [total - sum(head)]
            loads = [c * w for c, w in zip(counts, weights)]
            key = (max(loads) - min(loads), max(loads), counts)
            if best is None or key < best:
                best = key
        return best[2]
    inv = [1 / w for w in weights]
    raw = [total * x / sum(inv) for x in inv]
    counts = [int(math.floor(r)) for r in raw]
    for idx in sorted(range(K), key=lambda i: raw[i] - counts[i], reverse=True)[: total - sum(counts)]:
        counts[idx] += 1
    return counts


def _spread(total, parts):
    base, extra = divmod(total, parts)
    return [base + (1 if e < extra else 0) for e in range(parts)]


class _Partitioner:
    def __init__(self, inst, tasks, actors, L, delta, delta_dist, deadline):
        self.inst = inst
        self.tasks = sorted(tasks)
        self.actors = actors
        self.L = L
        self.delta = delta
        self.deadline = deadline
        self.S = _Levels(inst, self.tasks, actors, L)
        pts = np.array([inst.tasks[j].entry for j in self.tasks], dtype=float).reshape(-1, 2)
        self.proj = dict(zip(self.tasks, _axis_projection(pts))) if self.tasks else {}
        self.pos = {j: pts[n] for n, j in enumerate(self.tasks)}
        # proximity and the ban on singleton levels only make sense with room for pairs
        self.proximity = len(self.tasks) > L
        self.near: dict[int, list[int]] = {}
        if self.proximity and self.tasks:
            D = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
            for n, j in enumerate(self.tasks):
                idx = np.nonzero(D[n] <= delta_dist + 1e-9)[0]
                self.near[j] = [self.tasks[m] for m in idx if m != n]
        self.unassigned: set[int] = set()

    # -- helpers -----------------------------------------------------------
    def has_partner(self, j, l) -> bool:
        if not self.proximity:
            return True
        return any(self.S.where.get(i, (None, None))[1] == l for i in self.near.get(j, ()))

    def ok_g(self, l, extra) -> bool:
        return self.S.g(l, extra) <= self.delta

    def _assign(self, j, k, l):
        self.S.place(j, k, l)
        self.unassigned.discard(j)

    def _drop(self, j):
        self.S.remove(j)
        self.unassigned.add(j)

    # -- steps -------------------------------------------------------------
    def seed(self):
        S, L = self.S, self.L
        order = sorted(self.tasks, key=lambda j: (self.proj[j], j))
        wbar = []
        for k in self.actors:
            ws = [S.w(j, k) for j in self.tasks if S.capable(j, k)]
            wbar.append(sum(ws) / len(ws) if ws else math.inf)
        per_level = _spread(len(order), L)
        counts = {}
        for l in range(L):
            for idx, c in enumerate(_level_counts(per_level[l], wbar)):
                counts[(l, idx)] = c
        it = iter(order)
        for idx, k in enumerate(self.actors):
            for l in range(L):
                for _ in range(counts[(l, idx)]):
                    j = next(it)
                    if S.capable(j, k):
                        self._assign(j, k, l)
                    else:
                        self.unassigned.add(j)

    def repair_conflicts(self):
        S = self.S
        while True:
            worst = None
            for j in S.where:
                c = S.conflicts_of(j)
                if c and (worst is None or (c, -j) > (worst[0], -worst[1])):
                    worst = (c, j)
            if worst is None:
                return
            j = worst[1]
            k0, l0 = S.where[j]
            S.remove(j)
            best = None
            for l in range(S.n_levels):
                for k in self.actors:
                    if (k, l) == (k0, l0) or not S.capable(j, k) or not S.free(j, k, l):
                        continue
                    key = (k != k0, S.g(l, {k: S.w(j, k)}), l, k)
                    if best is None or key < best[0]:
                        best = (key, k, l)
            if best is None:
                self.unassigned.add(j)
            else:
                self._assign(j, best[1], best[2])

    def rebalance(self):
        S = self.S
        for l in range(S.n_levels):
            while S.g(l) > self.delta:
                loads = S.load[l]
                h = max(self.actors, key=lambda k: (loads[k], -k))
                lo = min(self.actors, key=lambda k: (loads[k], k))
                mine = sorted((j for j in S.members[l] if S.where[j][0] == h),
                              key=lambda j: (abs(self.proj[j] - self._centre(l, lo)), j))
                moved = False
                for j in mine:
                    if not S.capable(j, lo):
                        continue
                    S.remove(j)
                    if S.free(j, lo, l) and S.g(l, {lo: S.w(j, lo)}) < S.g(l, {h: S.w(j, h)}):
                        self._assign(j, lo, l)
                        moved = True
                        break
                    S.place(j, h, l)
                if moved:
                    continue
                for j in mine:
                    S.remove(j)
                    spot = self._other_level(j, l)
                    if spot is not None:
                        self._assign(j, *spot)
                        moved = True
                        break
                    S.place(j, h, l)
                if moved:
                    continue
                # nothing can move: drop the heavy actor's task nearest the light actor
                self._drop(mine[0])

    def _centre(self, l, k):
        xs = [self.proj[j] for j in self.S.members[l] if self.S.where[j][0] == k]
        return sum(xs) / len(xs) if xs else 0.0

    def _other_level(self, j, skip):
        S = self.S
        best = None
        for l in range(S.n_levels):
            if l == skip:
                continue
            for k in self.actors:
                if not S.capable(j, k) or not S.free(j, k, l):
                    continue
                extra = {k: S.w(j, k)}
                if not self.ok_g(l, extra) or not self.has_partner(j, l):
                    continue
                key = (S.g(l, extra), l, k)
                if best is None or key < best[0]:
                    best = (key, k, l)
        return None if best is None else (best[1], best[2])

    def insert_unassigned(self):
        S = self.S
        changed = False
        for j in sorted(self.unassigned, key=lambda j: (self.proj[j], j)):
            best = None
            for l in range(S.n_levels):
                for k in self.actors:
                    if not S.capable(j, k) or not S.free(j, k, l):
                        continue
                    extra = {k: S.w(j, k)}
                    if not self.ok_g(l, extra) or not self.has_partner(j, l):
                        continue
                    key = (S.g(l, extra), S.load[l][k], l, k)
                    if best is None or key < best[0]:
                        best = (key, k, l)
            if best is not None:
                self._assign(j, best[1], best[2])
                changed = True
        return changed

    def eject_insert(self):
        """Place an unassigned task by relocating the single task blocking it."""
        S = self.S
        node_pairs = self.inst.conflicts.node_pairs
        changed = False
        for j in sorted(self.unassigned, key=lambda j: (self.proj[j], j)):
            if time.monotonic() > self.deadline:
                break
            done = False
            for l in range(S.n_levels):
                for k in self.actors:
                    if not S.capable(j, k):
                        continue
                    blockers = [i for i in S.conf_nb[j] if i in S.where and S.where[i][1] == l
                                and (k, S.where[i][0]) in node_pairs(j, i)]
                    if len(blockers) != 1:
                        continue
                    i = blockers[0]
                    ki, li = S.where[i]
                    S.remove(i)
                    spot = self._other_level(i, li)
                    extra = {k: S.w(j, k)}
                    if spot is not None and self.ok_g(l, extra) and self.has_partner(j, l):
                        self._assign(i, *spot)
                        if S.free(j, k, l) and self.ok_g(l, {k: S.w(j, k)}):
                            self._assign(j, k, l)
                            done = True
                            break
                        S.remove(i)
                    S.place(i, ki, li)
                if done:
                    break
            changed |= done
        return changed

    def enforce_proximity(self):
        if not self.proximity:
            return False
        S = self.S
        changed = False
        again = True
        while again:
            again = False
            for l in range(S.n_levels):
                if len(S.members[l]) == 1:
                    self._drop(next(iter(S.members[l])))
                    again = changed = True
            for j in sorted(S.where):
                k, l = S.where[j]
                if self.has_partner(j, l):
                    continue
                S.remove(j)
                spot = self._other_level(j, l)
                if spot is not None:
                    S.place(j, *spot)
                else:
                    self.unassigned.add(j)
                again = changed = True
        return changed

    def run(self):
        self.seed()
        for _ in range(20):
            self.repair_conflicts()
            self.rebalance()
            grew = self.insert_unassigned()
            shrank = self.enforce_proximity()
            self.rebalance()
            if time.monotonic() < self.deadline:
                grew |= self.eject_insert()
            if not grew and not shrank:
                break
        self.rebalance()
        self.enforce_proximity()
        self.rebalance()

    def value(self):
        return len(self.S.where), -sum(self.S.g(l) for l in range(self.S.n_levels))

    def feasible(self) -> bool:
        S = self.S
        for l in range(S.n_levels):
            if S.g(l) > self.delta:
                return False
            if self.proximity and len(S.members[l]) == 1:
                return False
        for j, (k, l) in S.where.items():
            if S.conflicts_of(j) or not self.has_partner(j, l):
                return False
        return True


def _exact(P: _Partitioner, deadline: float) -> bool:
    """Exhaustive search for small sets: most tasks first, then smallest total gap.

    Starts from the heuristic incumbent held in ``P``; returns False if the
    deadline cut the search short.
    """
    S = P.S
    best_where = dict(S.where)
    best_val = P.value() if P.feasible() else (-1, 0)
    order = sorted(P.tasks, key=lambda j: (P.proj[j], j))
    n = len(order)
    for j in list(S.where):
        S.remove(j)
    P.unassigned = set(P.tasks)
    complete = [True]

    def dfs(pos, assigned, used):
        nonlocal best_val, best_where
        if time.monotonic() > deadline:
            complete[0] = False
            return
        if assigned + (n - pos) < best_val[0]:
            return
        if assigned + (n - pos) == best_val[0] and best_val[1] == 0:
            return
        if pos == n:
            if P.feasible():
                v = P.value()
                if v > best_val:
                    best_val, best_where = v, dict(S.where)
            return
        j = order[pos]
        for l in range(min(used + 1, S.n_levels)):
            for k in P.actors:
                if S.capable(j, k) and S.free(j, k, l):
                    S.place(j, k, l)
                    dfs(pos + 1, assigned + 1, max(used, l + 1))
                    S.remove(j)
                    if not complete[0]:
                        return
        dfs(pos + 1, assigned, used)

    if not (best_val[0] == n and best_val[1] == 0):
        dfs(0, 0, 0)
    for j in list(S.where):
        S.remove(j)
    for j, (k, l) in best_where.items():
        S.place(j, k, l)
    P.unassigned = set(P.tasks) - set(best_where)
    return complete[0]


def set_partition(instance: ProblemInstance, screws: list[int], actors: list[int] | None = None, L_max: int = 2,
                  delta: float = 16, delta_dist: float = 1.0, time_budget_s: float = 300.0,
                  exact_limit: int = 30) -> PartitionResult:
    """Spread ``screws`` over ``L_max`` levels and the actors.

    Maximises the number of placed screws, then minimises the per-level
    workload gaps, subject to: no node conflict inside a level, every
    level's gap at most ``delta``, and (when the set is larger than
    ``L_max``) every placed screw has a same-level screw within
    ``delta_dist`` and no level holds a single screw.
    """
    if L_max < 1:
        raise ValueError("L_max must be at least 1")
    actors = list(range(instance.n_actors)) if actors is None else list(actors)
    t0 = time.monotonic()
    deadline = t0 + time_budget_s
    P = _Partitioner(instance, screws, actors, L_max, delta, delta_dist, deadline)
    if screws:
        P.run()
        exhausted = time.monotonic() > deadline
        if len(screws) <= exact_limit:
            exhausted |= not _exact(P, min(deadline, time.monotonic() + min(10.0, time_budget_s)))
    else:
        exhausted = False
    S = P.S
    return PartitionResult(
        assignment=dict(S.where),
        unassigned=set(P.unassigned),
        workload={l: dict(S.load[l]) for l in range(S.n_levels)},
        g={l: S.g(l) for l in range(S.n_levels)},
        n_levels=S.n_levels,
        exhausted=exhausted,
    )


def solve_vrp_level(instance: ProblemInstance, tasks: dict[int, list[int]], next_tasks: dict[int, list[int]],
                    anchors: dict[int, tuple[float, float] | None]):
    """Route each actor's level tasks; returns (routes, next anchors, bounced tasks)."""
    edge = instance.conflicts.edge
    routes, out_anchors, bounced = {}, dict(anchors), []
    for k, ids in sorted(tasks.items()):
        if not ids:
            routes[k] = []
            continue
        pts = [instance.tasks[j].entry for j in ids]
        targets = [instance.tasks[j].entry for j in next_tasks.get(k, [])] or None
        res = route(pts, anchors.get(k), targets, lambda a, b: edge(ids[a], ids[b]) or edge(ids[b], ids[a]))
        routes[k] = [ids[p] for p in res.order]
        bounced.extend(ids[p] for p in res.bounced)
        if routes[k]:
            out_anchors[k] = instance.tasks[routes[k][-1]].exit
    return routes, out_anchors, bounced


@dataclass
class TopReport:
    schedule: Schedule
    partitions: list[PartitionResult]
    demoted: list[int]
    level_classes: list[str]
    bounced: list[int] = field(default_factory=list)

    def utilization(self, instance: ProblemInstance) -> float:
        return self.schedule.utilization(instance)


def _first_fit(inst, S: _Levels, tasks, allowed_levels, new_levels=True) -> list[int]:
    """Place tasks into the least loaded conflict-free (actor, level); open levels if allowed."""
    left = []
    for j in tasks:
        best = None
        for l in allowed_levels():
            for k in S.actors:
                if S.capable(j, k) and S.free(j, k, l):
                    key = (max(S.load[l][k] + S.w(j, k), max(S.load[l].values())), l, k)
                    if best is None or key < best[0]:
                        best = (key, k, l)
        if best is None and new_levels:
            l = S.add_level()
            k = min((k for k in S.actors if S.capable(j, k)), key=lambda k: (S.w(j, k), k))
            best = (None, k, l)
        if best is None:
            left.append(j)
        else:
            S.place(j, best[1], best[2])
    return left


def _precedence_order(inst: ProblemInstance, tasks: list[int]) -> list[int]:
    """Topological order under nonnegative-lag constraints, lowest id first among ready tasks."""
    keep = set(tasks)
    succ: dict[int, set[int]] = {i: set() for i in tasks}
    indeg = {i: 0 for i in tasks}
    for c in inst.temporal:
        if c.u in keep and c.v in keep and c.u != c.v and c.lower >= 0 and c.v not in succ[c.u]:
            succ[c.u].add(c.v)
            indeg[c.v] += 1
    ready = [i for i in tasks if indeg[i] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        i = heapq.heappop(ready)
        out.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(out) < len(tasks):
        done = set(out)
        out.extend(i for i in tasks if i not in done)
    return out


def top_pipeline(instance: ProblemInstance, config: TopConfig | None = None) -> TopReport:
    cfg = config or TopConfig()
    inst = instance
    actors = list(range(inst.n_actors))
    t0 = time.monotonic()
    screws = [i for i, t in enumerate(inst.tasks) if t.kind is TaskKind.SCREW]
    if any(inst.tasks[i].priority_class is not None for i in screws):
        screws = [i for i in screws if inst.tasks[i].priority_class is not None]
    prefix = _precedence_order(inst, sorted(set(range(inst.n_tasks)) - set(screws)))
    prio = [i for i in screws if inst.tasks[i].priority_class is PriorityClass.PRIORITY]
    reinf = [i for i in screws if inst.tasks[i].priority_class is not PriorityClass.PRIORITY]
    L = cfg.levels_per_set

    def budget():
        return max(0.1 * cfg.time_budget_s, cfg.time_budget_s - (time.monotonic() - t0))

    # one global level table: prefix levels, priority levels, reinforcement levels, extras
    S = _Levels(inst, list(range(inst.n_tasks)), actors, 0)
    classes: list[str] = []
    for i in prefix:
        l = S.add_level()
        classes.append("prefix")
        k = min(inst.capable(i), key=lambda k: (inst.duration(i, k), k))
        S.place(i, k, l)

    partitions = []

    def take(part: PartitionResult, name: str) -> list[int]:
        base = S.n_levels
        for _ in range(part.n_levels):
            S.add_level()
            classes.append(name)
        for j, (k, l) in sorted(part.assignment.items()):
            S.place(j, k, base + l)
        return list(range(base, base + part.n_levels))

    demoted: list[int] = []
    prio_levels: list[int] = []
    if prio:
        p1 = set_partition(inst, prio, actors, L, cfg.delta, cfg.delta_dist, budget(), cfg.exact_limit)
        partitions.append(p1)
        prio_levels = take(p1, "priority")
        rest = _first_fit(inst, S, sorted(p1.unassigned), lambda: prio_levels, new_levels=False)
        demoted = rest
    carried = sorted(reinf + demoted)
    if carried:
        p2 = set_partition(inst, carried, actors, L, cfg.delta, cfg.delta_dist, budget(), cfg.exact_limit)
        partitions.append(p2)
        reinf_levels = take(p2, "reinforcement")
        rest = _first_fit(inst, S, sorted(p2.unassigned), lambda: reinf_levels, new_levels=False)
        if rest:
            p3 = set_partition(inst, rest, actors, L, INFINITE_DELTA, cfg.delta_dist, budget(), cfg.exact_limit)
            partitions.append(p3)
            extra = take(p3, "extra")
            first_extra = extra[0] if extra else S.n_levels
            _first_fit(inst, S, sorted(p3.unassigned), lambda: range(first_extra, S.n_levels))

    # route level by level, chaining anchors; bounced screws go to new trailing levels
    bounced_all: list[int] = []
    routes_by_level: dict[int, dict[int, list[int]]] = {}
    anchors: dict[int, tuple[float, float] | None] = {k: None for k in actors}
    l = 0
    while l < S.n_levels:
        mine = {k: sorted(j for j in S.members[l] if S.where[j][0] == k) for k in actors}
        nxt = {}
        if l + 1 < S.n_levels:
            nxt = {k: sorted(j for j in S.members[l + 1] if S.where[j][0] == k) for k in actors}
        routes, anchors, bounced = solve_vrp_level(inst, mine, nxt, anchors)
        routes_by_level[l] = routes
        if bounced:
            # routes already exclude them; a bounced priority screw loses its precedence
            bounced_all.extend(bounced)
            demoted.extend(j for j in bounced if inst.tasks[j].priority_class is PriorityClass.PRIORITY)
            for j in bounced:
                S.remove(j)
            start = S.n_levels
            _first_fit(inst, S, bounced, lambda: range(start, S.n_levels))
            while len(classes) < S.n_levels:
                classes.append("extra")
        l += 1

    keep = [l for l in range(S.n_levels) if S.members[l]]
    relabel = {old: new for new, old in enumerate(keep)}
    assignment, level = {}, {}
    sequences: dict[int, list[int]] = {k: [] for k in actors}
    for old in keep:
        for k in actors:
            for j in routes_by_level[old].get(k, []):
                sequences[k].append(j)
                assignment[j] = k
                level[j] = relabel[old]
    frac = inst.safety_buffer_fraction if cfg.buffer_fraction is None else cfg.buffer_fraction
    temporal = inst.buffered_temporal(frac)
    timing = Propagator(inst, temporal, trivial_horizon(inst)).times(assignment, sequences, level)
    if timing is None:
        raise LaserError("top-session levels admit no schedule within the temporal windows")
    schedule = make_schedule(assignment, sequences, level, timing)
    logger.info("top session: %d levels, makespan %d, %.1f%% placed by partition, %d demoted",
                schedule.n_levels, schedule.makespan,
                100 * sum(len(p.assignment) for p in partitions[:2]) / max(len(screws), 1), len(demoted))
    return TopReport(schedule, partitions, demoted, [classes[l] for l in keep], bounced_all)


def solve_top(instance: ProblemInstance, config: TopConfig | None = None) -> Schedule:
    return top_pipeline(instance, config).schedule
