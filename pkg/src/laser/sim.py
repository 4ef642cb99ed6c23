"""Discrete-event replay of a schedule under the level-barrier protocol.

Each actor works through its own queue. A central barrier manager releases
level l+1 only once every actor has finished level l. Durations can be
perturbed by seeded noise, and single tasks can be stalled or made to fail.
Afterwards the realized timestamps are audited against the unbuffered
temporal windows and against barrier safety.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .model import INF, Eta, ProblemInstance, Schedule, TaskKind

EPSILON = 0.01


@dataclass(frozen=True)
class ExecTaskObject:
    """One subprogram call: consecutive same-kind tasks of one actor on one level."""

    id: int
    level: int
    actor: int
    kind: TaskKind
    tasks: tuple[int, ...]
    points: tuple[tuple[float, float], ...]
    nominal: tuple[int, ...]
    scheduled_start: tuple[int, ...]


def compile_schedule(schedule: Schedule, instance: ProblemInstance) -> list[ExecTaskObject]:
    objects: list[ExecTaskObject] = []
    for k in sorted(schedule.sequences):
        run: list[int] = []

        def flush():
            if run:
                objects.append(ExecTaskObject(
                    id=len(objects), level=schedule.level[run[0]], actor=k, kind=instance.tasks[run[0]].kind,
                    tasks=tuple(run), points=tuple(instance.tasks[i].entry for i in run),
                    nominal=tuple(instance.duration(i, k) for i in run),
                    scheduled_start=tuple(schedule.start[i] for i in run),
                ))
                run.clear()

        for i in schedule.sequences[k]:
            if run and (instance.tasks[i].kind is not instance.tasks[run[-1]].kind
                        or schedule.level[i] != schedule.level[run[-1]]):
                flush()
            run.append(i)
        flush()
    return objects


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean relative noise on primitive durations and tool-switch times."""

    kind: str = "none"
    magnitude: float = 0.0
    seed: int = 0

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NoiseModel":
        """``none``, ``gaussian:0.05`` or ``uniform:0.05``."""
        if text in ("", "none"):
            return cls("none", 0.0, seed)
        kind, _, mag = text.partition(":")
        kind = {"gauss": "gaussian", "normal": "gaussian", "bounded": "uniform"}.get(kind, kind)
        if kind not in ("gaussian", "uniform") or not mag:
            raise ValueError(f"bad noise spec {text!r}")
        value = float(mag)
        if value < 0:
            raise ValueError("noise magnitude must be nonnegative")
        return cls(kind, value, seed)

    def factors(self, n: int) -> np.ndarray:
        """``n`` multiplicative factors ``max(EPSILON, 1 + sample)``."""
        if self.kind == "none" or self.magnitude == 0 or n == 0:
            return np.ones(n)
        rng = np.random.default_rng(self.seed)
        if self.kind == "gaussian":
            s = rng.normal(0.0, self.magnitude, n)
        else:
            s = rng.uniform(-self.magnitude, self.magnitude, n)
        return np.maximum(EPSILON, 1.0 + s)


class ActorStatus(str, enum.Enum):
    IDLE = "idle"
    EXECUTING = "executing"
    DONE_LEVEL = "done_level"
    HALTED = "halted"


@dataclass
class Fault:
    task: int
    stall: float | None = None
    fail: bool = False

    @classmethod
    def parse(cls, task: int, spec: str) -> "Fault":
        if spec.lower() == "fail":
            return cls(task, fail=True)
        return cls(task, stall=float(spec))


@dataclass
class SimReport:
    makespan: float
    start: dict[int, float]
    end: dict[int, float]
    idle: dict[int, float]
    barrier_release: list[float]
    barrier_wait: dict[int, dict[int, float]]
    window_violations: list[tuple[int | None, int, float]]
    barrier_violations: list[tuple[int, int]]
    trace: list[tuple]
    completed: int
    halted: bool = False
    checkpoint_level: int | None = None
    objects_done: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "completed_tasks": self.completed,
            "halted": self.halted,
            "checkpoint_level": self.checkpoint_level,
            "window_violations": len(self.window_violations),
            "barrier_violations": len(self.barrier_violations),
            "idle_s": {str(k): v for k, v in self.idle.items()},
            "barrier_release": self.barrier_release,
        }


def _switch_part(instance, k, a, b) -> float:
    if (k, a, b) in instance.transitions:
        return 0.0
    _, switch, _ = instance.transition_parts(k, a, b)
    return float(switch)


def simulate(objects: list[ExecTaskObject], noise: NoiseModel, instance: ProblemInstance,
             faults: list[Fault] | None = None) -> SimReport:
    """Replay compiled objects; nothing starts before its scheduled time, its actor, its barrier and its inputs allow."""
    inst = instance
    faults = {f.task: f for f in (faults or [])}
    queues: dict[int, list[int]] = {}
    level, floor, obj_of, owner = {}, {}, {}, {}
    for o in sorted(objects, key=lambda o: (o.actor, o.id)):
        for i, s in zip(o.tasks, o.scheduled_start):
            queues.setdefault(o.actor, []).append(i)
            level[i], floor[i], obj_of[i], owner[i] = o.level, s, o.id, o.actor
    actors = sorted(queues)
    order = [i for k in actors for i in queues[k]]
    # one factor per primitive, then one per transition
    f = noise.factors(2 * len(order))
    dur = {i: inst.duration(i, owner[i]) * float(f[n]) for n, i in enumerate(order)}
    index = {i: n for n, i in enumerate(order)}
    trans = {}
    for k in actors:
        q = queues[k]
        for pos in range(1, len(q)):
            a, b = q[pos - 1], q[pos]
            sw = _switch_part(inst, k, a, b)
            trans[b] = inst.rho(k, a, b) + sw * (float(f[len(order) + index[b]]) - 1.0) if sw else inst.rho(k, a, b)
    for i, fl in faults.items():
        if i in dur and fl.stall is not None:
            dur[i] *= fl.stall

    # lower-bound dependencies between tasks (the only ones that can make a task wait)
    deps: dict[int, list[tuple[int | None, Eta, Eta, float]]] = {}
    for c in inst.temporal:
        if c.v in level and c.lower > -INF:
            deps.setdefault(c.v, []).append((c.u, c.eta_u, c.eta_v, c.lower))

    levels = sorted(set(level.values()))
    remaining = {l: sum(1 for i in level if level[i] == l) for l in levels}
    released_idx = 0
    release_time = [0.0]
    start: dict[int, float] = {}
    end: dict[int, float] = {}
    pos = {k: 0 for k in actors}
    status = {k: ActorStatus.IDLE for k in actors}
    ready_at = {k: 0.0 for k in actors}
    done_level_at: dict[int, dict[int, float]] = {k: {} for k in actors}
    trace: list[tuple] = []
    events: list[tuple] = []
    seq = [0]
    halted = False
    obj_left = {o.id: len(o.tasks) for o in objects}
    objects_done: list[int] = []

    def push(t, kind, payload):
        seq[0] += 1
        heapq.heappush(events, (t, seq[0], kind, payload))

    def earliest(i, k):
        """Earliest start allowed by inputs, or None while an input is still unknown."""
        t = max(ready_at[k], float(floor[i]), release_time[-1])
        for u, eu, ev, lower in deps.get(i, ()):
            if u is None:
                base = 0.0
            else:
                table = end if eu is Eta.END else start
                if u not in table:
                    if u in level:
                        return None
                    continue
                base = table[u]
            need = base + lower - (dur[i] if ev is Eta.END else 0.0)
            t = max(t, need)
        return t

    def dispatch(k, now):
        if status[k] in (ActorStatus.EXECUTING, ActorStatus.HALTED):
            return
        q = queues[k]
        if pos[k] >= len(q):
            status[k] = ActorStatus.DONE_LEVEL
            return
        i = q[pos[k]]
        if level[i] > levels[released_idx]:
            if status[k] is not ActorStatus.DONE_LEVEL:
                status[k] = ActorStatus.DONE_LEVEL
                done_level_at[k][levels[released_idx]] = now
            return
        t = earliest(i, k)
        if t is None:
            status[k] = ActorStatus.IDLE
            return
        status[k] = ActorStatus.EXECUTING
        push(max(t, now), "start", (k, i))

    for k in actors:
        dispatch(k, 0.0)
    while events:
        now, _, kind, payload = heapq.heappop(events)
        if kind == "start":
            k, i = payload
            start[i] = now
            trace.append((now, "start", k, i, level[i]))
            fl = faults.get(i)
            if fl is not None and fl.fail:
                status[k] = ActorStatus.HALTED
                halted = True
                trace.append((now, "fail", k, i, level[i]))
                continue
            push(now + dur[i], "finish", (k, i))
        elif kind == "finish":
            k, i = payload
            end[i] = now
            trace.append((now, "finish", k, i, level[i]))
            o = obj_of[i]
            obj_left[o] -= 1
            if obj_left[o] == 0:
                objects_done.append(o)
                trace.append((now, "object", k, o, level[i]))
            pos[k] += 1
            status[k] = ActorStatus.IDLE
            if pos[k] < len(queues[k]):
                ready_at[k] = now + trans[queues[k][pos[k]]]
            else:
                ready_at[k] = now
            l = level[i]
            remaining[l] -= 1
            if remaining[l] == 0 and levels[released_idx] == l and released_idx + 1 < len(levels):
                released_idx += 1
                release_time.append(now)
                trace.append((now, "release", None, None, levels[released_idx]))
            for kk in actors:
                if status[kk] is not ActorStatus.EXECUTING:
                    if status[kk] is ActorStatus.DONE_LEVEL and released_idx < len(levels):
                        status[kk] = ActorStatus.IDLE
                    dispatch(kk, now)

    idle = {}
    for k in actors:
        busy = sum(end[i] - start[i] for i in queues[k] if i in end)
        last = max((end[i] for i in queues[k] if i in end), default=0.0)
        idle[k] = last - busy
    barrier_wait = {k: {l: release_time[idx + 1] - t for idx, l in enumerate(levels[:-1])
                        if (t := done_level_at[k].get(l)) is not None and idx + 1 < len(release_time)}
                    for k in actors}
    complete = len(end) == len(level)
    checkpoint = None if complete else levels[released_idx]
    return SimReport(
        makespan=max(end.values(), default=0.0),
        start=start, end=end, idle=idle,
        barrier_release=release_time[1:],
        barrier_wait=barrier_wait,
        window_violations=audit_windows(inst, start, end, {i: owner[i] for i in level}),
        barrier_violations=audit_barriers(start, end, level),
        trace=trace, completed=len(end), halted=halted or not complete,
        checkpoint_level=checkpoint, objects_done=objects_done,
    )


def audit_windows(instance: ProblemInstance, start, end, owner=None) -> list[tuple[int | None, int, float]]:
    """Unbuffered temporal constraints broken by realized times (only among finished tasks)."""
    out = []
    for c in instance.temporal:
        if c.v not in end or (c.u is not None and c.u not in end):
            continue
        tv = end[c.v] if c.eta_v is Eta.END else start[c.v]
        tu = 0.0 if c.u is None else (end[c.u] if c.eta_u is Eta.END else start[c.u])
        diff = tv - tu
        over = max(c.lower - diff, (diff - c.upper) if c.upper != INF else 0.0)
        if over > 1e-6:
            out.append((c.u, c.v, over))
    return out


def audit_barriers(start, end, level) -> list[tuple[int, int]]:
    """Pairs (earlier-level task, later-level task) where the later one started before the earlier finished."""
    by_level: dict[int, list[int]] = {}
    for i, l in level.items():
        by_level.setdefault(l, []).append(i)
    out = []
    finish_so_far = -math.inf
    last_task = None
    for l in sorted(by_level):
        for j in by_level[l]:
            if j in start and start[j] < finish_so_far - 1e-9:
                out.append((last_task, j))
        for i in by_level[l]:
            t = end.get(i, math.inf if i in start else -math.inf)
            if t > finish_so_far:
                finish_so_far, last_task = t, i
    return out


def fault_inject(objects: list[ExecTaskObject], instance: ProblemInstance, fault: Fault,
                 noise: NoiseModel | None = None) -> SimReport:
    if not any(fault.task in o.tasks for o in objects):
        raise ValueError(f"fault names unknown task {fault.task}")
    return simulate(objects, noise or NoiseModel(), instance, [fault])
