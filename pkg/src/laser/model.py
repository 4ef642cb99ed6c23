"""Domain types, the instance/schedule file formats and transition times."""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import CapabilityError, ParseError, ValidationError

logger = logging.getLogger(__name__)

SCHEMA = "laser/1"
INF = math.inf


class TaskKind(str, enum.Enum):
    GLUE = "glue"
    PICK = "pick"
    PLACE = "place"
    SCREW = "screw"
    BATCHED_GLUE = "batched_glue"
    TRANSITION = "transition"


class Eta(str, enum.Enum):
    START = "start"
    END = "end"


class PriorityClass(str, enum.Enum):
    PRIORITY = "priority"
    REINFORCEMENT = "reinforcement"


Point = tuple[float, float]


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True, eq=False)
class TaskPrimitive:
    id: int
    kind: TaskKind
    element: int | None
    coords: tuple[Point, ...]
    durations: Mapping[int, int]
    footprint: frozenset[int] = frozenset()
    priority_class: PriorityClass | None = None
    tool: str | None = None
    members: tuple[int, ...] = ()

    @property
    def entry(self) -> Point:
        return self.coords[0]

    @property
    def exit(self) -> Point:
        return self.coords[-1]

    def validate(self) -> None:
        if not self.durations:
            raise CapabilityError(f"tasks[{self.id}].durations", "no capable actor")
        for k, d in self.durations.items():
            if d <= 0:
                raise ValidationError(f"tasks[{self.id}].durations", f"nonpositive duration {d} for actor {k}")
        n = len(self.coords)
        if self.members:
            # merged nodes run from their first member's entry to their last member's exit
            if n < 1:
                raise ValidationError(f"tasks[{self.id}].coords", "merged node without coordinates")
        elif self.kind is TaskKind.GLUE:
            if n not in (1, 2):
                raise ValidationError(f"tasks[{self.id}].coords", "glue tasks need 1 or 2 coordinates")
        elif n != 1:
            raise ValidationError(f"tasks[{self.id}].coords", f"{self.kind.value} tasks need exactly 1 coordinate")
        if self.kind is TaskKind.BATCHED_GLUE and not self.members:
            raise ValidationError(f"tasks[{self.id}].members", "batched glue without members")


@dataclass(frozen=True, eq=False)
class Actor:
    id: int
    name: str
    travel_speed: float = 0.5
    tool_switch_times: Mapping[tuple[str, str], int] = field(default_factory=dict)
    prep_times: Mapping[TaskKind, int] = field(default_factory=dict)
    tools: Mapping[TaskKind, str] = field(default_factory=dict)

    def tool_for(self, task: TaskPrimitive) -> str:
        if task.tool is not None:
            return task.tool
        return self.tools.get(task.kind, task.kind.value)

    def switch_time(self, a: str, b: str) -> int:
        if a == b:
            return 0
        if (a, b) in self.tool_switch_times:
            return self.tool_switch_times[(a, b)]
        if (b, a) in self.tool_switch_times:
            return self.tool_switch_times[(b, a)]
        logger.warning("actor %s: no tool switch time for %s -> %s, using 0", self.name, a, b)
        return 0

    def validate(self) -> None:
        if not self.travel_speed > 0:
            raise ValidationError(f"actors[{self.id}].travel_speed", "must be positive")


@dataclass(frozen=True)
class TemporalConstraint:
    """``lower <= t_v[eta_v] - t_u[eta_u] <= upper``; ``u=None`` is the schedule origin."""

    u: int | None
    v: int
    eta_u: Eta = Eta.START
    eta_v: Eta = Eta.START
    lower: int = 0
    upper: float = INF

    @property
    def is_precedence(self) -> bool:
        return self.upper == INF

    def buffered(self, fraction: float) -> "TemporalConstraint":
        if self.upper == INF or fraction <= 0:
            return self
        upper = self.lower + math.floor((self.upper - self.lower) * (1.0 - fraction) + 1e-9)
        return TemporalConstraint(self.u, self.v, self.eta_u, self.eta_v, self.lower, upper)


class ConflictMatrices:
    """Node and edge conflicts.

    Node conflicts are stored sparsely as the set of true entries, closed
    under the ``(i, a) <-> (j, b)`` swap. Edge conflicts are explicit pairs,
    optionally backed by a lazy predicate for pairs never precomputed.
    """

    def __init__(self, node: Iterable[tuple[int, int, int, int]] = (), edge: Iterable[tuple[int, int]] = (),
                 edge_fn=None):
        pairs: dict[tuple[int, int], set[tuple[int, int]]] = {}
        for i, j, a, b in node:
            if i == j:
                continue
            pairs.setdefault((i, j), set()).add((a, b))
            pairs.setdefault((j, i), set()).add((b, a))
        self._node = {key: frozenset(v) for key, v in pairs.items()}
        self._edge = set(edge)
        self._edge_fn = edge_fn
        self._edge_cache: dict[tuple[int, int], bool] = {}
        self._adjacency: dict[int, list[int]] | None = None

    def node(self, i: int, j: int, a: int, b: int) -> bool:
        s = self._node.get((i, j))
        return s is not None and (a, b) in s

    def node_pairs(self, i: int, j: int) -> frozenset[tuple[int, int]]:
        return self._node.get((i, j), frozenset())

    def edge(self, i: int, j: int) -> bool:
        if (i, j) in self._edge:
            return True
        if self._edge_fn is None:
            return False
        key = (i, j)
        if key not in self._edge_cache:
            self._edge_cache[key] = bool(self._edge_fn(i, j))
        return self._edge_cache[key]

    def node_entries(self) -> list[tuple[int, int, int, int]]:
        return sorted((i, j, a, b) for (i, j), s in self._node.items() for a, b in s)

    def edge_entries(self) -> list[tuple[int, int]]:
        known = set(self._edge) | {k for k, v in self._edge_cache.items() if v}
        return sorted(known)

    def neighbours(self, i: int) -> list[int]:
        if self._adjacency is None:
            adj: dict[int, list[int]] = {}
            for a, b in self._node:
                adj.setdefault(a, []).append(b)
            self._adjacency = {a: sorted(bs) for a, bs in adj.items()}
        return self._adjacency.get(i, [])


@dataclass(eq=False)
class ProblemInstance:
    tasks: list[TaskPrimitive]
    actors: list[Actor]
    temporal: list[TemporalConstraint]
    conflicts: ConflictMatrices = field(default_factory=ConflictMatrices)
    transitions: dict[tuple[int, int, int], int] = field(default_factory=dict)
    adhesive_open_s: int = 900
    adhesive_close_s: int = 7200
    safety_buffer_fraction: float = 0.0
    task_ids: list[Any] | None = None
    actor_ids: list[Any] | None = None
    grid: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task_ids is None:
            self.task_ids = [t.id for t in self.tasks]
        if self.actor_ids is None:
            self.actor_ids = [a.id for a in self.actors]
        self._rho_cache: dict[tuple[int, int, int], int] = {}

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_actors(self) -> int:
        return len(self.actors)

    def capable(self, i: int) -> list[int]:
        return sorted(self.tasks[i].durations)

    def duration(self, i: int, k: int) -> int:
        return self.tasks[i].durations[k]

    def min_duration(self, i: int) -> int:
        return min(self.tasks[i].durations.values())

    def transition_parts(self, k: int, i: int, j: int) -> tuple[float, int, int]:
        """Return (travel seconds, tool switch seconds, prep seconds) for i -> j on k."""
        actor, ti, tj = self.actors[k], self.tasks[i], self.tasks[j]
        travel = math.dist(ti.exit, tj.entry) / actor.travel_speed
        switch = actor.switch_time(actor.tool_for(ti), actor.tool_for(tj))
        prep = actor.prep_times.get(tj.kind, 0)
        return travel, switch, prep

    def rho(self, k: int, i: int, j: int) -> int:
        key = (k, i, j)
        if key in self.transitions:
            return self.transitions[key]
        val = self._rho_cache.get(key)
        if val is None:
            travel, switch, prep = self.transition_parts(k, i, j)
            val = round_half_up(travel + switch + prep)
            self._rho_cache[key] = val
        return val

    def buffered_temporal(self, fraction: float | None = None) -> list[TemporalConstraint]:
        frac = self.safety_buffer_fraction if fraction is None else fraction
        return [c.buffered(frac) for c in self.temporal]

    @cached_property
    def task_index(self) -> dict[Any, int]:
        return {ext: i for i, ext in enumerate(self.task_ids)}

    @cached_property
    def actor_index(self) -> dict[Any, int]:
        return {ext: i for i, ext in enumerate(self.actor_ids)}

    def subset(self, task_ids: Sequence[int], name: str | None = None) -> "ProblemInstance":
        """Sub-instance restricted to ``task_ids`` (constraints between kept tasks only).

        Ids are re-densified; the external id map is carried over.
        """
        keep = list(task_ids)
        remap = {old: new for new, old in enumerate(keep)}
        tasks = [_retask(self.tasks[old], remap[old]) for old in keep]
        temporal = [
            TemporalConstraint(None if c.u is None else remap[c.u], remap[c.v], c.eta_u, c.eta_v, c.lower, c.upper)
            for c in self.temporal
            if c.v in remap and (c.u is None or c.u in remap)
        ]
        node = [(remap[i], remap[j], a, b) for (i, j, a, b) in self.conflicts.node_entries()
                if i in remap and j in remap]
        edge = [(remap[i], remap[j]) for (i, j) in self.conflicts.edge_entries() if i in remap and j in remap]
        edge_fn = None
        if self.conflicts._edge_fn is not None:
            parent, back = self.conflicts, keep
            edge_fn = lambda i, j: parent.edge(back[i], back[j])  # noqa: E731
        transitions = {(k, remap[i], remap[j]): v for (k, i, j), v in self.transitions.items()
                       if i in remap and j in remap}
        meta = dict(self.meta)
        if name:
            meta["name"] = name
        return ProblemInstance(
            tasks=tasks, actors=self.actors, temporal=temporal,
            conflicts=ConflictMatrices(node, edge, edge_fn), transitions=transitions,
            adhesive_open_s=self.adhesive_open_s, adhesive_close_s=self.adhesive_close_s,
            safety_buffer_fraction=self.safety_buffer_fraction,
            task_ids=[self.task_ids[old] for old in keep], actor_ids=list(self.actor_ids),
            grid=self.grid, meta=meta,
        )

    def validate(self) -> None:
        if not self.actors:
            raise ValidationError("actors", "at least one actor required")
        for a in self.actors:
            a.validate()
        for idx, t in enumerate(self.tasks):
            if t.id != idx:
                raise ValidationError(f"tasks[{idx}].id", "internal ids must be dense")
            t.validate()
            for k in t.durations:
                if not 0 <= k < len(self.actors):
                    raise ValidationError(f"tasks[{idx}].durations", f"unknown actor {k}")
        n = len(self.tasks)
        for c in self.temporal:
            if not (0 <= c.v < n) or (c.u is not None and not 0 <= c.u < n):
                raise ValidationError("temporal_constraints", f"unknown task in {c}")
            if c.lower > c.upper:
                raise ValidationError("temporal_constraints", f"lower > upper in {c}")
        if not self.adhesive_open_s < self.adhesive_close_s:
            raise ValidationError("adhesive", "open_s must be < close_s")
        if not 0 <= self.safety_buffer_fraction < 1:
            raise ValidationError("adhesive.buffer_fraction", "must lie in [0, 1)")


def _retask(t: TaskPrimitive, new_id: int) -> TaskPrimitive:
    return TaskPrimitive(new_id, t.kind, t.element, t.coords, t.durations, t.footprint,
                         t.priority_class, t.tool, t.members)


def compute_transitions(instance: ProblemInstance) -> dict[tuple[int, int, int], int]:
    """Full transition map over every ordered pair of tasks an actor can do.

    Quadratic in the task count; large instances should query
    :meth:`ProblemInstance.rho` lazily instead.
    """
    out = {}
    for k in range(instance.n_actors):
        mine = [i for i, t in enumerate(instance.tasks) if k in t.durations]
        for i in mine:
            for j in mine:
                if i != j:
                    out[(k, i, j)] = instance.rho(k, i, j)
    return out


@dataclass
class Schedule:
    assignment: dict[int, int]
    sequences: dict[int, list[int]]
    level: dict[int, int]
    start: dict[int, int]
    end: dict[int, int]
    barriers: list[int]
    makespan: int
    max_level: int

    def objective(self, lam: float = 1.0) -> float:
        return self.makespan + lam * self.max_level

    def tasks_on_level(self, lvl: int) -> list[int]:
        return sorted(i for i, l in self.level.items() if l == lvl)

    @property
    def n_levels(self) -> int:
        return self.max_level + 1 if self.level else 0

    def utilization(self, instance: ProblemInstance) -> float:
        if not self.makespan:
            return 0.0
        busy = sum(instance.duration(i, k) for i, k in self.assignment.items())
        return busy / (self.makespan * instance.n_actors)


# ---------------------------------------------------------------------------
# file formats


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def _seconds(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        logger.warning("%s: %s s rounded to whole seconds", where, value)
        return round_half_up(value)
    return int(value)


def instance_from_dict(data: Mapping[str, Any]) -> ProblemInstance:
    if data.get("schema", SCHEMA) != SCHEMA:
        raise ParseError(f"unsupported schema {data.get('schema')!r}")
    try:
        raw_tasks = data["tasks"]
        raw_actors = data["actors"]
    except KeyError as exc:
        raise ParseError(f"missing key {exc}") from exc
    if not isinstance(raw_tasks, list) or not isinstance(raw_actors, list):
        raise ParseError("tasks and actors must be lists")

    actor_ids = [a.get("id", idx) for idx, a in enumerate(raw_actors)]
    actor_index = {ext: i for i, ext in enumerate(actor_ids)}
    if len(actor_index) != len(actor_ids):
        raise ValidationError("actors.id", "duplicate actor id")
    actors = []
    for idx, a in enumerate(raw_actors):
        try:
            switches = {}
            for entry in a.get("tool_switch_times", []):
                switches[(entry["from"], entry["to"])] = _seconds(entry["s"], f"actors[{idx}].tool_switch_times")
            actors.append(Actor(
                id=idx,
                name=str(a.get("name", actor_ids[idx])),
                travel_speed=float(a.get("travel_speed", 0.5)),
                tool_switch_times=switches,
                prep_times={TaskKind(k): _seconds(v, f"actors[{idx}].prep_times") for k, v in a.get("prep_times", {}).items()},
                tools={TaskKind(k): str(v) for k, v in a.get("tools", {}).items()},
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"actors[{idx}]: {exc}") from exc

    task_ids = [t.get("id", idx) for idx, t in enumerate(raw_tasks)]
    task_index = {ext: i for i, ext in enumerate(task_ids)}
    if len(task_index) != len(task_ids):
        raise ValidationError("tasks.id", "duplicate task id")
    tasks = []
    for idx, t in enumerate(raw_tasks):
        try:
            kind = TaskKind(t["kind"])
            coords = tuple((float(p[0]), float(p[1])) for p in t["coords"])
            durations = {}
            for ext, d in t.get("durations", {}).items():
                if ext not in actor_index:
                    # JSON object keys are strings; allow integer actor ids
                    try:
                        ext = int(ext) if int(ext) in actor_index else ext
                    except ValueError:
                        pass
                if ext not in actor_index:
                    raise ValidationError(f"tasks[{idx}].durations", f"unknown actor {ext!r}")
                durations[actor_index[ext]] = _seconds(d, f"tasks[{idx}].durations")
            prio = t.get("priority_class")
            members = tuple(task_index[m] for m in t.get("members", []))
            task = TaskPrimitive(
                id=idx, kind=kind, element=t.get("element"), coords=coords, durations=durations,
                footprint=frozenset(int(c) for c in t.get("footprint", [])),
                priority_class=PriorityClass(prio) if prio else None,
                tool=t.get("tool"), members=members,
            )
        except ValidationError:
            raise
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise ParseError(f"tasks[{idx}]: {exc!r}") from exc
        task.validate()
        tasks.append(task)

    def tid(ext, where):
        if ext not in task_index:
            raise ValidationError(where, f"unknown task {ext!r}")
        return task_index[ext]

    temporal = []
    for idx, c in enumerate(data.get("temporal_constraints", [])):
        where = f"temporal_constraints[{idx}]"
        try:
            upper = c.get("upper")
            temporal.append(TemporalConstraint(
                u=None if c.get("u") is None else tid(c["u"], where),
                v=tid(c["v"], where),
                eta_u=Eta(c.get("eta_u", "start")), eta_v=Eta(c.get("eta_v", "start")),
                lower=_seconds(c.get("lower", 0), where),
                upper=INF if upper is None else _seconds(upper, where),
            ))
        except ValidationError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"{where}: {exc!r}") from exc

    transitions = {}
    for idx, e in enumerate(data.get("transitions", [])):
        where = f"transitions[{idx}]"
        try:
            transitions[(actor_index[e["actor"]], tid(e["from"], where), tid(e["to"], where))] = _seconds(e["s"], where)
        except KeyError as exc:
            raise ParseError(f"{where}: {exc!r}") from exc

    adhesive = data.get("adhesive", {})
    inst = ProblemInstance(
        tasks=tasks, actors=actors, temporal=temporal, transitions=transitions,
        adhesive_open_s=_seconds(adhesive.get("open_s", 900), "adhesive.open_s"),
        adhesive_close_s=_seconds(adhesive.get("close_s", 7200), "adhesive.close_s"),
        safety_buffer_fraction=float(adhesive.get("buffer_fraction", 0.0)),
        task_ids=task_ids, actor_ids=actor_ids, grid=data.get("grid"), meta=dict(data.get("meta", {})),
    )
    inst.validate()

    conflicts = data.get("conflicts")
    if conflicts is not None:
        try:
            node = [(tid(i, "conflicts.node"), tid(j, "conflicts.node"), actor_index[a], actor_index[b])
                    for i, j, a, b in conflicts.get("node", [])]
            edge = [(tid(i, "conflicts.edge"), tid(j, "conflicts.edge")) for i, j in conflicts.get("edge", [])]
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"conflicts: {exc!r}") from exc
        inst.conflicts = ConflictMatrices(node, edge)
    else:
        from .collision import build_conflicts, grid_for_instance

        inst.conflicts = build_conflicts(inst, grid_for_instance(inst))
    return inst


def load_instance(path) -> ProblemInstance:
    return instance_from_dict(_read_json(path))


def instance_to_dict(inst: ProblemInstance, include_conflicts: bool = True) -> dict:
    tids, aids = inst.task_ids, inst.actor_ids
    tasks = []
    for t in inst.tasks:
        entry = {
            "id": tids[t.id],
            "kind": t.kind.value,
            "element": t.element,
            "coords": [list(p) for p in t.coords],
            "durations": {str(aids[k]): d for k, d in sorted(t.durations.items())},
        }
        if t.footprint:
            entry["footprint"] = sorted(t.footprint)
        if t.priority_class is not None:
            entry["priority_class"] = t.priority_class.value
        if t.tool is not None:
            entry["tool"] = t.tool
        if t.members:
            entry["members"] = [tids[m] for m in t.members]
        tasks.append(entry)
    actors = []
    for a in inst.actors:
        actors.append({
            "id": aids[a.id],
            "name": a.name,
            "travel_speed": a.travel_speed,
            "tool_switch_times": [{"from": x, "to": y, "s": s} for (x, y), s in sorted(a.tool_switch_times.items())],
            "prep_times": {k.value: v for k, v in sorted(a.prep_times.items(), key=lambda kv: kv[0].value)},
            "tools": {k.value: v for k, v in sorted(a.tools.items(), key=lambda kv: kv[0].value)},
        })
    temporal = [{
        "u": None if c.u is None else tids[c.u], "v": tids[c.v],
        "eta_u": c.eta_u.value, "eta_v": c.eta_v.value,
        "lower": c.lower, "upper": None if c.upper == INF else int(c.upper),
    } for c in inst.temporal]
    out = {
        "schema": SCHEMA,
        "tasks": tasks,
        "actors": actors,
        "temporal_constraints": temporal,
        "adhesive": {"open_s": inst.adhesive_open_s, "close_s": inst.adhesive_close_s,
                     "buffer_fraction": inst.safety_buffer_fraction},
    }
    if inst.transitions:
        out["transitions"] = [{"actor": aids[k], "from": tids[i], "to": tids[j], "s": s}
                              for (k, i, j), s in sorted(inst.transitions.items())]
    # geometric conflicts are recomputed from footprints and grid on load
    if include_conflicts and inst.conflicts._edge_fn is None:
        out["conflicts"] = {
            "node": [[tids[i], tids[j], aids[a], aids[b]] for i, j, a, b in inst.conflicts.node_entries()],
            "edge": [[tids[i], tids[j]] for i, j in inst.conflicts.edge_entries()],
        }
    if inst.grid is not None:
        out["grid"] = inst.grid
    if inst.meta:
        out["meta"] = inst.meta
    return out


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def save_instance(inst: ProblemInstance, path, include_conflicts: bool = True) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst, include_conflicts)))


def schedule_to_dict(schedule: Schedule, inst: ProblemInstance, lam: float | None = None) -> dict:
    tids, aids = inst.task_ids, inst.actor_ids
    objective = {"makespan": schedule.makespan, "max_level": schedule.max_level}
    if lam is not None:
        objective["lambda"] = lam
        objective["value"] = schedule.objective(lam)
    return {
        "schema": SCHEMA,
        "assignment": {str(tids[i]): aids[k] for i, k in sorted(schedule.assignment.items())},
        "sequences": {str(aids[k]): [tids[i] for i in seq] for k, seq in sorted(schedule.sequences.items())},
        "levels": {str(tids[i]): l for i, l in sorted(schedule.level.items())},
        "times": {str(tids[i]): {"start": schedule.start[i], "end": schedule.end[i]} for i in sorted(schedule.start)},
        "barriers": list(schedule.barriers),
        "objective": objective,
    }


def schedule_from_dict(data: Mapping[str, Any], inst: ProblemInstance) -> Schedule:
    from .errors import ScheduleReferenceError

    if data.get("schema", SCHEMA) != SCHEMA:
        raise ParseError(f"unsupported schema {data.get('schema')!r}")
    tix = {str(k): v for k, v in inst.task_index.items()}
    aix = {str(k): v for k, v in inst.actor_index.items()}

    def t(ext):
        try:
            return tix[str(ext)]
        except KeyError:
            raise ScheduleReferenceError(f"unknown task {ext!r}") from None

    def a(ext):
        try:
            return aix[str(ext)]
        except KeyError:
            raise ScheduleReferenceError(f"unknown actor {ext!r}") from None

    try:
        return Schedule(
            assignment={t(i): a(k) for i, k in data["assignment"].items()},
            sequences={a(k): [t(i) for i in seq] for k, seq in data["sequences"].items()},
            level={t(i): int(l) for i, l in data["levels"].items()},
            start={t(i): int(v["start"]) for i, v in data["times"].items()},
            end={t(i): int(v["end"]) for i, v in data["times"].items()},
            barriers=[int(b) for b in data["barriers"]],
            makespan=int(data["objective"]["makespan"]),
            max_level=int(data["objective"]["max_level"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"schedule: {exc!r}") from exc


def save_schedule(schedule: Schedule, inst: ProblemInstance, path, lam: float | None = None) -> None:
    Path(path).write_text(dumps(schedule_to_dict(schedule, inst, lam)))


def load_schedule(path, inst: ProblemInstance) -> Schedule:
    return schedule_from_dict(_read_json(path), inst)
