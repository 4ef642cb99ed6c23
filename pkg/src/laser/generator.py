"""Synthetic slab instances and small random instances."""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import asdict, dataclass

from .collision import DEFAULT_CELL, DEFAULT_ENVELOPE, DEFAULT_MARGIN, VoxelGrid, build_conflicts, raster_coords
from .errors import SpecError
from .model import (
    INF, Actor, ConflictMatrices, Eta, PriorityClass, ProblemInstance, TaskKind, TaskPrimitive,
    TemporalConstraint, dumps, instance_to_dict,
)

GLUE_TOOL = "glue_effector"
VACUUM = "vacuum_gripper"
SCREW_TOOL = "screw_effector"


@dataclass
class GeneratorSpec:
    """Parameters of a synthetic slab.

    The slab spans ``length`` metres along x and ``width`` along y; elements
    are linear beams or planar crowns running along y, evenly spaced in x.
    """

    length: float = 6.0
    width: float = 2.4
    n_elements: int = 34
    bottom_screws: int = 174
    top_screws: int = 178
    screw_density_cm2: float = 220.0
    crown_every: int = 4
    session: str = "full"
    n_actors: int = 2
    screw_cycles: tuple[int, ...] = (16, 11, 13)
    glue_speed: float = 0.05
    place_crown_s: int = 90
    place_beam_s: int = 40
    place_plate_s: int = 120
    open_s: int = 900
    close_s: int = 7200
    buffer_fraction: float = 0.1
    priority_fraction: float = 0.5
    travel_speed: float = 0.5
    tool_switch_s: int = 45
    place_prep_s: int = 20
    glue_prep_s: int = 10
    cell_size: float = DEFAULT_CELL
    margin: float = DEFAULT_MARGIN
    envelope_radius: float = DEFAULT_ENVELOPE
    name: str = ""

    def validate(self) -> None:
        for name in ("length", "width", "screw_density_cm2", "glue_speed", "travel_speed", "cell_size"):
            if not getattr(self, name) > 0:
                raise SpecError(f"{name} must be positive")
        if self.session not in ("bottom", "top", "full"):
            raise SpecError(f"unknown session {self.session!r}")
        if self.session != "top" and self.n_elements < 1:
            raise SpecError("n_elements must be positive")
        if self.bottom_screws < 0 or self.top_screws < 0:
            raise SpecError("screw counts must be nonnegative")
        if self.session != "bottom" and self.top_screws < 1:
            raise SpecError("top session needs at least one screw")
        if self.top_screws > candidate_screw_positions(self):
            raise SpecError(f"{self.top_screws} top screws exceed {candidate_screw_positions(self)} candidate positions")
        if not 1 <= self.n_actors <= len(self.screw_cycles):
            raise SpecError("n_actors out of range")
        if any(c <= 0 for c in self.screw_cycles):
            raise SpecError("screw cycles must be positive")
        if not self.open_s < self.close_s:
            raise SpecError("open_s must be < close_s")


def candidate_screw_positions(spec: GeneratorSpec) -> int:
    """Screw positions at the design density before pruning."""
    area_cm2 = (spec.length * 100) * (spec.width * 100)
    return int(math.floor(area_cm2 / spec.screw_density_cm2 + 1e-9))


def _actors(spec: GeneratorSpec) -> list[Actor]:
    sw = spec.tool_switch_s
    switches = {(GLUE_TOOL, VACUUM): sw + 15, (GLUE_TOOL, SCREW_TOOL): sw, (VACUUM, SCREW_TOOL): sw}
    tools = {TaskKind.GLUE: GLUE_TOOL, TaskKind.BATCHED_GLUE: GLUE_TOOL, TaskKind.SCREW: SCREW_TOOL,
             TaskKind.PLACE: SCREW_TOOL, TaskKind.PICK: SCREW_TOOL}
    prep = {TaskKind.PLACE: spec.place_prep_s, TaskKind.GLUE: spec.glue_prep_s}
    out = []
    for k in range(spec.n_actors):
        out.append(Actor(id=k, name=f"R{k + 1}", travel_speed=spec.travel_speed,
                         tool_switch_times=dict(switches), prep_times=dict(prep), tools=dict(tools)))
    return out


def _cycles(spec):
    return {k: spec.screw_cycles[k] for k in range(spec.n_actors)}


def _spread(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if e < extra else 0) for e in range(parts)]


def generate_slab_instance(spec: GeneratorSpec, seed: int = 0) -> ProblemInstance:
    """Deterministic synthetic slab: per-element glue/place/screw chains and top-plate screws.

    Robot 0 can do everything; robot 1 only places beams and screws (as in a
    two-robot cell where one arm carries the glue effector and vacuum
    gripper); a third robot, if requested, glues, places beams and screws.
    """
    spec.validate()
    rng = random.Random(seed)
    actors = _actors(spec)
    cycles = _cycles(spec)
    tasks: list[TaskPrimitive] = []
    temporal: list[TemporalConstraint] = []
    ids: list[str] = []
    y0, y1 = 0.1, spec.width - 0.1
    n_el = max(spec.n_elements, 1)
    xs = [spec.length * (e + 0.5) / n_el for e in range(n_el)]
    pad = spec.margin + spec.envelope_radius + 2 * spec.cell_size
    grid = VoxelGrid(origin=(-pad, -pad), cell_size=spec.cell_size,
                     dims=(int(math.ceil((spec.length + 2 * pad) / spec.cell_size)),
                           int(math.ceil((spec.width + 2 * pad) / spec.cell_size))),
                     margin=spec.margin, envelope_radius=spec.envelope_radius)

    def jitter():
        return rng.uniform(-0.01, 0.01)

    def add(kind, element, coords, durations, ext, tool=None, prio=None, footprint=None):
        tid = len(tasks)
        coords = tuple((round(x, 4), round(y, 4)) for x, y in coords)
        fp = footprint if footprint is not None else raster_coords(grid, coords)
        tasks.append(TaskPrimitive(tid, kind, element, coords, durations, frozenset(fp), prio, tool))
        ids.append(ext)
        return tid

    def is_crown(e):
        return spec.crown_every > 0 and e % spec.crown_every == 0

    if spec.session in ("bottom", "full"):
        places = {}
        per_el = _spread(spec.bottom_screws, n_el)
        glue_s = int(math.ceil((y1 - y0) / spec.glue_speed))
        for e in range(n_el):
            x = xs[e]
            gluers = {k: glue_s for k in range(spec.n_actors) if k != 1}
            g = add(TaskKind.GLUE, e, ((x + jitter(), y0), (x + jitter(), y1)), gluers, f"e{e}.glue")
            if is_crown(e):
                half = min(0.15, spec.length / n_el / 2)
                band = set()
                for dx in (-half, 0.0, half):
                    band |= raster_coords(grid, ((x + dx, y0), (x + dx, y1)))
                p = add(TaskKind.PLACE, e, ((x, spec.width / 2),), {0: spec.place_crown_s}, f"e{e}.place",
                        tool=VACUUM, footprint=band)
            else:
                p = add(TaskKind.PLACE, e, ((x, spec.width / 2),),
                        {k: spec.place_beam_s for k in range(spec.n_actors)}, f"e{e}.place",
                        footprint=raster_coords(grid, ((x, y0), (x, y1))))
            places[e] = p
            temporal.append(TemporalConstraint(g, p, Eta.END, Eta.START, 0, INF))
            temporal.append(TemporalConstraint(g, p, Eta.START, Eta.START, 0, spec.open_s))
            cnt = per_el[e]
            for s in range(cnt):
                y = y0 + (y1 - y0) * (s + 0.5) / cnt
                sc = add(TaskKind.SCREW, e, ((x + jitter(), y),), dict(cycles), f"e{e}.s{s}")
                temporal.append(TemporalConstraint(p, sc, Eta.END, Eta.START, 0, INF))
                temporal.append(TemporalConstraint(p, sc, Eta.START, Eta.END, 0, spec.close_s))
        for e in range(n_el):
            if is_crown(e):
                for nb in (e - 1, e + 1):
                    if 0 <= nb < n_el and not is_crown(nb):
                        temporal.append(TemporalConstraint(places[e], places[nb], Eta.END, Eta.START, 0, INF))

    plate = None
    if spec.session == "full":
        # flipping the slab and laying the top plate; its glue starts the top-session clock
        rect = raster_coords(grid, ((0.0, y0), (spec.length, y0)))
        rows = set()
        steps = int(math.ceil((y1 - y0) / spec.cell_size))
        for s in range(steps + 1):
            y = y0 + (y1 - y0) * s / steps
            rows |= raster_coords(grid, ((0.0, y), (spec.length, y)))
        plate = add(TaskKind.PLACE, None, ((spec.length / 2, spec.width / 2),), {0: spec.place_plate_s},
                    "top.plate", tool=VACUUM, footprint=rect | rows)
        for i, t in enumerate(tasks[:-1]):
            if t.kind is TaskKind.SCREW:
                temporal.append(TemporalConstraint(i, plate, Eta.END, Eta.START, 0, INF))

    if spec.session in ("top", "full"):
        per_line = _spread(spec.top_screws, n_el)
        every = max(1, round(1 / spec.priority_fraction)) if spec.priority_fraction > 0 else 0
        counter = 0
        for e in range(n_el):
            cnt = per_line[e]
            for s in range(cnt):
                y = y0 + (y1 - y0) * (s + 0.25 + 0.5 * (e % 2)) / cnt
                y = min(max(y, y0), y1)
                prio = PriorityClass.PRIORITY if every and counter % every == 0 else PriorityClass.REINFORCEMENT
                counter += 1
                sc = add(TaskKind.SCREW, None, ((xs[e] + jitter(), y),), dict(cycles), f"top.e{e}.s{s}", prio=prio)
                if plate is None:
                    temporal.append(TemporalConstraint(None, sc, Eta.START, Eta.END, 0, spec.close_s))
                else:
                    temporal.append(TemporalConstraint(plate, sc, Eta.END, Eta.START, 0, INF))
                    temporal.append(TemporalConstraint(plate, sc, Eta.START, Eta.END, 0, spec.close_s))

    meta = {"name": spec.name or f"slab-{spec.session}-{seed}", "session": spec.session, "seed": seed,
            "spec": asdict(spec)}
    inst = ProblemInstance(
        tasks=tasks, actors=actors, temporal=temporal,
        adhesive_open_s=spec.open_s, adhesive_close_s=spec.close_s,
        safety_buffer_fraction=spec.buffer_fraction,
        task_ids=ids, actor_ids=[a.name for a in actors], grid=grid.to_dict(), meta=meta,
    )
    inst.validate()
    inst.conflicts = build_conflicts(inst, grid)
    return inst


def session_split(inst: ProblemInstance) -> tuple[list[int], list[int]]:
    """Split task ids into (bottom session, top session).

    The top session holds the screws with a priority class plus every task
    that anchors one of them through a temporal constraint (the top plate).
    """
    top = {i for i, t in enumerate(inst.tasks) if t.priority_class is not None}
    anchors = {c.u for c in inst.temporal if c.v in top and c.u is not None and c.u not in top}
    top |= anchors
    bottom = [i for i in range(inst.n_tasks) if i not in top]
    return bottom, sorted(top)


def instance_hash(inst: ProblemInstance) -> str:
    return hashlib.sha256(dumps(instance_to_dict(inst)).encode()).hexdigest()


def random_instance(n_tasks: int, n_actors: int = 2, seed: int = 0, *, conflict_p: float = 0.3,
                    edge_p: float = 0.1, precedence_p: float = 0.25, window_p: float = 0.3,
                    max_duration: int = 9, both_p: float = 0.6) -> ProblemInstance:
    """Small abstract instance with explicit conflicts and transition times.

    Used for brute-force comparisons, so everything (including transitions)
    is an explicit small integer.
    """
    rng = random.Random(seed)
    actors = [Actor(id=k, name=f"R{k + 1}") for k in range(n_actors)]
    kinds = [TaskKind.GLUE, TaskKind.PLACE, TaskKind.SCREW]
    tasks = []
    for i in range(n_tasks):
        if n_actors > 1 and rng.random() < both_p:
            cap = list(range(n_actors))
        else:
            cap = [rng.randrange(n_actors)]
        durations = {k: rng.randint(1, max_duration) for k in cap}
        coords = ((round(rng.uniform(0, 4), 2), round(rng.uniform(0, 4), 2)),)
        tasks.append(TaskPrimitive(i, rng.choice(kinds), None, coords, durations))
    transitions = {}
    for k in range(n_actors):
        for i in range(n_tasks):
            for j in range(n_tasks):
                if i != j and k in tasks[i].durations and k in tasks[j].durations:
                    transitions[(k, i, j)] = rng.randint(0, 3)
    node = []
    for i in range(n_tasks):
        for j in range(i + 1, n_tasks):
            for a in tasks[i].durations:
                for b in tasks[j].durations:
                    if a != b and rng.random() < conflict_p:
                        node.append((i, j, a, b))
    edge = [(i, j) for i in range(n_tasks) for j in range(n_tasks) if i != j and rng.random() < edge_p]
    temporal = []
    for i in range(n_tasks):
        for j in range(i + 1, n_tasks):
            if rng.random() < precedence_p:
                eta_u = rng.choice([Eta.START, Eta.END])
                lower = rng.randint(0, 3)
                upper = INF
                if rng.random() < window_p:
                    upper = lower + rng.randint(8, 30)
                temporal.append(TemporalConstraint(i, j, eta_u, Eta.START, lower, upper))
    inst = ProblemInstance(tasks=tasks, actors=actors, temporal=temporal,
                           conflicts=ConflictMatrices(node, edge), transitions=transitions,
                           meta={"name": f"random-{n_tasks}-{seed}"})
    inst.validate()
    return inst


def benchmark_suite() -> list[GeneratorSpec]:
    """Eight slab variants spanning 15-74 elements and 41-743 top screws."""
    rows = [
        (15, 41, 3.0, 1.8), (22, 95, 3.6, 2.0), (30, 178, 4.8, 2.4), (34, 250, 6.0, 2.4),
        (42, 330, 6.0, 2.4), (52, 450, 7.2, 2.4), (63, 600, 8.4, 2.4), (74, 743, 9.6, 2.4),
    ]
    out = []
    for idx, (el, screws, length, width) in enumerate(rows):
        out.append(GeneratorSpec(length=length, width=width, n_elements=el, bottom_screws=el * 3,
                                 top_screws=screws, session="full", name=f"slab-{chr(ord('A') + idx)}"))
    return out
