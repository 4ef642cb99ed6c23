"""Voxelised occupancy and the node/edge conflict matrices.

Footprints are Python ``int`` bitsets over the flattened grid
(``index = ix + iy * nx``), so pairwise intersection is a single ``&``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import GridError
from .model import ConflictMatrices, ProblemInstance, TaskKind

DEFAULT_CELL = 0.1
DEFAULT_MARGIN = 0.2
DEFAULT_ENVELOPE = 0.4


@dataclass
class VoxelGrid:
    origin: tuple[float, float]
    cell_size: float
    dims: tuple[int, int]
    margin: float = DEFAULT_MARGIN
    envelope_radius: dict[int, float] | float = DEFAULT_ENVELOPE
    occupancy: dict[int, int] = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return self.dims[0] * self.dims[1]

    def cell_of(self, p) -> tuple[int, int]:
        ix = math.floor((p[0] - self.origin[0]) / self.cell_size + 1e-9)
        iy = math.floor((p[1] - self.origin[1]) / self.cell_size + 1e-9)
        if not (0 <= ix < self.dims[0] and 0 <= iy < self.dims[1]):
            raise GridError(f"point {p} outside grid")
        return ix, iy

    def index(self, ix: int, iy: int) -> int:
        return ix + iy * self.dims[0]

    def unindex(self, idx: int) -> tuple[int, int]:
        return idx % self.dims[0], idx // self.dims[0]

    def bits(self, cells: Iterable[int]) -> int:
        out = 0
        for c in cells:
            if not 0 <= c < self.n_cells:
                raise GridError(f"cell {c} outside grid of {self.n_cells} cells")
            out |= 1 << c
        return out

    def envelope(self, actor: int) -> float:
        if isinstance(self.envelope_radius, dict):
            return self.envelope_radius.get(actor, DEFAULT_ENVELOPE)
        return self.envelope_radius

    def dilate(self, cells: Iterable[int], radius: float) -> set[int]:
        """Cells within ``radius`` metres (centre to centre) of any cell in ``cells``.

        Always applied to a base footprint, so repeated calls at one margin
        give the same set.
        """
        r = radius / self.cell_size
        ir = int(math.floor(r + 1e-9))
        offsets = [(dx, dy) for dx in range(-ir, ir + 1) for dy in range(-ir, ir + 1) if dx * dx + dy * dy <= r * r + 1e-9]
        nx, ny = self.dims
        out = set()
        for c in cells:
            cx, cy = c % nx, c // nx
            for dx, dy in offsets:
                x, y = cx + dx, cy + dy
                if 0 <= x < nx and 0 <= y < ny:
                    out.add(x + y * nx)
        return out

    def to_dict(self) -> dict:
        env = self.envelope_radius
        return {
            "origin": list(self.origin), "cell_size": self.cell_size, "dims": list(self.dims),
            "margin": self.margin,
            "envelope_radius": {str(k): v for k, v in env.items()} if isinstance(env, dict) else env,
        }


def supercover_line(c0: tuple[float, float], c1: tuple[float, float]) -> list[tuple[int, int]]:
    """Every grid cell touched by the segment between two points in cell units.

    Points are continuous cell coordinates (cell ``(i, j)`` spans
    ``[i, i+1) x [j, j+1)``). When the segment passes exactly through a
    cell corner both side cells are included.
    """
    x0, y0 = c0
    x1, y1 = c1
    dx, dy = x1 - x0, y1 - y0
    ix, iy = math.floor(x0), math.floor(y0)
    ex, ey = math.floor(x1), math.floor(y1)
    cells = [(ix, iy)]
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    tdx = abs(1.0 / dx) if dx else math.inf
    tdy = abs(1.0 / dy) if dy else math.inf
    tmx = ((ix + 1 - x0) if dx > 0 else (x0 - ix)) * tdx if dx else math.inf
    tmy = ((iy + 1 - y0) if dy > 0 else (y0 - iy)) * tdy if dy else math.inf
    eps = 1e-12
    while (ix, iy) != (ex, ey):
        if tmx > 1 + eps and tmy > 1 + eps:
            break
        if abs(tmx - tmy) <= eps:
            cells.append((ix + sx, iy))
            cells.append((ix, iy + sy))
            ix += sx
            iy += sy
            tmx += tdx
            tmy += tdy
        elif tmx < tmy:
            ix += sx
            tmx += tdx
        else:
            iy += sy
            tmy += tdy
        cells.append((ix, iy))
    return cells


def grid_for_instance(inst: ProblemInstance) -> VoxelGrid:
    params = inst.grid or {}
    cell = float(params.get("cell_size", DEFAULT_CELL))
    margin = float(params.get("margin", DEFAULT_MARGIN))
    env = params.get("envelope_radius", DEFAULT_ENVELOPE)
    if isinstance(env, dict):
        env = {inst.actor_index.get(k, inst.actor_index.get(_maybe_int(k))): float(v) for k, v in env.items()}
    if "origin" in params and "dims" in params:
        origin = tuple(params["origin"])
        dims = tuple(int(d) for d in params["dims"])
    else:
        xs = [p[0] for t in inst.tasks for p in t.coords] or [0.0]
        ys = [p[1] for t in inst.tasks for p in t.coords] or [0.0]
        pad = margin + (max(env.values()) if isinstance(env, dict) and env else float(env) if not isinstance(env, dict) else 0) + cell
        origin = (min(xs) - pad, min(ys) - pad)
        dims = (int(math.ceil((max(xs) - min(xs) + 2 * pad) / cell)) + 1,
                int(math.ceil((max(ys) - min(ys) + 2 * pad) / cell)) + 1)
    return VoxelGrid(origin=(float(origin[0]), float(origin[1])), cell_size=cell, dims=dims, margin=margin,
                     envelope_radius=env)


def _maybe_int(k):
    try:
        return int(k)
    except (TypeError, ValueError):
        return k


def base_footprint(inst: ProblemInstance, grid: VoxelGrid, i: int) -> set[int]:
    t = inst.tasks[i]
    if t.footprint:
        bad = [c for c in t.footprint if not 0 <= c < grid.n_cells]
        if bad:
            raise GridError(f"task {inst.task_ids[i]}: footprint cells {bad[:3]} outside grid")
        return set(t.footprint)
    return raster_coords(grid, t.coords)


def raster_coords(grid: VoxelGrid, coords) -> set[int]:
    if len(coords) == 1:
        return {grid.index(*grid.cell_of(coords[0]))}
    cells = set()
    for p, q in zip(coords, coords[1:]):
        grid.cell_of(p)
        grid.cell_of(q)
        a = ((p[0] - grid.origin[0]) / grid.cell_size, (p[1] - grid.origin[1]) / grid.cell_size)
        b = ((q[0] - grid.origin[0]) / grid.cell_size, (q[1] - grid.origin[1]) / grid.cell_size)
        for ix, iy in supercover_line(a, b):
            if 0 <= ix < grid.dims[0] and 0 <= iy < grid.dims[1]:
                cells.add(grid.index(ix, iy))
    return cells


def actor_footprint(inst: ProblemInstance, grid: VoxelGrid, i: int, a: int) -> set[int]:
    """Dilated footprint of task ``i`` executed by actor ``a``: (task cells plus actor envelope) grown by the margin."""
    base = base_footprint(inst, grid, i)
    around = raster_coords(grid, inst.tasks[i].coords)
    return grid.dilate(base | grid.dilate(around, grid.envelope(a)), grid.margin)


def build_conflicts(inst: ProblemInstance, grid: VoxelGrid, compute_edges: bool = False) -> ConflictMatrices:
    """Node conflicts for every task pair and actor pair, edge conflicts on demand.

    Two tasks on the same actor never node-conflict: an actor executes its
    own tasks one at a time.
    """
    n = inst.n_tasks
    fps: dict[tuple[int, int], int] = {}
    for i, t in enumerate(inst.tasks):
        for a in t.durations:
            fps[(i, a)] = grid.bits(actor_footprint(inst, grid, i, a))
    grid.occupancy = {i: grid.bits(grid.dilate(base_footprint(inst, grid, i), grid.margin)) for i in range(n)}

    by_actor: dict[int, list[tuple[int, int]]] = {}
    for (i, a), bits in fps.items():
        by_actor.setdefault(a, []).append((i, bits))
    node = []
    actors = sorted(by_actor)
    for ai, a in enumerate(actors):
        for b in actors[ai + 1:]:
            for i, bi in by_actor[a]:
                for j, bj in by_actor[b]:
                    if i != j and bi & bj:
                        node.append((i, j, a, b))

    cell_tasks: dict[int, list[int]] = {}
    for k, bits in grid.occupancy.items():
        for c in _iter_bits(bits):
            cell_tasks.setdefault(c, []).append(k)

    matrices = ConflictMatrices(node)
    actor_pairs = [(a, b) for a in actors for b in actors if a != b]

    def edge_fn(i: int, j: int) -> bool:
        corridor = grid.dilate(raster_coords(grid, (inst.tasks[i].exit, inst.tasks[j].entry)), grid.margin)
        seen = set()
        for c in corridor:
            for k in cell_tasks.get(c, ()):
                if k in (i, j) or k in seen:
                    continue
                seen.add(k)
                if _could_share_level(matrices, inst, i, j, k, actor_pairs):
                    return True
        return False

    matrices._edge_fn = edge_fn
    if compute_edges:
        edges = [(i, j) for i in range(n) for j in range(n) if i != j and edge_fn(i, j)]
        matrices = ConflictMatrices(node, edges)
    return matrices


def _could_share_level(m: ConflictMatrices, inst, i, j, k, actor_pairs) -> bool:
    """Task ``k`` can run on another actor in the same level as both ``i`` and ``j``."""
    for a, b in actor_pairs:
        if a in inst.tasks[i].durations and a in inst.tasks[j].durations and b in inst.tasks[k].durations:
            if not m.node(i, k, a, b) and not m.node(j, k, a, b):
                return True
    return False


def _iter_bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def materialize(conflicts: ConflictMatrices, n: int) -> ConflictMatrices:
    """Evaluate every lazy edge entry; quadratic in ``n``."""
    edges = [(i, j) for i in range(n) for j in range(n) if i != j and conflicts.edge(i, j)]
    return ConflictMatrices(conflicts.node_entries(), edges)


def conflicts_to_json(inst: ProblemInstance, conflicts: ConflictMatrices | None = None) -> str:
    """Adjacency-list export used by ``--emit-conflicts``."""
    m = conflicts or materialize(inst.conflicts, inst.n_tasks)
    tids, aids = inst.task_ids, inst.actor_ids
    node: dict[str, list] = {}
    for i, j, a, b in m.node_entries():
        node.setdefault(str(tids[i]), []).append({"task": tids[j], "actor": aids[a], "other_actor": aids[b]})
    edge: dict[str, list] = {}
    for i, j in m.edge_entries():
        edge.setdefault(str(tids[i]), []).append(tids[j])
    return json.dumps({"schema": "laser/1", "node": node, "edge": edge}, indent=1, sort_keys=True)
