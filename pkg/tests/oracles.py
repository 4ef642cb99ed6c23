"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

from laser.model import INF, Eta


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for idx in range(len(part)):
            yield part[:idx] + [[first] + part[idx]] + part[idx + 1:]
        yield [[first]] + part


def fixpoint_times(inst, assign, seqs, levels_of, temporal, horizon):
    """Earliest starts by plain repeated relaxation of each constraint as written."""
    n = inst.n_tasks
    d = [inst.tasks[i].durations[assign[i]] for i in range(n)]
    s = [0] * n
    origin_upper = []
    rules = []
    for c in temporal:
        ou = d[c.u] if (c.u is not None and c.eta_u is Eta.END) else 0
        ov = d[c.v] if c.eta_v is Eta.END else 0
        if c.u is None:
            s[c.v] = max(s[c.v], c.lower - ov)
            if c.upper != INF:
                origin_upper.append((c.v, c.upper - ov))
            continue
        rules.append((c.u, c.v, c.lower + ou - ov))
        if c.upper != INF:
            rules.append((c.v, c.u, -c.upper + ov - ou))
    for k, seq in seqs.items():
        for a, b in zip(seq, seq[1:]):
            rules.append((a, b, d[a] + inst.rho(k, a, b)))
    lower_tasks = [[i for i in range(n) if levels_of[i] < levels_of[j]] for j in range(n)]
    while True:
        changed = False
        for u, v, w in rules:
            if s[u] + w > s[v]:
                s[v] = s[u] + w
                changed = True
        for j in range(n):
            if lower_tasks[j]:
                need = max(s[i] + d[i] for i in lower_tasks[j])
                if need > s[j]:
                    s[j] = need
                    changed = True
        if max(s) > horizon:
            return None
        if not changed:
            break
    for v, cap in origin_upper:
        if s[v] > cap:
            return None
    return s, [s[i] + d[i] for i in range(n)]


def brute_force_optimum(inst, lam=1.0, temporal=None, horizon=None, relax_edges=False):
    """Minimum of C_max + lam * L_max over every assignment, level map and sequence.

    Levels are enumerated as ordered set partitions (compact level indices;
    any gap in level numbering only raises L_max). Level monotonicity forces
    each actor's sequence to be sorted by level, so sequences are the
    concatenations of per-(level, actor) permutations. Returns None when no
    outcome is feasible.
    """
    from laser.stn import trivial_horizon

    n = inst.n_tasks
    temporal = inst.buffered_temporal() if temporal is None else temporal
    horizon = trivial_horizon(inst) if horizon is None else horizon
    best = None
    caps = [sorted(t.durations) for t in inst.tasks]
    conf = inst.conflicts
    for assign in itertools.product(*caps):
        for part in set_partitions(list(range(n))):
            ok = True
            for block in part:
                for i, j in itertools.combinations(block, 2):
                    if conf.node(i, j, assign[i], assign[j]):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                continue
            for order in itertools.permutations(part):
                levels_of = {}
                for lvl, block in enumerate(order):
                    for i in block:
                        levels_of[i] = lvl
                per_level_actor = []
                for block in order:
                    for k in range(inst.n_actors):
                        mine = [i for i in block if assign[i] == k]
                        per_level_actor.append((k, list(itertools.permutations(mine))))
                for combo in itertools.product(*(p for _, p in per_level_actor)):
                    seqs = {k: [] for k in range(inst.n_actors)}
                    for (k, _), chunk in zip(per_level_actor, combo):
                        seqs[k].extend(chunk)
                    if not relax_edges and any(
                        levels_of[a] == levels_of[b] and conf.edge(a, b)
                        for seq in seqs.values() for a, b in zip(seq, seq[1:])
                    ):
                        continue
                    t = fixpoint_times(inst, assign, seqs, levels_of, temporal, horizon)
                    if t is None:
                        continue
                    obj = max(t[1]) + lam * (len(order) - 1)
                    if best is None or obj < best:
                        best = obj
    return best


def brute_force_tsp_path(points, start=None):
    """Shortest open path visiting all points (optionally from a fixed start point)."""
    best = math.inf
    best_order = None
    for perm in itertools.permutations(range(len(points))):
        length = math.dist(start, points[perm[0]]) if start is not None else 0.0
        for a, b in zip(perm, perm[1:]):
            length += math.dist(points[a], points[b])
        if length < best:
            best, best_order = length, perm
    return best, list(best_order)


def supercover_oracle(p0, p1):
    """Cells whose closed square meets the segment, by clipping the segment against every cell in its bounding box."""
    cells = set()
    x0, y0 = p0
    x1, y1 = p1
    for cx in range(math.floor(min(x0, x1)) - 1, math.floor(max(x0, x1)) + 2):
        for cy in range(math.floor(min(y0, y1)) - 1, math.floor(max(y0, y1)) + 2):
            if _segment_meets_box(x0, y0, x1, y1, cx, cy, cx + 1, cy + 1):
                cells.add((cx, cy))
    return cells


def _segment_meets_box(x0, y0, x1, y1, xmin, ymin, xmax, ymax):
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in ((-dx, x0 - xmin), (dx, xmax - x0), (-dy, y0 - ymin), (dy, ymax - y0)):
        if p == 0:
            if q < 0:
                return False
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return False
    return True
