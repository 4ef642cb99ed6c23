"""Open-path routing for one actor on one level.

Nearest-neighbour construction followed by 2-opt and or-opt moves. The
path may start at a fixed anchor (where the actor stopped on the previous
level); its end is pulled toward the actor's next-level work by adding the
distance from the last point to the nearest target. Consecutive pairs
flagged by ``forbidden`` are never created by a move; points that cannot
be routed without one are bounced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Point = tuple[float, float]

EPS = 1e-9


@dataclass
class RouteResult:
    order: list[int]
    bounced: list[int]
    cost: float
    length: float


def _tail(points: np.ndarray, targets: Sequence[Point] | None) -> np.ndarray:
    if not targets:
        return np.zeros(len(points))
    tg = np.asarray(targets, dtype=float)
    return np.sqrt(((points[:, None, :] - tg[None, :, :]) ** 2).sum(axis=2)).min(axis=1)


def path_cost(D, order, start_cost, tail) -> float:
    if not order:
        return 0.0
    c = start_cost[order[0]] + tail[order[-1]]
    for a, b in zip(order, order[1:]):
        c += D[a, b]
    return float(c)


def route(points: Sequence[Point], anchor: Point | None = None, targets: Sequence[Point] | None = None,
          forbidden: Callable[[int, int], bool] | None = None, max_rounds: int = 100) -> RouteResult:
    """Route through ``points`` (indices into the list); ``forbidden`` is assumed symmetric."""
    n = len(points)
    if n == 0:
        return RouteResult([], [], 0.0, 0.0)
    P = np.asarray(points, dtype=float)
    D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
    if anchor is not None:
        start_cost = np.sqrt(((P - np.asarray(anchor, dtype=float)) ** 2).sum(axis=1))
    else:
        start_cost = np.zeros(n)
    tail = _tail(P, targets)
    bad = forbidden or (lambda a, b: False)

    if n <= 12:
        starts = list(range(n))
    elif anchor is not None:
        starts = [int(i) for i in np.argsort(start_cost, kind="stable")[:3]]
    else:
        axis = P - P.mean(axis=0)
        _, _, vt = np.linalg.svd(axis, full_matrices=False)
        proj = axis @ vt[0]
        starts = sorted({int(np.argmin(proj)), int(np.argmax(proj))})
    best = None
    for s in starts:
        order = _nearest_neighbour(D, s, bad)
        order = _improve(D, order, start_cost, tail, bad, anchor is not None, max_rounds)
        c = path_cost(D, order, start_cost, tail)
        if best is None or c < best[0] - EPS:
            best = (c, order)
    order = best[1]
    order, bounced = _repair(D, order, start_cost, tail, bad)
    cost = path_cost(D, order, start_cost, tail)
    length = cost - (float(tail[order[-1]]) if order else 0.0)
    return RouteResult(order, bounced, cost, length)


def _nearest_neighbour(D, start, bad) -> list[int]:
    n = len(D)
    left = set(range(n))
    left.discard(start)
    order = [start]
    while left:
        cur = order[-1]
        ranked = sorted(left, key=lambda j: (D[cur, j], j))
        nxt = next((j for j in ranked if not bad(cur, j)), ranked[0])
        order.append(nxt)
        left.discard(nxt)
    return order


def _improve(D, order, start_cost, tail, bad, anchored, max_rounds) -> list[int]:
    order = list(order)
    for _ in range(max_rounds):
        if not (_two_opt(D, order, start_cost, tail, bad, anchored) | _or_opt(D, order, start_cost, tail, bad, anchored)):
            break
    return order


def _two_opt(D, order, start_cost, tail, bad, anchored) -> bool:
    m = len(order)
    improved = False
    for i in range(m - 1):
        for j in range(i + 1, m):
            a = order[i - 1] if i > 0 else None
            b, c = order[i], order[j]
            d = order[j + 1] if j + 1 < m else None
            old = (D[a, b] if a is not None else (start_cost[b] if anchored else 0.0))
            new = (D[a, c] if a is not None else (start_cost[c] if anchored else 0.0))
            if d is not None:
                old += D[c, d]
                new += D[b, d]
            else:
                old += tail[c]
                new += tail[b]
            if new < old - EPS:
                if (a is not None and bad(a, c)) or (d is not None and bad(b, d)):
                    continue
                order[i:j + 1] = order[i:j + 1][::-1]
                improved = True
    return improved


def _or_opt(D, order, start_cost, tail, bad, anchored) -> bool:
    improved = False
    for seg_len in (1, 2, 3):
        i = 0
        while i + seg_len <= len(order):
            if len(order) <= seg_len:
                break
            if _try_move(D, order, i, seg_len, start_cost, tail, bad, anchored):
                improved = True
            else:
                i += 1
    return improved


def _try_move(D, order, i, L, start_cost, tail, bad, anchored) -> bool:
    seg = order[i:i + L]
    rest = order[:i] + order[i + L:]
    joined_bad = 0 < i < len(rest) and bad(rest[i - 1], rest[i])
    base = path_cost(D, order, start_cost, tail)
    removed = path_cost(D, rest, start_cost, tail)
    best = None
    for q in range(len(rest) + 1):
        prev = rest[q - 1] if q > 0 else None
        nxt = rest[q] if q < len(rest) else None
        for cand in ((seg[::-1],) if q == i else (seg, seg[::-1])):
            delta = 0.0
            if prev is None:
                if anchored:
                    delta += start_cost[cand[0]] - (start_cost[nxt] if nxt is not None else 0.0)
            else:
                delta += D[prev, cand[0]] - (D[prev, nxt] if nxt is not None else tail[prev])
            if nxt is None:
                delta += tail[cand[-1]]
            else:
                delta += D[cand[-1], nxt]
            for a, b in zip(cand, cand[1:]):
                delta += D[a, b]
            total = removed + delta
            if total < base - EPS and (best is None or total < best[0] - EPS):
                if (prev is not None and bad(prev, cand[0])) or (nxt is not None and bad(cand[-1], nxt)):
                    continue
                if joined_bad and q != i:
                    continue
                best = (total, q, cand)
    if best is None:
        return False
    _, q, cand = best
    order[:] = rest[:q] + list(cand) + rest[q:]
    return True


def _repair(D, order, start_cost, tail, bad) -> tuple[list[int], list[int]]:
    """Relocate or bounce the later point of every forbidden consecutive pair."""
    order = list(order)
    bounced = []
    budget = len(order) ** 2 + 1
    changed = True
    while changed:
        changed = False
        for pos in range(1, len(order)):
            if not bad(order[pos - 1], order[pos]):
                continue
            budget -= 1
            x = order.pop(pos)
            if budget < 0:
                bounced.append(x)
                changed = True
                break
            best = None
            for q in range(len(order) + 1):
                prev = order[q - 1] if q > 0 else None
                nxt = order[q] if q < len(order) else None
                if (prev is not None and bad(prev, x)) or (nxt is not None and bad(x, nxt)):
                    continue
                if prev is not None and nxt is not None and bad(prev, nxt):
                    continue
                c = path_cost(D, order[:q] + [x] + order[q:], start_cost, tail)
                if best is None or c < best[0]:
                    best = (c, q)
            if best is None:
                bounced.append(x)
            else:
                order.insert(best[1], x)
            changed = True
            break
    return order, bounced


def tour_length(points: Sequence[Point], order: Sequence[int], anchor: Point | None = None) -> float:
    total = math.dist(anchor, points[order[0]]) if anchor is not None and order else 0.0
    for a, b in zip(order, order[1:]):
        total += math.dist(points[a], points[b])
    return total
