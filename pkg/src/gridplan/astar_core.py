"""A* engines on 8-connected grid maps.

Both engines run the same search; they differ only in data structures:

* :func:`plan_baseline_astar` keeps OPEN as a list that is re-sorted after
  every insertion, checks CLOSED by linear scan, re-scores the whole OPEN list
  whenever the target waypoint changes, and uses precise-only collision tests.
* :func:`plan_opt_astar` keeps OPEN as a binary heap and CLOSED as a hash set,
  re-scores only the ``topk`` best OPEN entries on a target change and the rest
  lazily when they surface, and uses the two-stage collision test.

Waypoints are visited in order. The search state is ``(cell, epoch)``: the
epoch counts how many targets have been reached, so a segment search never
reuses a cell closed while heading for an earlier target. Within an epoch the
key is ``f = g + h + wp_cost`` where ``wp_cost`` is the straight-line distance
to the current waypoint and ``h`` the straight-line length of the remaining
route from that waypoint to the goal. Both terms are admissible and consistent,
so every segment is optimal and the two engines expand identical sequences.
Entries left in OPEN by a finished epoch can never lead anywhere; they are
re-scored (eagerly or lazily) like everything else and dropped when popped.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .collision import (
    CollisionStats,
    Segment,
    aabb_of_barrier,
    detect_collision_precise,
    detect_collision_two_stage,
)
from .grid_map import GridMap, Point
from .metrics import MemoryMeter

SQRT2 = math.sqrt(2.0)
MOVES = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2),
)
DEFAULT_TOPK = 100
SNAP_RADIUS = 3
# a node this close to the active waypoint, with a clear line to it, counts as reaching it
SWITCH_RADIUS_SQ = 4
DEADLINE_CHECK_EVERY = 1024


class PlanningInputError(ValueError):
    pass


class SearchTimeout(RuntimeError):
    pass


@dataclass
class SearchNode:
    pos: Point
    g: float
    h: float
    wp_cost: float
    f: float
    stamp: int


@dataclass
class PlanResult:
    path: list[Point]
    length: float
    search_time_ns: int
    peak_memory_units: int
    nodes_expanded: int
    broad_rejects: int = 0
    precise_tests: int = 0
    waypoints: list[Point] = field(default_factory=list)
    lazy_updates: int = 0
    llm_latency_ns: int = 0
    degraded: bool = False

    @property
    def found(self) -> bool:
        return bool(self.path)


def euclid(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def heuristic_f(pos, g: float, goal, wp=None) -> float:
    """``g`` plus straight-line distance to the goal plus, if given, to the waypoint."""
    f = g + euclid(pos, goal)
    if wp is not None:
        f += euclid(pos, wp)
    return f


def path_length(path: Sequence) -> float:
    """Length of a polyline. Unit grid steps are summed as ``straight + diagonal * sqrt(2)``
    so equal-length paths compare exactly equal."""
    straight = diagonal = 0
    other = 0.0
    for (ax, ay), (bx, by) in zip(path, path[1:]):
        dx, dy = abs(bx - ax), abs(by - ay)
        if dx + dy == 1:
            straight += 1
        elif dx == 1 and dy == 1:
            diagonal += 1
        else:
            other += math.hypot(dx, dy)
    return straight + diagonal * SQRT2 + other


def check_endpoint(grid: GridMap, p, name: str) -> Point:
    p = Point(int(p[0]), int(p[1]))
    if not grid.in_bounds(p):
        raise PlanningInputError(f"{name} {tuple(p)} outside {grid.n}x{grid.n} map")
    if grid.blocked_flat[p.y * grid.n + p.x]:
        raise PlanningInputError(f"{name} {tuple(p)} is blocked")
    return p


def snap_waypoint(grid: GridMap, p, radius: int = SNAP_RADIUS) -> Point | None:
    """Clamp into the map, then move a blocked point to the nearest free cell
    within Chebyshev ``radius`` (ties: lower y, then lower x). None if none is free."""
    n = grid.n
    x = min(max(int(round(p[0])), 0), n - 1)
    y = min(max(int(round(p[1])), 0), n - 1)
    blocked = grid.blocked_flat
    if not blocked[y * n + x]:
        return Point(x, y)
    best = None
    for cy in range(max(0, y - radius), min(n, y + radius + 1)):
        for cx in range(max(0, x - radius), min(n, x + radius + 1)):
            if blocked[cy * n + cx]:
                continue
            d = (cx - x) ** 2 + (cy - y) ** 2
            if best is None or d < best[0]:
                best = (d, cx, cy)
    return None if best is None else Point(best[1], best[2])


def prepare_waypoints(grid: GridMap, waypoints: Sequence) -> list[Point]:
    out = []
    for p in waypoints:
        q = snap_waypoint(grid, p)
        if q is not None:
            out.append(q)
    return out


class _Route:
    """Target sequence (waypoints then goal) and the per-target key terms."""

    def __init__(self, waypoints: list[Point], goal: Point):
        self.targets = list(waypoints) + [goal]
        rest = [0.0] * len(self.targets)
        for i in range(len(self.targets) - 2, -1, -1):
            rest[i] = rest[i + 1] + euclid(self.targets[i], self.targets[i + 1])
        self.rest = rest
        self.index = 0

    @property
    def target(self) -> Point:
        return self.targets[self.index]

    @property
    def at_goal(self) -> bool:
        return self.index == len(self.targets) - 1

    def terms(self, x: int, y: int) -> tuple[float, float]:
        """(h, wp_cost) for a cell under the current target."""
        tx, ty = self.targets[self.index]
        d = math.hypot(x - tx, y - ty)
        if self.at_goal:
            return d, 0.0
        return self.rest[self.index], d


def _reconstruct(parent: dict, sid: int, n: int) -> list[Point]:
    nn = n * n
    cells = []
    while sid is not None:
        c = sid % nn
        cells.append(Point(c % n, c // n))
        sid = parent[sid]
    cells.reverse()
    # drop the duplicate cell at each epoch switch
    path = [cells[0]]
    for p in cells[1:]:
        if p != path[-1]:
            path.append(p)
    return path


def _deadline_hit(deadline: float | None) -> bool:
    return deadline is not None and time.monotonic() > deadline


def _near_target(x, y, target) -> bool:
    return (x - target[0]) ** 2 + (y - target[1]) ** 2 <= SWITCH_RADIUS_SQ


def _skip_to_reached(route: _Route, closed_has: Callable[[int], bool], base: int, n: int) -> int | None:
    """After an epoch runs dry every reachable cell is closed with its exact cost;
    return the index of the first later target among them."""
    for j in range(route.index + 1, len(route.targets)):
        t = route.targets[j]
        if closed_has(base + t.y * n + t.x):
            return j
    return None


def plan_opt_astar(
    grid: GridMap,
    start,
    goal,
    waypoints: Sequence = (),
    *,
    topk: int = DEFAULT_TOPK,
    deadline: float | None = None,
    observer: Callable[[SearchNode, int], None] | None = None,
) -> PlanResult:
    n = grid.n
    nn = n * n
    start = check_endpoint(grid, start, "start")
    goal = check_endpoint(grid, goal, "goal")
    wps = prepare_waypoints(grid, waypoints)
    route = _Route(wps, goal)
    blocked = grid.blocked_flat
    barriers = grid.barriers
    boxes = [aabb_of_barrier(b) for b in barriers]
    stats = CollisionStats()
    meter = MemoryMeter()
    heappush, heappop = heapq.heappush, heapq.heappop

    t0 = time.perf_counter_ns()
    open_heap: list[tuple] = []
    closed: set[int] = set()
    best_g: dict[int, float] = {}
    parent: dict[int, int | None] = {}
    epoch = 0
    seq = 0
    expanded = 0
    lazy = 0
    goal_sid = None

    def rescore(entry):
        _, _, s, sid, g, _ = entry
        c = sid % nn
        h, w = route.terms(c % n, c // n)
        return (g + h + w, h + w, s, sid, g, epoch)

    def push_source(cell: Point, g: float, prev: int | None):
        nonlocal seq
        sid = epoch * nn + cell.y * n + cell.x
        parent[sid] = prev
        best_g[sid] = g
        h, w = route.terms(cell.x, cell.y)
        heappush(open_heap, (g + h + w, h + w, seq, sid, g, epoch))
        seq += 1

    push_source(start, 0.0, None)
    while True:
        while open_heap:
            entry = heappop(open_heap)
            f, heur, _, sid, g, stamp = entry
            if stamp != epoch:
                # Case 2: stale key, refresh against the current target and requeue
                heappush(open_heap, rescore(entry))
                lazy += 1
                continue
            if sid // nn != epoch or sid in closed or g > best_g[sid]:
                continue
            closed.add(sid)
            expanded += 1
            cell = sid % nn
            x, y = cell % n, cell // n
            if observer is not None:
                h, w = route.terms(x, y)
                observer(SearchNode(Point(x, y), g, h, w, f, stamp), epoch)
            target = route.target
            reached = x == target[0] and y == target[1]
            if not reached and not route.at_goal and _near_target(x, y, target):
                reached = not detect_collision_two_stage(
                    Segment(Point(x, y), target), barriers, stats, boxes
                )
            if reached:
                if route.at_goal:
                    goal_sid = sid
                    break
                route.index += 1
                epoch += 1
                # Case 1: refresh only the k best queued keys
                top = [heappop(open_heap) for _ in range(min(topk, len(open_heap)))]
                for e in top:
                    heappush(open_heap, rescore(e))
                lazy += len(top)
                push_source(Point(x, y), g, sid)
                meter.observe(len(open_heap), len(closed))
                continue
            base = epoch * nn
            for dx, dy, cost in MOVES:
                nx, ny = x + dx, y + dy
                if nx < 0 or ny < 0 or nx >= n or ny >= n:
                    continue
                ncell = ny * n + nx
                if blocked[ncell]:
                    continue
                nsid = base + ncell
                if nsid in closed:
                    continue
                ng = g + cost
                if ng < best_g.get(nsid, math.inf):
                    best_g[nsid] = ng
                    parent[nsid] = sid
                    h, w = route.terms(nx, ny)
                    heappush(open_heap, (ng + h + w, h + w, seq, nsid, ng, epoch))
                    seq += 1
            meter.observe(len(open_heap), len(closed))
            if expanded % DEADLINE_CHECK_EVERY == 0 and _deadline_hit(deadline):
                raise SearchTimeout(f"opt A* exceeded its deadline after {expanded} expansions")
        if goal_sid is not None:
            break
        base = epoch * nn
        j = _skip_to_reached(route, closed.__contains__, base, n)
        if j is None:
            break
        t = route.targets[j]
        sid = base + t.y * n + t.x
        if j == len(route.targets) - 1:
            goal_sid = sid
            break
        route.index = j
        epoch += 1
        push_source(t, best_g[sid], sid)

    elapsed = time.perf_counter_ns() - t0
    path = _reconstruct(parent, goal_sid, n) if goal_sid is not None else []
    return PlanResult(
        path=path,
        length=path_length(path),
        search_time_ns=elapsed,
        peak_memory_units=meter.peak_units,
        nodes_expanded=expanded,
        broad_rejects=stats.broad_rejects,
        precise_tests=stats.precise_tests,
        waypoints=wps,
        lazy_updates=lazy,
    )


def plan_baseline_astar(
    grid: GridMap,
    start,
    goal,
    waypoints: Sequence = (),
    *,
    deadline: float | None = None,
    observer: Callable[[SearchNode, int], None] | None = None,
) -> PlanResult:
    n = grid.n
    nn = n * n
    start = check_endpoint(grid, start, "start")
    goal = check_endpoint(grid, goal, "goal")
    wps = prepare_waypoints(grid, waypoints)
    route = _Route(wps, goal)
    blocked = grid.blocked_flat
    barriers = grid.barriers
    stats = CollisionStats()
    meter = MemoryMeter()

    t0 = time.perf_counter_ns()
    open_list: list[tuple] = []  # kept sorted
    open_ids: list[int] = []  # same members, insertion order
    closed: list[int] = []
    closed_g: list[float] = []  # aligned with closed
    parent: dict[int, int | None] = {}
    epoch = 0
    seq = 0
    expanded = 0
    lazy = 0
    goal_sid = None

    def rescore(entry):
        _, _, s, sid, g, _ = entry
        c = sid % nn
        h, w = route.terms(c % n, c // n)
        return (g + h + w, h + w, s, sid, g, epoch)

    def insert(entry):
        open_list.append(entry)
        open_list.sort()
        open_ids.append(entry[3])

    def push_source(cell: Point, g: float, prev: int | None):
        nonlocal seq
        sid = epoch * nn + cell.y * n + cell.x
        parent[sid] = prev
        h, w = route.terms(cell.x, cell.y)
        insert((g + h + w, h + w, seq, sid, g, epoch))
        seq += 1

    push_source(start, 0.0, None)
    while True:
        while open_list:
            f, heur, _, sid, g, stamp = open_list.pop(0)
            open_ids.remove(sid)
            if sid // nn != epoch:
                continue
            closed.append(sid)
            closed_g.append(g)
            expanded += 1
            cell = sid % nn
            x, y = cell % n, cell // n
            if observer is not None:
                h, w = route.terms(x, y)
                observer(SearchNode(Point(x, y), g, h, w, f, stamp), epoch)
            target = route.target
            reached = x == target[0] and y == target[1]
            if not reached and not route.at_goal and _near_target(x, y, target):
                reached = not detect_collision_precise(Segment(Point(x, y), target), barriers, stats)
            if reached:
                if route.at_goal:
                    goal_sid = sid
                    break
                route.index += 1
                epoch += 1
                # the whole global OPEN list depends on the target: re-score all of it
                open_list[:] = [rescore(e) for e in open_list]
                open_list.sort()
                lazy += len(open_list)
                push_source(Point(x, y), g, sid)
                meter.observe(len(open_list), len(closed))
                continue
            base = epoch * nn
            for dx, dy, cost in MOVES:
                nx, ny = x + dx, y + dy
                if nx < 0 or ny < 0 or nx >= n or ny >= n:
                    continue
                ncell = ny * n + nx
                if blocked[ncell]:
                    continue
                nsid = base + ncell
                if nsid in closed:
                    continue
                ng = g + cost
                if nsid in open_ids:
                    i = next(i for i, e in enumerate(open_list) if e[3] == nsid)
                    if ng < open_list[i][4]:
                        h, w = route.terms(nx, ny)
                        open_list[i] = (ng + h + w, h + w, seq, nsid, ng, epoch)
                        open_list.sort()
                        parent[nsid] = sid
                        seq += 1
                    continue
                parent[nsid] = sid
                h, w = route.terms(nx, ny)
                insert((ng + h + w, h + w, seq, nsid, ng, epoch))
                seq += 1
            meter.observe(len(open_list), len(closed))
            if expanded % DEADLINE_CHECK_EVERY == 0 and _deadline_hit(deadline):
                raise SearchTimeout(f"baseline A* exceeded its deadline after {expanded} expansions")
        if goal_sid is not None:
            break
        base = epoch * nn
        j = _skip_to_reached(route, closed.__contains__, base, n)
        if j is None:
            break
        t = route.targets[j]
        sid = base + t.y * n + t.x
        if j == len(route.targets) - 1:
            goal_sid = sid
            break
        route.index = j
        epoch += 1
        push_source(t, closed_g[closed.index(sid)], sid)

    elapsed = time.perf_counter_ns() - t0
    path = _reconstruct(parent, goal_sid, n) if goal_sid is not None else []
    return PlanResult(
        path=path,
        length=path_length(path),
        search_time_ns=elapsed,
        peak_memory_units=meter.peak_units,
        nodes_expanded=expanded,
        broad_rejects=stats.broad_rejects,
        precise_tests=stats.precise_tests,
        waypoints=wps,
        lazy_updates=lazy,
    )


# -- oracle -------------------------------------------------------------------


@lru_cache(maxsize=4)
def _free_graph(grid: GridMap):
    n = grid.n
    free = ~grid.blocked
    idx = np.arange(n * n).reshape(n, n)
    rows, cols, weights = [], [], []
    # right, down, down-right, down-left; the graph is undirected
    for dy, dx, w in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, SQRT2), (1, -1, SQRT2)):
        ys = slice(0, n - dy)
        yt = slice(dy, n)
        xs = slice(max(0, -dx), n - max(0, dx))
        xt = slice(max(0, dx), n + min(0, dx))
        ok = free[ys, xs] & free[yt, xt]
        rows.append(idx[ys, xs][ok])
        cols.append(idx[yt, xt][ok])
        weights.append(np.full(int(ok.sum()), w))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.concatenate(weights)
    return coo_matrix((w, (r, c)), shape=(n * n, n * n)).tocsr()


def _oracle_search(grid: GridMap, start, goal):
    start = check_endpoint(grid, start, "start")
    goal = check_endpoint(grid, goal, "goal")
    n = grid.n
    dist, pred = _csgraph_dijkstra(
        _free_graph(grid), directed=False, indices=start.y * n + start.x, return_predecessors=True
    )
    return dist, pred, start, goal


def dijkstra_oracle(grid: GridMap, start, goal) -> float | None:
    """Exact shortest 8-connected path length, or None when the goal is unreachable."""
    dist, _, _, goal = _oracle_search(grid, start, goal)
    d = dist[goal.y * grid.n + goal.x]
    return None if math.isinf(d) else float(d)


def dijkstra_path(grid: GridMap, start, goal) -> list[Point] | None:
    dist, pred, start, goal = _oracle_search(grid, start, goal)
    n = grid.n
    g = goal.y * n + goal.x
    if math.isinf(dist[g]):
        return None
    cells = [g]
    while cells[-1] != start.y * n + start.x:
        cells.append(int(pred[cells[-1]]))
    return [Point(c % n, c // n) for c in reversed(cells)]
