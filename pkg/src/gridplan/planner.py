"""End-to-end planners: prompt, waypoints, selection, then A*."""
from __future__ import annotations

import logging
import time
from typing import Callable, Sequence

from .astar_core import (
    DEFAULT_TOPK,
    PlanResult,
    check_endpoint,
    plan_baseline_astar,
    plan_opt_astar,
)
from .grid_map import GridMap, Point
from .llm_waypoints import LlmClient, LlmError, query_waypoints, render_prompt
from .waypoint_selection import default_select

log = logging.getLogger(__name__)


def _ask(client: LlmClient, repo, grid: GridMap, start, goal) -> tuple[list[Point] | None, int]:
    """Interior waypoints from the model, or None when it failed; plus call latency in ns."""
    t0 = time.perf_counter_ns()
    try:
        ws = query_waypoints(client, render_prompt(repo, grid, start, goal))
    except LlmError as exc:
        log.warning("waypoint generation failed, planning without waypoints: %s", exc)
        return None, time.perf_counter_ns() - t0
    return ws.interior(start, goal), time.perf_counter_ns() - t0


def plan_illm(
    grid: GridMap,
    start,
    goal,
    client: LlmClient,
    repo=None,
    *,
    select: Callable[[Sequence, Point], list[Point]] = default_select,
    topk: int = DEFAULT_TOPK,
    deadline: float | None = None,
) -> PlanResult:
    """Few-shot prompt from ``repo``, at most two selected waypoints, Opt-A*.

    ``search_time_ns`` covers the search only; the model call is in ``llm_latency_ns``.
    """
    start = check_endpoint(grid, start, "start")
    goal = check_endpoint(grid, goal, "goal")
    interior, latency = _ask(client, repo, grid, start, goal)
    chosen = [] if interior is None else select(interior, start)
    res = plan_opt_astar(grid, start, goal, chosen, topk=topk, deadline=deadline)
    res.llm_latency_ns = latency
    res.degraded = interior is None
    return res


def plan_llm_astar(
    grid: GridMap,
    start,
    goal,
    client: LlmClient,
    repo=None,
    *,
    deadline: float | None = None,
) -> PlanResult:
    """Every parsed waypoint, baseline A* with precise-only collision tests."""
    start = check_endpoint(grid, start, "start")
    goal = check_endpoint(grid, goal, "goal")
    interior, latency = _ask(client, repo, grid, start, goal)
    res = plan_baseline_astar(grid, start, goal, interior or [], deadline=deadline)
    res.llm_latency_ns = latency
    res.degraded = interior is None
    return res
