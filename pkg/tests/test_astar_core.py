import math
import time

import numpy as np
import pytest

from gridplan.astar_core import (
    DEFAULT_TOPK,
    SQRT2,
    PlanningInputError,
    SearchTimeout,
    dijkstra_oracle,
    dijkstra_path,
    euclid,
    heuristic_f,
    path_length,
    plan_baseline_astar,
    plan_opt_astar,
    snap_waypoint,
)
from gridplan.collision import Segment, detect_collision_two_stage
from gridplan.grid_map import GridMap, Point, default_endpoints, generate_map

from conftest import hbar, vbar

ENGINES = (plan_baseline_astar, plan_opt_astar)


def test_heuristic_examples():
    assert heuristic_f((0, 0), 0, (3, 4)) == 5.0
    assert heuristic_f((0, 0), 2, (3, 4), (0, 3)) == 10.0
    assert heuristic_f((1, 1), 3, (4, 5), (1, 1)) == 3 + 5.0


def test_path_length_is_canonical():
    assert path_length([(0, 0), (1, 1), (2, 1)]) == 1 + SQRT2
    assert path_length([(0, 0)]) == 0.0
    assert path_length([(0, 0), (3, 4)]) == 5.0
    # same step multiset in a different order gives a bit-identical length
    assert path_length([(0, 0), (1, 0), (2, 1)]) == path_length([(0, 0), (1, 1), (2, 1)])


@pytest.mark.parametrize("engine", ENGINES)
def test_empty_map_diagonal(engine):
    res = engine(GridMap(10), (0, 0), (9, 9))
    assert res.length == pytest.approx(9 * math.sqrt(2))
    assert res.path[0] == (0, 0) and res.path[-1] == (9, 9)


@pytest.mark.parametrize("engine", ENGINES)
def test_start_equals_goal(engine):
    res = engine(GridMap(10), (4, 4), (4, 4))
    assert res.path == [Point(4, 4)] and res.length == 0.0


@pytest.mark.parametrize("engine", ENGINES)
def test_seed3_random_map_matches_oracle(engine):
    grid = generate_map(50, "random", 3)
    start, goal = default_endpoints(50)
    assert engine(grid, start, goal).length == pytest.approx(dijkstra_oracle(grid, start, goal), abs=1e-9)


@pytest.mark.parametrize("engine", ENGINES)
def test_detour_around_wall(engine, wall_map):
    res = engine(wall_map, (2, 2), (18, 2))
    assert res.length == pytest.approx(dijkstra_oracle(wall_map, (2, 2), (18, 2)))
    assert any(p.y >= 17 for p in res.path)


@pytest.mark.parametrize("engine", ENGINES)
def test_input_errors(engine, wall_map):
    with pytest.raises(PlanningInputError):
        engine(wall_map, (10, 3), (18, 2))
    with pytest.raises(PlanningInputError):
        engine(wall_map, (2, 2), (20, 2))
    with pytest.raises(ValueError):
        engine(wall_map, (-1, 2), (3, 3))


@pytest.mark.parametrize("engine", ENGINES)
def test_unreachable_gives_empty_path(engine):
    grid = GridMap(20, (vbar(10, 0, 19),))
    res = engine(grid, (2, 2), (18, 2))
    assert not res.found and res.path == [] and res.length == 0.0
    assert dijkstra_oracle(grid, (2, 2), (18, 2)) is None
    assert dijkstra_path(grid, (2, 2), (18, 2)) is None


def test_oracle_small_cases():
    assert dijkstra_oracle(GridMap(5), (0, 0), (4, 0)) == 4.0
    path = dijkstra_path(GridMap(5), (0, 0), (4, 4))
    assert path[0] == (0, 0) and path[-1] == (4, 4) and len(path) == 5


def _assert_valid_path(grid, res, start, goal):
    assert res.path[0] == start and res.path[-1] == goal
    for a, b in zip(res.path, res.path[1:]):
        assert max(abs(a.x - b.x), abs(a.y - b.y)) == 1
        assert not detect_collision_two_stage(Segment(a, b), grid.barriers)
    assert not any(grid.blocked[p.y, p.x] for p in res.path)
    assert res.length == pytest.approx(sum(euclid(a, b) for a, b in zip(res.path, res.path[1:])))


@pytest.mark.parametrize("seed", range(30))
def test_engines_match_oracle_without_waypoints(seed):
    grid = generate_map(50, ("random", "cross", "bars")[seed % 3], seed)
    start, goal = default_endpoints(50)
    optimum = dijkstra_oracle(grid, start, goal)
    base = plan_baseline_astar(grid, start, goal)
    opt = plan_opt_astar(grid, start, goal)
    if optimum is None:
        assert not base.found and not opt.found
        return
    assert abs(base.length - optimum) <= 1e-9 and abs(opt.length - optimum) <= 1e-9
    assert base.path == opt.path and base.nodes_expanded == opt.nodes_expanded
    _assert_valid_path(grid, opt, start, goal)


def _random_waypoints(rng, n, k):
    return [Point(*(int(v) for v in rng.integers(0, n, size=2))) for _ in range(k)]


@pytest.mark.parametrize("seed", range(20))
def test_engines_agree_with_waypoints(seed):
    rng = np.random.default_rng(seed)
    grid = generate_map(50, "random", 100 + seed)
    start, goal = default_endpoints(50)
    wps = _random_waypoints(rng, 50, int(rng.integers(1, 5)))
    base = plan_baseline_astar(grid, start, goal, wps)
    opt = plan_opt_astar(grid, start, goal, wps)
    assert base.found == opt.found
    assert base.length == opt.length
    if opt.found:
        _assert_valid_path(grid, opt, start, goal)
        assert opt.length >= dijkstra_oracle(grid, start, goal) - 1e-9


def test_waypoint_on_optimal_path_keeps_optimum():
    grid = generate_map(100, "random", 9)
    start, goal = default_endpoints(100)
    path = dijkstra_path(grid, start, goal)
    wps = [path[len(path) // 4], path[len(path) // 2], path[3 * len(path) // 4]]
    for engine in ENGINES:
        assert engine(grid, start, goal, wps).length == pytest.approx(dijkstra_oracle(grid, start, goal), abs=1e-9)


def test_waypoint_route_is_optimal_per_segment():
    grid = generate_map(50, "random", 21)
    start, goal = default_endpoints(50)
    wp = Point(40, 8)
    res = plan_opt_astar(grid, start, goal, [wp])
    expected = dijkstra_oracle(grid, start, wp) + dijkstra_oracle(grid, wp, goal)
    # the switch may happen up to two cells early, which can only shorten the route
    assert res.length <= expected + 1e-9
    assert res.length >= dijkstra_oracle(grid, start, goal) - 1e-9


def test_unreachable_waypoint_is_skipped():
    # the waypoint sits inside a sealed pocket; the route ignores it
    walls = (hbar(30, 30, 40), hbar(40, 30, 40), vbar(30, 31, 39), vbar(40, 31, 39))
    grid = GridMap(50, walls)
    start, goal = (2, 2), (47, 47)
    for engine in ENGINES:
        res = engine(grid, start, goal, [(35, 35)])
        assert res.found
        assert res.length == pytest.approx(dijkstra_oracle(grid, start, goal))


def test_snap_waypoint():
    grid = GridMap(20, (hbar(5, 0, 19),))
    assert snap_waypoint(grid, (4, 5)) in {(4, 4), (4, 6)}
    assert snap_waypoint(grid, (50, -3)) == (19, 0)
    assert snap_waypoint(grid, (3.6, 2.2)) == (4, 2)
    solid = GridMap(20, tuple(hbar(y, 0, 19) for y in range(0, 9)))
    assert snap_waypoint(solid, (5, 1)) is None


def test_blocked_waypoint_is_snapped_and_used():
    grid = GridMap(50, (hbar(25, 10, 40),))
    res = plan_opt_astar(grid, (2, 2), (47, 47), [(25, 25)])
    assert res.found and res.waypoints and not grid.blocked[res.waypoints[0].y, res.waypoints[0].x]


@pytest.mark.parametrize("engine", ENGINES)
def test_expanded_keys_are_current(engine):
    grid = generate_map(100, "random", 4)
    start, goal = default_endpoints(100)
    seen = []

    def watch(node, epoch):
        assert node.stamp == epoch
        assert node.f == pytest.approx(node.g + node.h + node.wp_cost)
        assert node.g >= 0 and node.h >= 0 and node.wp_cost >= 0
        seen.append(epoch)

    engine(grid, start, goal, [(30, 60), (70, 40)], observer=watch)
    assert seen == sorted(seen) and seen[-1] >= 1


def test_lazy_updates_happen_on_switch():
    grid = generate_map(100, "random", 4)
    start, goal = default_endpoints(100)
    res = plan_opt_astar(grid, start, goal, [(30, 60), (70, 40)])
    assert res.lazy_updates > 0
    assert plan_opt_astar(grid, start, goal).lazy_updates == 0


@pytest.mark.parametrize("topk", [1, 5, DEFAULT_TOPK, 10_000])
def test_topk_does_not_change_result(topk):
    grid = generate_map(100, "random", 12)
    start, goal = default_endpoints(100)
    wps = [(20, 70), (60, 30)]
    ref = plan_baseline_astar(grid, start, goal, wps)
    res = plan_opt_astar(grid, start, goal, wps, topk=topk)
    assert res.length == ref.length and res.path == ref.path


def test_memory_counters_are_reproducible():
    grid = generate_map(100, "random", 2)
    start, goal = default_endpoints(100)
    a = plan_opt_astar(grid, start, goal, [(40, 40)])
    b = plan_opt_astar(grid, start, goal, [(40, 40)])
    assert a.peak_memory_units == b.peak_memory_units > 0
    assert a.nodes_expanded == b.nodes_expanded


def test_opt_uses_fewer_precise_tests():
    grid = generate_map(200, "random", 2)
    start, goal = default_endpoints(200)
    path = dijkstra_path(grid, start, goal)
    wps = [Point(p.x + 1, p.y) for p in path[30:-30:40]]
    base = plan_baseline_astar(grid, start, goal, wps)
    opt = plan_opt_astar(grid, start, goal, wps)
    assert opt.precise_tests <= base.precise_tests
    assert opt.broad_rejects > 0


@pytest.mark.parametrize("engine", ENGINES)
def test_deadline(engine):
    grid = generate_map(150, "random", 1)
    start, goal = default_endpoints(150)
    with pytest.raises(SearchTimeout):
        engine(grid, start, goal, deadline=time.monotonic() - 1)
