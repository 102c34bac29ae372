"""Baseline A* against the optimized engine on one benchmark map.

Run with ``python3 demos/01_engines.py``. Takes a few seconds.
"""
import numpy as np

from gridplan import dijkstra_oracle, generate_map, plan_baseline_astar, plan_opt_astar
from gridplan.grid_map import default_endpoints

# %% A 150x150 random map: 3 * (150/50)^2 = 27 barriers
n = 150
grid = generate_map(n, "random", seed=1_000_000)
start, goal = default_endpoints(n)
print(f"{len(grid.barriers)} barriers, {int(grid.blocked.sum())} blocked cells")

# %% A coarse picture of the map: '#' blocked, 'S'/'G' the endpoints
step = 5
rows = []
for y in range(n - 1, -1, -step):
    row = "".join("#" if grid.blocked[y, x : x + step].any() else "." for x in range(0, n, step))
    rows.append(row)
rows[-1 - start.y // step] = "S" + rows[-1 - start.y // step][1:]
rows[-1 - goal.y // step] = rows[-1 - goal.y // step][:-1] + "G"
print("\n".join(rows))

# %% Same search, different containers
base = plan_baseline_astar(grid, start, goal)
opt = plan_opt_astar(grid, start, goal)
optimum = dijkstra_oracle(grid, start, goal)
print(f"oracle length      {optimum:.6f}")
for name, res in (("baseline", base), ("opt", opt)):
    print(
        f"{name:<9} length {res.length:.6f}  time {res.search_time_ns / 1e6:8.1f} ms  "
        f"expanded {res.nodes_expanded}  peak memory units {res.peak_memory_units}"
    )
print(f"speedup {base.search_time_ns / opt.search_time_ns:.1f}x, identical paths: {base.path == opt.path}")

# %% Waypoints: keys depend on the current target, so a switch makes queued keys stale.
# The top-k refresh and lazy re-scoring on pop never change the answer, only the work.
wps = [(60, 75), (100, 120)]
for k in (1, 100, 10_000):
    res = plan_opt_astar(grid, start, goal, wps, topk=k)
    print(f"topk={k:<6} length {res.length:.4f}  expanded {res.nodes_expanded}  re-scored entries {res.lazy_updates}")

# %% Line-of-sight checks near a waypoint: the AABB filter skips most precise tests
guided = plan_opt_astar(grid, start, goal, wps)
print(f"broad-phase rejects {guided.broad_rejects}, precise tests {guided.precise_tests}")
lengths = np.array([plan_opt_astar(grid, start, goal, [w]).length for w in wps])
print("single-waypoint routes (% of optimum):", np.round(100 * lengths / optimum, 2))
