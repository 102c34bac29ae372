"""From prompt to path: the waypoint pipeline with the offline stub.

Set LLM_BASE_URL and LLM_MODEL (and LLM_API_KEY if needed) and pass ``live``
as the first argument to use a chat-completion endpoint instead.
"""
import sys

from gridplan import (
    ChatCompletionClient,
    StubClient,
    default_select,
    dijkstra_oracle,
    generate_map,
    plan_illm,
    plan_llm_astar,
    render_prompt,
)
from gridplan.grid_map import default_endpoints
from gridplan.llm_waypoints import query_waypoints

live = len(sys.argv) > 1 and sys.argv[1] == "live"
n = 200
grid = generate_map(n, "cross", seed=1_000_003)
start, goal = default_endpoints(n)
client = ChatCompletionClient.from_env() if live else StubClient(seed=7)

# %% The prompt: fixed template, few-shot examples (none yet), then the task
bundle = render_prompt(None, grid, start, goal)
print(bundle.text[-400:])
print("...")

# %% What the model (or stub) answers, and what survives selection
ws = query_waypoints(client, bundle)
interior = ws.interior(start, goal)
print("raw answer:", ws.raw_text.strip().splitlines()[-1])
print("interior waypoints:", [tuple(p) for p in interior])
print("selected (two nearest the start):", [tuple(p) for p in default_select(interior, start)])

# %% All waypoints on the baseline engine, versus the selected ones on the optimized engine
optimum = dijkstra_oracle(grid, start, goal)
for name, planner in (("LLM-A*", plan_llm_astar), ("iLLM-A*", plan_illm)):
    res = planner(grid, start, goal, client)
    print(
        f"{name:<8} {100 * res.length / optimum:6.2f}% of optimal  "
        f"search {res.search_time_ns / 1e6:7.1f} ms  memory {res.peak_memory_units}  "
        f"model call {res.llm_latency_ns / 1e6:.1f} ms"
    )

# %% Perfect waypoints cost nothing: with zero jitter the result is optimal
exact = plan_illm(grid, start, goal, StubClient(seed=7, radius=0))
print(f"zero jitter: {100 * exact.length / optimum:.6f}%")
