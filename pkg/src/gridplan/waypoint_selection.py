"""Choosing which model-proposed waypoints the planner actually visits."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .astar_core import dijkstra_oracle, plan_opt_astar
from .grid_map import GridMap, Point, default_endpoints
from .llm_waypoints import LlmError, StubClient, query_waypoints, render_prompt
from .metrics import final_scores, normalize_score, path_length_percent

POLICIES = ("start", "goal", "uniform", "random")
DEFAULT_MAX = 2


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str
    k: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown selection policy {self.kind!r}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")


def _dist2(a, b) -> int:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def _nearest(points: Sequence, anchor, k: int) -> list[int]:
    order = sorted(range(len(points)), key=lambda i: (_dist2(points[i], anchor), i))
    return sorted(order[:k])


def select_waypoints(interior: Sequence, start, goal, policy: SelectionPolicy) -> list[Point]:
    """Pick ``policy.k`` interior waypoints; the result keeps the input order."""
    m = len(interior)
    if m == 0:
        return []
    k = min(policy.k, m)
    if policy.kind == "start":
        idx = _nearest(interior, start, k)
    elif policy.kind == "goal":
        idx = _nearest(interior, goal, k)
    elif policy.kind == "uniform":
        idx = [(m - 1) // 2] if k == 1 else [i * (m - 1) // (k - 1) for i in range(k)]
    else:
        rng = np.random.default_rng(policy.seed)
        idx = sorted(int(i) for i in rng.choice(m, size=k, replace=False))
    return [Point(*interior[i]) for i in idx]


def default_select(interior: Sequence, start) -> list[Point]:
    """All waypoints if there are at most two, otherwise the two closest to ``start``."""
    if len(interior) <= DEFAULT_MAX:
        return [Point(*p) for p in interior]
    return select_waypoints(interior, start, start, SelectionPolicy("start", DEFAULT_MAX))


@dataclass
class StudyRow:
    policy: str
    k: int
    memory_score: float
    time_score: float
    path_length_pct: float
    mean_time_s: float
    mean_memory_units: float
    runs: int


def run_selection_study(
    maps: Iterable[GridMap],
    clients: Callable[[int], object] | None = None,
    policies: Sequence[str] = POLICIES,
    ks: Sequence[int] = (1, 2, 3, 4),
    trials: int = 30,
    repo=None,
) -> list[StudyRow]:
    """Plan every (map, trial) with each (policy, k) and score the combinations.

    ``clients(trial)`` returns the waypoint source for a trial (default: the
    offline stub seeded with the trial index). The same waypoints are shared by
    all combinations of one (map, trial). Time and memory are min-max
    normalised per map size across combinations and averaged over sizes;
    path length is reported as a percentage of optimal (lower is better).
    """
    if clients is None:
        clients = lambda t: StubClient(seed=t)  # noqa: E731
    combos = [(p, k) for p in policies for k in ks]
    # (combo, n) -> lists of raw metrics
    times: dict = defaultdict(list)
    mems: dict = defaultdict(list)
    pcts: dict = defaultdict(list)
    for grid in maps:
        start, goal = default_endpoints(grid.n)
        optimum = dijkstra_oracle(grid, start, goal)
        if not optimum:
            continue
        for t in range(trials):
            try:
                ws = query_waypoints(clients(t), render_prompt(repo, grid, start, goal))
            except LlmError:
                continue
            interior = ws.interior(start, goal)
            for combo in combos:
                chosen = select_waypoints(interior, start, goal, SelectionPolicy(combo[0], combo[1], seed=t))
                res = plan_opt_astar(grid, start, goal, chosen)
                if not res.found:
                    continue
                key = (combo, grid.n)
                times[key].append(res.search_time_ns / 1e9)
                mems[key].append(res.peak_memory_units)
                pcts[key].append(path_length_percent(res.length, optimum))

    sizes = sorted({n for (_, n) in times})
    rows = []
    for combo in combos:
        t_norm, m_norm, all_pct, all_t, all_m = {}, {}, [], [], []
        for n in sizes:
            if (combo, n) not in times:
                continue
            mean_t = {c: np.mean(times[(c, n)]) for c in combos if (c, n) in times}
            mean_m = {c: np.mean(mems[(c, n)]) for c in combos if (c, n) in mems}
            t_norm[n] = normalize_score(mean_t[combo], min(mean_t.values()), max(mean_t.values()))
            m_norm[n] = normalize_score(mean_m[combo], min(mean_m.values()), max(mean_m.values()))
            all_pct += pcts[(combo, n)]
            all_t += times[(combo, n)]
            all_m += mems[(combo, n)]
        if not t_norm:
            continue
        rows.append(
            StudyRow(
                policy=combo[0],
                k=combo[1],
                memory_score=final_scores(m_norm),
                time_score=final_scores(t_norm),
                path_length_pct=float(np.mean(all_pct)),
                mean_time_s=float(np.mean(all_t)),
                mean_memory_units=float(np.mean(all_m)),
                runs=len(all_pct),
            )
        )
    return rows


def write_study_csv(rows: Sequence[StudyRow], path) -> None:
    fields = list(StudyRow.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({f: getattr(r, f) for f in fields})
