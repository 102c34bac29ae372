"""Benchmark orchestration and report emission.

Each (method, n, scenario) cell runs ``trials`` solvable maps. Map seeds are
taken in order from the evaluation seed block, skipping maps where the goal is
unreachable, so every method sees the same maps. Memory is the deterministic
structure count from :class:`MemoryMeter`, never process RSS.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .astar_core import SearchTimeout, dijkstra_oracle, plan_baseline_astar, plan_opt_astar
from .grid_map import default_endpoints, generate_map
from .incremental_repo import FewShotRepo, train
from .llm_waypoints import ChatCompletionClient, StubClient
from .metrics import (
    CLOSED_ENTRY_BYTES,
    OPEN_ENTRY_BYTES,
    MemoryMeter,
    final_scores,
    normalize_score,
    path_length_percent,
)
from .planner import plan_illm, plan_llm_astar

__all__ = [
    "BenchConfig",
    "BenchReport",
    "MemoryMeter",
    "final_scores",
    "normalize_score",
    "path_length_percent",
    "run_benchmark",
    "write_report",
]

log = logging.getLogger(__name__)

METHODS = ("baseline", "opt", "llmastar", "illm")
SIZES = (50, 100, 150, 200, 250, 300, 350, 400, 450)
TIMING_COLUMNS = ("search_time_s_mean", "llm_latency_s_mean")
MISSING = "---"
# how far past the seed block start to look for solvable maps
SEED_SEARCH_LIMIT = 10_000


@dataclass
class BenchConfig:
    sizes: Sequence[int] = SIZES
    scenarios: Sequence[str] = ("random",)
    methods: Sequence[str] = METHODS
    trials: int = 30
    timeout_s: float = 600.0
    eval_seed_base: int = 1_000_000
    training_seed_base: int = 0
    training_maps: int = 0
    llm: str = "stub"
    stub_radius: int | None = None
    workers: int = 1
    # the admission gate's time term; expansions keep the report reproducible
    gate_time_measure: str = "expansions"

    def __post_init__(self):
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods: {sorted(bad)}")
        if self.llm not in ("stub", "live"):
            raise ValueError("llm must be 'stub' or 'live'")
        if self.llm == "live" and self.workers > 1:
            raise ValueError("the live client is only supported with workers=1")


@dataclass
class TrialRecord:
    method: str
    n: int
    scenario: str
    trial: int
    seed: int
    status: str  # ok | timeout | error | unreachable
    path_length_pct: float | None = None
    search_time_s: float | None = None
    memory_units: int | None = None
    nodes_expanded: int | None = None
    llm_latency_s: float | None = None
    degraded: bool = False
    error: str | None = None


@dataclass
class BenchReport:
    config: BenchConfig
    rows: list[dict]
    trials: list[TrialRecord]
    cdf: dict[str, list[float]]
    seeds: dict[str, object] = field(default_factory=dict)

    def header(self) -> dict:
        return {
            "memory_units": {
                "bytes_per_open_entry": OPEN_ENTRY_BYTES,
                "bytes_per_closed_entry": CLOSED_ENTRY_BYTES,
            },
            "seeds": self.seeds,
        }


def solvable_seeds(n: int, scenario: str, count: int, base: int) -> tuple[list[int], list[int]]:
    """First ``count`` seeds from ``base`` whose default start and goal are connected."""
    used, skipped = [], []
    for seed in range(base, base + SEED_SEARCH_LIMIT):
        if len(used) == count:
            break
        grid = generate_map(n, scenario, seed)
        start, goal = default_endpoints(n)
        (used if dijkstra_oracle(grid, start, goal) is not None else skipped).append(seed)
    if len(used) < count:
        raise RuntimeError(f"only {len(used)} solvable {scenario} maps of size {n} near seed {base}")
    return used, skipped


def _make_client(config: BenchConfig, seed: int):
    if config.llm == "live":
        return ChatCompletionClient.from_env()
    return StubClient(seed=seed, radius=config.stub_radius)


def _run_trial(task) -> TrialRecord:
    method, n, scenario, trial, seed, config, repo_items = task
    rec = TrialRecord(method, n, scenario, trial, seed, "ok")
    grid = generate_map(n, scenario, seed)
    start, goal = default_endpoints(n)
    optimum = dijkstra_oracle(grid, start, goal)
    deadline = time.monotonic() + config.timeout_s
    repo = FewShotRepo(examples=repo_items) if repo_items else None
    try:
        if method == "baseline":
            res = plan_baseline_astar(grid, start, goal, deadline=deadline)
        elif method == "opt":
            res = plan_opt_astar(grid, start, goal, deadline=deadline)
        elif method == "llmastar":
            res = plan_llm_astar(grid, start, goal, _make_client(config, seed), deadline=deadline)
        else:
            res = plan_illm(grid, start, goal, _make_client(config, seed), repo, deadline=deadline)
    except SearchTimeout as exc:
        rec.status, rec.error = "timeout", str(exc)
        return rec
    except Exception as exc:  # recorded, the cell is reported as partial
        rec.status, rec.error = "error", repr(exc)
        return rec
    if not res.found or optimum is None:
        rec.status = "unreachable"
        return rec
    rec.path_length_pct = path_length_percent(res.length, optimum)
    rec.search_time_s = res.search_time_ns / 1e9
    rec.memory_units = res.peak_memory_units
    rec.nodes_expanded = res.nodes_expanded
    rec.llm_latency_s = res.llm_latency_ns / 1e9
    rec.degraded = res.degraded
    return rec


def _fmt(x: float, digits: int = 6) -> str:
    return f"{x:.{digits}f}"


def _summarise(method: str, n: int, scenario: str, recs: list[TrialRecord]) -> dict:
    ok = [r for r in recs if r.status == "ok"]
    row = {"method": method, "n": n, "scenario": scenario, "trials": len(recs), "completed": len(ok)}
    metric_cols = (
        "path_length_pct_mean",
        "path_length_pct_std",
        "search_time_s_mean",
        "memory_units_mean",
        "nodes_expanded_mean",
        "llm_latency_s_mean",
    )
    if any(r.status == "timeout" for r in recs) or not ok:
        row.update({c: MISSING for c in metric_cols})
        row["status"] = "timeout" if any(r.status == "timeout" for r in recs) else "failed"
        return row
    pct = np.array([r.path_length_pct for r in ok])
    row["path_length_pct_mean"] = _fmt(pct.mean())
    row["path_length_pct_std"] = _fmt(pct.std(ddof=1) if len(pct) > 1 else 0.0)
    row["search_time_s_mean"] = _fmt(np.mean([r.search_time_s for r in ok]))
    row["memory_units_mean"] = _fmt(np.mean([r.memory_units for r in ok]), 2)
    row["nodes_expanded_mean"] = _fmt(np.mean([r.nodes_expanded for r in ok]), 2)
    row["llm_latency_s_mean"] = _fmt(np.mean([r.llm_latency_s for r in ok]))
    row["status"] = "ok" if len(ok) == len(recs) else "partial"
    return row


def run_benchmark(config: BenchConfig, repo: FewShotRepo | None = None) -> BenchReport:
    """Run every configured cell; ``repo`` seeds the few-shot prompt for ``illm``.

    With ``config.training_maps > 0`` the repository is first trained on maps
    drawn from the training seed block (sizes cycling through ``config.sizes``).
    """
    repo = repo if repo is not None else FewShotRepo()
    seeds: dict[str, object] = {
        "eval_seed_base": config.eval_seed_base,
        "training_seed_base": config.training_seed_base,
        "cells": {},
    }
    if config.training_maps:
        maps = [
            generate_map(config.sizes[i % len(config.sizes)], "random", config.training_seed_base + i)
            for i in range(config.training_maps)
        ]
        train(repo, maps, _make_client(config, config.training_seed_base), time_measure=config.gate_time_measure)
        seeds["training_seeds"] = [g.seed for g in maps]
    repo_items = repo.snapshot()

    tasks = []
    for scenario in config.scenarios:
        for n in config.sizes:
            used, skipped = solvable_seeds(n, scenario, config.trials, config.eval_seed_base)
            seeds["cells"][f"{scenario}/{n}"] = {"used": used, "skipped": skipped}
            for method in config.methods:
                for t, seed in enumerate(used):
                    tasks.append((method, n, scenario, t, seed, config, repo_items))

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_trial, tasks))
    else:
        records = [_run_trial(task) for task in tasks]

    rows = []
    for scenario in config.scenarios:
        for n in config.sizes:
            for method in config.methods:
                cell = [r for r in records if (r.method, r.n, r.scenario) == (method, n, scenario)]
                rows.append(_summarise(method, n, scenario, cell))
    cdf = {
        m: sorted(r.path_length_pct for r in records if r.method == m and r.status == "ok")
        for m in config.methods
    }
    return BenchReport(config, rows, records, cdf, seeds)


def write_report(report: BenchReport, out_dir) -> dict[str, Path]:
    """Write ``report.csv``, ``report.json``, ``std_table.csv`` and ``cdf_<method>.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    p = out / "report.csv"
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(report.rows[0]) if report.rows else ["method"])
        w.writeheader()
        w.writerows(report.rows)
    paths["csv"] = p

    p = out / "report.json"
    doc = {
        "header": report.header(),
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(report.config).items()},
        "rows": report.rows,
        "trials": [asdict(r) for r in report.trials],
    }
    p.write_text(json.dumps(doc, indent=2))
    paths["json"] = p

    # path-length std, one line per (method, scenario), one column per size
    p = out / "std_table.csv"
    sizes = sorted({r["n"] for r in report.rows})
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "scenario", *sizes])
        keys = list(dict.fromkeys((r["method"], r["scenario"]) for r in report.rows))
        for method, scenario in keys:
            by_n = {r["n"]: r["path_length_pct_std"] for r in report.rows if (r["method"], r["scenario"]) == (method, scenario)}
            w.writerow([method, scenario, *(by_n.get(n, MISSING) for n in sizes)])
    paths["std"] = p

    for method, samples in report.cdf.items():
        p = out / f"cdf_{method}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_length_pct", "cumulative_fraction"])
            for i, v in enumerate(samples, 1):
                w.writerow([_fmt(v), _fmt(i / len(samples))])
        paths[f"cdf_{method}"] = p
    return paths


def per_scale_scores(means: dict[int, dict[str, float]]) -> dict[str, float]:
    """Final cost-type score per strategy from ``{scale: {strategy: mean}}``."""
    norms: dict[str, dict[int, float]] = {}
    for scale, by_strategy in means.items():
        lo, hi = min(by_strategy.values()), max(by_strategy.values())
        for strategy, value in by_strategy.items():
            norms.setdefault(strategy, {})[scale] = normalize_score(value, lo, hi)
    return {s: final_scores(v) for s, v in norms.items()}
