"""Command-line entry point: ``gridplan <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .astar_core import PlanningInputError, plan_baseline_astar, plan_opt_astar
from .bench import METHODS, BenchConfig, run_benchmark, write_report
from .grid_map import SCENARIOS, GridMap, MapError, Point, generate_map, parse_map, serialize_map
from .incremental_repo import FewShotRepo, train
from .llm_waypoints import ChatCompletionClient, LlmError, StubClient
from .planner import plan_illm, plan_llm_astar
from .waypoint_selection import POLICIES, run_selection_study, write_study_csv

DEFAULT_REPO = "fewshot_repo.jsonl"


def _point(text: str) -> Point:
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None
    return Point(x, y)


def _ints(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v]


def _names(choices):
    def parse(text: str) -> list[str]:
        names = [v for v in text.split(",") if v]
        bad = [v for v in names if v not in choices]
        if bad:
            raise argparse.ArgumentTypeError(f"unknown value(s) {bad}; choose from {list(choices)}")
        return names

    return parse


def _client(kind: str, seed: int):
    return ChatCompletionClient.from_env() if kind == "live" else StubClient(seed=seed)


def _load_maps(source: str) -> list[GridMap]:
    """A directory of map JSON files, or ``scenario:sizes:count[:seed_base]``."""
    p = Path(source)
    if p.is_dir():
        return [parse_map(f.read_text()) for f in sorted(p.glob("*.json"))]
    parts = source.split(":")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError(f"--maps expects a directory or scenario:sizes:count[:seed], got {source!r}")
    scenario, sizes, count = parts[0], _ints(parts[1]), int(parts[2])
    base = int(parts[3]) if len(parts) == 4 else 0
    return [generate_map(sizes[i % len(sizes)], scenario, base + i) for i in range(count)]


def cmd_gen_map(args) -> int:
    text = serialize_map(generate_map(args.n, args.scenario, args.seed))
    if args.out in (None, "-"):
        print(text)
    else:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_plan(args) -> int:
    grid = parse_map(Path(args.map).read_text())
    start = args.start
    goal = args.goal
    if args.engine in ("baseline", "opt"):
        wps = [] if args.waypoints in (None, "none") else [Point(*p) for p in json.loads(args.waypoints)]
        if args.engine == "opt":
            res = plan_opt_astar(grid, start, goal, wps, topk=args.open_topk)
        else:
            res = plan_baseline_astar(grid, start, goal, wps)
    else:
        client = _client(args.llm, args.llm_seed)
        repo = FewShotRepo.load(args.repo) if args.repo else None
        if args.engine == "illm":
            res = plan_illm(grid, start, goal, client, repo, topk=args.open_topk)
        else:
            res = plan_llm_astar(grid, start, goal, client, repo)
    doc = asdict(res)
    doc["found"] = res.found
    text = json.dumps(doc, default=list)
    if args.json_out:
        Path(args.json_out).write_text(text + "\n")
    else:
        print(text)
    if not res.found:
        print("no path between start and goal", file=sys.stderr)
        return 2
    return 0


def cmd_repo(args) -> int:
    repo = FewShotRepo.load(args.repo)
    if args.action == "show":
        for ex in repo.snapshot():
            print(json.dumps(ex.to_dict()))
        print(f"{len(repo)}/{repo.capacity} examples in {args.repo}", file=sys.stderr)
    elif args.action == "clear":
        repo.clear()
    else:
        if not args.maps:
            raise argparse.ArgumentTypeError("repo train needs --maps")
        _, audit = train(repo, _load_maps(args.maps), _client(args.llm, args.llm_seed), time_measure=args.time_measure)
        for rec in audit:
            print(json.dumps(asdict(rec), default=list))
        print(f"admitted {sum(r.passed for r in audit)} of {len(audit)}; repository holds {len(repo)}", file=sys.stderr)
    return 0


def cmd_study(args) -> int:
    maps = [generate_map(n, "random", args.seed_base + i) for n in args.sizes for i in range(args.maps)]
    rows = run_selection_study(
        maps,
        lambda t: _client(args.llm, t),
        policies=args.policies,
        ks=args.k,
        trials=args.trials,
    )
    write_study_csv(rows, args.out)
    return 0


def cmd_bench(args) -> int:
    config = BenchConfig(
        sizes=args.sizes,
        scenarios=args.scenarios,
        methods=args.methods,
        trials=args.trials,
        timeout_s=args.timeout_s,
        eval_seed_base=args.seed_base,
        training_maps=args.train_maps,
        llm=args.llm,
        workers=args.workers,
    )
    repo = FewShotRepo.load(args.repo) if args.repo else None
    paths = write_report(run_benchmark(config, repo), args.out)
    for p in paths.values():
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridplan", description="Waypoint-guided A* planning on barrier grids.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", help="generate a map as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--scenario", choices=SCENARIOS, default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_map)

    p = sub.add_parser("plan", help="plan one path and emit the result as JSON")
    p.add_argument("--map", required=True)
    p.add_argument("--start", type=_point, required=True)
    p.add_argument("--goal", type=_point, required=True)
    p.add_argument("--engine", choices=METHODS, default="opt")
    p.add_argument("--waypoints", default="none", help="JSON list of [x, y] or 'none' (baseline/opt only)")
    p.add_argument("--llm", choices=("stub", "live"), default="stub")
    p.add_argument("--llm-seed", type=int, default=0)
    p.add_argument("--repo", help="few-shot repository file for illm/llmastar prompts")
    p.add_argument("--open-topk", type=int, default=100)
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("repo", help="train, show or clear the few-shot repository")
    p.add_argument("action", choices=("train", "show", "clear"))
    p.add_argument("--repo", default=DEFAULT_REPO)
    p.add_argument("--maps", help="directory of map files, or scenario:sizes:count[:seed]")
    p.add_argument("--llm", choices=("stub", "live"), default="stub")
    p.add_argument("--llm-seed", type=int, default=0)
    p.add_argument("--time-measure", choices=("wall", "expansions"), default="wall")
    p.set_defaults(func=cmd_repo)

    p = sub.add_parser("study", help="waypoint selection policy study")
    p.add_argument("--policies", type=_names(POLICIES), default=list(POLICIES))
    p.add_argument("--k", type=_ints, default=[1, 2, 3, 4])
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--sizes", type=_ints, default=[50, 100])
    p.add_argument("--maps", type=int, default=1, help="maps per size")
    p.add_argument("--seed-base", type=int, default=2_000_000)
    p.add_argument("--llm", choices=("stub", "live"), default="stub")
    p.add_argument("--out", default="table.csv")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("bench", help="run the benchmark grid and write reports")
    p.add_argument("--sizes", type=_ints, default=[50, 100, 150, 200, 250, 300, 350, 400, 450])
    p.add_argument("--scenarios", type=_names(SCENARIOS), default=["random"])
    p.add_argument("--methods", type=_names(METHODS), default=list(METHODS))
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--timeout-s", type=float, default=600.0)
    p.add_argument("--seed-base", type=int, default=1_000_000)
    p.add_argument("--train-maps", type=int, default=0)
    p.add_argument("--repo")
    p.add_argument("--llm", choices=("stub", "live"), default="stub")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MapError, PlanningInputError, LlmError, argparse.ArgumentTypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
