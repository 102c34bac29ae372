"""Few-shot example repository grown from validated training runs."""
from __future__ import annotations

import json
import logging
import os
import tempfile
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .astar_core import PlanResult, plan_opt_astar
from .grid_map import GridMap, Point, default_endpoints
from .llm_waypoints import LlmClient, LlmError, query_waypoints, render_prompt
from .waypoint_selection import default_select

log = logging.getLogger(__name__)

DEFAULT_CAPACITY = 10
TIME_MEASURES = ("wall", "expansions")


@dataclass(frozen=True)
class Thresholds:
    length: float = 0.1
    time: float = 0.1
    memory: float = 0.1


@dataclass
class FewShotExample:
    start: Point
    goal: Point
    horizontal_barriers: list[list[int]]
    vertical_barriers: list[list[int]]
    waypoints: list[Point]
    # (length deviation, time ratio, memory ratio) measured when admitted
    metrics: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @classmethod
    def from_map(cls, grid: GridMap, start, goal, waypoints: Sequence, metrics=(0.0, 0.0, 0.0)):
        return cls(
            Point(*start),
            Point(*goal),
            grid.horizontal_barriers,
            grid.vertical_barriers,
            [Point(*p) for p in waypoints],
            tuple(metrics),
        )

    def to_dict(self) -> dict:
        return {
            "start": list(self.start),
            "goal": list(self.goal),
            "horizontal_barriers": [list(t) for t in self.horizontal_barriers],
            "vertical_barriers": [list(t) for t in self.vertical_barriers],
            "waypoints": [list(p) for p in self.waypoints],
            "metrics": list(self.metrics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FewShotExample":
        return cls(
            Point(*d["start"]),
            Point(*d["goal"]),
            [list(t) for t in d["horizontal_barriers"]],
            [list(t) for t in d["vertical_barriers"]],
            [Point(*p) for p in d["waypoints"]],
            tuple(d.get("metrics", (0.0, 0.0, 0.0))),
        )


class FewShotRepo:
    """Bounded FIFO of examples, mirrored to a JSON-lines file when ``path`` is set."""

    def __init__(
        self,
        capacity: int = DEFAULT_CAPACITY,
        thresholds: Thresholds = Thresholds(),
        path: str | os.PathLike | None = None,
        examples: Iterable[FewShotExample] = (),
    ):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.thresholds = thresholds
        self.path = Path(path) if path is not None else None
        self.examples: deque[FewShotExample] = deque(examples, maxlen=capacity)

    def __len__(self) -> int:
        return len(self.examples)

    def snapshot(self) -> list[FewShotExample]:
        return list(self.examples)

    def _write(self, items: Sequence[FewShotExample]) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".repo-", suffix=".jsonl")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for ex in items:
                    fh.write(json.dumps(ex.to_dict()) + "\n")
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def update(self, example: FewShotExample, passed: bool) -> bool:
        """Append a passing example, evicting the oldest when full. Returns whether it changed."""
        if not passed:
            return False
        staged = deque(self.examples, maxlen=self.capacity)
        staged.append(example)
        self._write(staged)  # raises before the in-memory state moves
        self.examples = staged
        return True

    def clear(self) -> None:
        self._write([])
        self.examples.clear()

    @classmethod
    def load(cls, path, capacity: int = DEFAULT_CAPACITY, thresholds: Thresholds = Thresholds()) -> "FewShotRepo":
        p = Path(path)
        items = []
        if p.exists():
            with open(p, encoding="utf-8") as fh:
                items = [FewShotExample.from_dict(json.loads(line)) for line in fh if line.strip()]
        return cls(capacity, thresholds, p, items)


def update_repository(repo: FewShotRepo, example: FewShotExample, passed: bool) -> FewShotRepo:
    repo.update(example, passed)
    return repo


def _ratio(a: float, b: float) -> float:
    if b > 0:
        return a / b
    return 0.0 if a == 0 else float("inf")


def validate_example(
    plan_llm: PlanResult,
    plan_base: PlanResult,
    thresholds: Thresholds = Thresholds(),
    time_measure: str = "wall",
) -> tuple[bool, tuple[float, float, float]]:
    """Gate a waypoint-guided plan against the full-search plan on the same task.

    Passes when the relative length deviation, the time ratio and the memory
    ratio are each at most their threshold. ``time_measure="expansions"``
    compares node expansions instead of wall-clock time, which makes the gate
    reproducible.
    """
    if time_measure not in TIME_MEASURES:
        raise ValueError(f"time_measure must be one of {TIME_MEASURES}")
    length_dev = _ratio(abs(plan_llm.length - plan_base.length), abs(plan_base.length))
    if plan_base.length == 0:
        # start == goal: nothing to search, only the length can disagree
        return length_dev == 0, (length_dev, 0.0, 0.0)
    if time_measure == "wall":
        time_ratio = _ratio(plan_llm.search_time_ns, plan_base.search_time_ns)
    else:
        time_ratio = _ratio(plan_llm.nodes_expanded, plan_base.nodes_expanded)
    mem_ratio = _ratio(plan_llm.peak_memory_units, plan_base.peak_memory_units)
    passed = length_dev <= thresholds.length and time_ratio <= thresholds.time and mem_ratio <= thresholds.memory
    return passed, (length_dev, time_ratio, mem_ratio)


@dataclass
class TrainRecord:
    index: int
    n: int
    seed: int
    passed: bool = False
    metrics: tuple[float, float, float] | None = None
    error: str | None = None
    repo_size: int = 0
    waypoints: list[Point] = field(default_factory=list)


def train(
    repo: FewShotRepo,
    training_maps: Iterable[GridMap],
    client: LlmClient,
    *,
    time_measure: str = "wall",
) -> tuple[FewShotRepo, list[TrainRecord]]:
    """One pass over the training maps, each prompted with the repository as it stands."""
    audit = []
    for i, grid in enumerate(training_maps):
        start, goal = default_endpoints(grid.n)
        rec = TrainRecord(i, grid.n, grid.seed)
        try:
            ws = query_waypoints(client, render_prompt(repo, grid, start, goal))
        except LlmError as exc:
            log.warning("training map %d skipped: %s", i, exc)
            rec.error = str(exc)
            rec.repo_size = len(repo)
            audit.append(rec)
            continue
        guided = plan_opt_astar(grid, start, goal, default_select(ws.interior(start, goal), start))
        base = plan_opt_astar(grid, start, goal)
        if not (guided.found and base.found):
            rec.error = "unreachable"
        else:
            rec.passed, rec.metrics = validate_example(guided, base, repo.thresholds, time_measure)
            repo.update(FewShotExample.from_map(grid, start, goal, ws.points, rec.metrics), rec.passed)
        rec.waypoints = list(ws.points)
        rec.repo_size = len(repo)
        audit.append(rec)
    return repo, audit
