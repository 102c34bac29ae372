"""Prompt assembly, chat-completion clients and waypoint parsing."""
from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np
import requests

from .astar_core import dijkstra_path
from .grid_map import GridMap, Point

log = logging.getLogger(__name__)

MARKER = "Generated Path:"
MIN_POINTS = 5

TEMPLATE = """\
# Role
You are an expert specializing in computational geometry and path planning.

# Goal
Generate an optimal path from start point to goal point based on the given start position, goal position, and obstacle information.

# Constraints
Strictly adhere to the following rules:
1. Obstacle Avoidance: The path must not contact or intersect any obstacles in any form.
2. Path Point Count: The final path must contain at least 5 coordinate points (including start and goal points). Interpolation Rules: If the initially calculated path contains fewer than 5 points, uniformly insert additional points between the longest path segments until the quantity requirement is satisfied. Inserted points should ensure path smoothness and avoid unnecessary sharp angles.
3. Path Optimality: Under the premise of satisfying all above constraints, the generated path should approximate the geometrically shortest path.

# Input and Output Format
Input: Start point start: [x, y], Goal point goal: [x, y], Horizontal barriers horizontal_barriers: [[y, x_start, x_end], ...], Vertical barriers vertical_barriers: [[x, y_start, y_end], ...]
Output: Must strictly follow the JSON array format: Generated Path: [[x1, y1], [x2, y2], ..., [xN, yN]]

# Workflow
1. Initial Pathfinding: Based on A* algorithm logic, identify a shortest path that avoids all obstacles.
2. Verification: Check the path point count. If fewer than 5 points, add intermediate points according to Core Constraint
3. Final Validation: Before output, verify that the generated path completely satisfies all core constraints."""

EXAMPLE_FORMAT = """\
Input:
start: {start}
goal: {goal}
horizontal_barriers: {horizontal_barriers}
vertical_barriers: {vertical_barriers}
Output:
Generated Path: {path}"""

TASK_FORMAT = """\
Generate intermediate waypoints for the following input. If input data is ambiguous or constraint conditions contain logical conflicts, explicitly identify the problematic areas. Ensure the path generation is completely based on the provided input data. A path that perfectly follows all constraints will be considered a successful response.

Start Point: {start}
goal: {goal}
horizontal_barriers: {horizontal_barriers}
vertical_barriers: {vertical_barriers}
Generated Path:"""


class LlmError(RuntimeError):
    pass


class LlmTransportError(LlmError):
    pass


class WaypointFormatError(LlmError):
    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


class UnreachableError(LlmError):
    pass


@dataclass
class PromptBundle:
    template: str
    few_shots: list[str]
    task: str
    # the structured request behind the text; offline clients read these
    grid: GridMap | None = field(default=None, repr=False)
    start: Point | None = None
    goal: Point | None = None

    @property
    def text(self) -> str:
        return "\n\n".join([self.template, *self.few_shots, self.task])


@dataclass
class WaypointSet:
    points: list[Point]
    raw_text: str = ""
    out_of_bounds: list[int] = field(default_factory=list)

    @property
    def meets_min_count(self) -> bool:
        return len(self.points) >= MIN_POINTS

    def interior(self, start, goal) -> list[Point]:
        """Points with a leading ``start`` and trailing ``goal`` removed."""
        pts = list(self.points)
        if pts and tuple(pts[0]) == tuple(start):
            pts = pts[1:]
        if pts and tuple(pts[-1]) == tuple(goal):
            pts = pts[:-1]
        return pts


def render_example(example) -> str:
    return EXAMPLE_FORMAT.format(
        start=json.dumps(list(example.start)),
        goal=json.dumps(list(example.goal)),
        horizontal_barriers=json.dumps([list(t) for t in example.horizontal_barriers]),
        vertical_barriers=json.dumps([list(t) for t in example.vertical_barriers]),
        path=json.dumps([list(p) for p in example.waypoints]),
    )


def render_task(grid: GridMap, start, goal) -> str:
    return TASK_FORMAT.format(
        start=json.dumps(list(start)),
        goal=json.dumps(list(goal)),
        horizontal_barriers=json.dumps(grid.horizontal_barriers),
        vertical_barriers=json.dumps(grid.vertical_barriers),
    )


def render_prompt(repo, grid: GridMap, start, goal) -> PromptBundle:
    """``repo`` is a FewShotRepo, any iterable of examples, or None."""
    if repo is None:
        examples: Iterable = ()
    elif hasattr(repo, "snapshot"):
        examples = repo.snapshot()
    else:
        examples = repo
    return PromptBundle(
        template=TEMPLATE,
        few_shots=[render_example(e) for e in examples],
        task=render_task(grid, start, goal),
        grid=grid,
        start=Point(*start),
        goal=Point(*goal),
    )


def format_waypoints(points: Sequence) -> str:
    return f"{MARKER} {json.dumps([[int(p[0]), int(p[1])] for p in points])}"


def parse_waypoints(raw_text: str, n: int | None = None) -> WaypointSet:
    """Parse the array following the last ``Generated Path:`` marker."""
    at = raw_text.rfind(MARKER)
    if at < 0:
        raise WaypointFormatError(f"no {MARKER!r} marker in model output", raw_text)
    tail = raw_text[at + len(MARKER):]
    bracket = tail.find("[")
    if bracket < 0:
        raise WaypointFormatError("no JSON array after the marker", raw_text)
    try:
        value, _ = json.JSONDecoder().raw_decode(tail[bracket:])
    except json.JSONDecodeError as exc:
        raise WaypointFormatError(f"malformed waypoint array: {exc}", raw_text) from None
    points = []
    for item in value if isinstance(value, list) else [None]:
        if not (
            isinstance(item, list)
            and len(item) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item)
            and all(float(v).is_integer() for v in item)
        ):
            raise WaypointFormatError(f"expected integer [x, y] pairs, got {item!r}", raw_text)
        points.append(Point(int(item[0]), int(item[1])))
    oob = [] if n is None else [i for i, (x, y) in enumerate(points) if not (0 <= x < n and 0 <= y < n)]
    return WaypointSet(points, raw_text, oob)


class LlmClient(Protocol):
    def complete(self, bundle: PromptBundle) -> str: ...


def query_waypoints(client: LlmClient, bundle: PromptBundle) -> WaypointSet:
    raw = client.complete(bundle)
    return parse_waypoints(raw, bundle.grid.n if bundle.grid is not None else None)


def stub_generate(grid: GridMap, start, goal, seed: int, radius: int | None = None) -> WaypointSet:
    """Deterministic stand-in for a model: five points sampled along an optimal
    path at 0, 1/4, 1/2, 3/4 and 1 of its length, interior ones jittered by up to
    ``radius`` cells (Chebyshev; default ``n // 20``)."""
    start, goal = Point(*start), Point(*goal)
    if start == goal:
        return WaypointSet([start], format_waypoints([start]))
    path = dijkstra_path(grid, start, goal)
    if path is None:
        raise UnreachableError(f"no path from {tuple(start)} to {tuple(goal)}")
    n = grid.n
    r = n // 20 if radius is None else radius
    steps = np.hypot(*np.diff(np.asarray(path, dtype=float), axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    rng = np.random.default_rng(seed & 0xFFFF_FFFF_FFFF_FFFF)
    points = [start]
    for frac in (0.25, 0.5, 0.75):
        i = int(np.searchsorted(cum, frac * cum[-1]))
        x, y = path[i]
        dx, dy = (int(v) for v in rng.integers(-r, r + 1, size=2)) if r > 0 else (0, 0)
        points.append(Point(min(max(x + dx, 0), n - 1), min(max(y + dy, 0), n - 1)))
    points.append(goal)
    return WaypointSet(points, format_waypoints(points))


@dataclass
class StubClient:
    """Offline client answering from :func:`stub_generate`."""

    seed: int = 0
    radius: int | None = None

    def complete(self, bundle: PromptBundle) -> str:
        if bundle.grid is None:
            raise LlmError("stub client needs the structured request in the bundle")
        ws = stub_generate(bundle.grid, bundle.start, bundle.goal, self.seed, self.radius)
        return f"Here is the path.\n{ws.raw_text}"


class ChatCompletionClient:
    """Minimal OpenAI-style ``/chat/completions`` client with retry and a concurrency cap."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        *,
        temperature: float = 0.0,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        max_in_flight: int = 4,
        log_path: str | os.PathLike | None = None,
        session: requests.Session | None = None,
        sleep=time.sleep,
    ):
        base = base_url.rstrip("/")
        self.url = base if base.endswith("/chat/completions") else f"{base}/chat/completions"
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.log_path = log_path
        self.session = session or requests.Session()
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._log_lock = threading.Lock()

    @classmethod
    def from_env(cls, **kwargs) -> "ChatCompletionClient":
        try:
            base_url = os.environ["LLM_BASE_URL"]
            model = os.environ["LLM_MODEL"]
        except KeyError as exc:
            raise LlmError(f"environment variable {exc.args[0]} is not set") from None
        return cls(base_url, model, os.environ.get("LLM_API_KEY", ""), **kwargs)

    def _log(self, record: dict) -> None:
        if self.log_path is None:
            return
        with self._log_lock, open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    def complete(self, bundle: PromptBundle) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": bundle.text}],
            "temperature": self.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self.session.post(self.url, json=body, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as exc:
                last = exc
                self._log({"time": time.time(), "attempt": attempt, "request": body, "error": repr(exc)})
                log.warning("chat completion attempt %d failed: %s", attempt + 1, exc)
                continue
            self._log({"time": time.time(), "attempt": attempt, "request": body, "response": content})
            return content
        raise LlmTransportError(f"chat completion failed after {self.retries + 1} attempts: {last}")
