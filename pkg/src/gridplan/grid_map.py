"""Square grid maps with unit-width axis-aligned barriers.

Maps are generated procedurally from a seeded PCG64 stream (``numpy.random.default_rng``),
so the same ``(n, scenario, seed)`` always produces the same barrier list.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

HORIZONTAL = "horizontal"
VERTICAL = "vertical"
SCENARIOS = ("random", "cross", "bars")

MIN_BARRIER_LEN = 10
MAX_BARRIER_LEN = 50
MAX_PLACEMENT_TRIES = 1000


class MapError(ValueError):
    pass


class InvalidSizeError(MapError):
    pass


class OutOfBoundsError(MapError, IndexError):
    pass


class MapFormatError(MapError):
    """Raised by :func:`parse_map`; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class Point(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class Barrier:
    """A 1-cell-wide wall. ``fixed`` is the row (horizontal) or column (vertical);
    ``lo..hi`` is the inclusive span along the other axis."""

    axis: str
    fixed: int
    lo: int
    hi: int

    def __post_init__(self):
        if self.axis not in (HORIZONTAL, VERTICAL):
            raise MapError(f"unknown barrier axis {self.axis!r}")
        if self.lo > self.hi:
            raise MapError(f"barrier span reversed: lo={self.lo} > hi={self.hi}")

    @property
    def length(self) -> int:
        return self.hi - self.lo

    @property
    def endpoints(self) -> tuple[Point, Point]:
        if self.axis == HORIZONTAL:
            return Point(self.lo, self.fixed), Point(self.hi, self.fixed)
        return Point(self.fixed, self.lo), Point(self.fixed, self.hi)

    def covers(self, p) -> bool:
        x, y = p
        if self.axis == HORIZONTAL:
            return y == self.fixed and self.lo <= x <= self.hi
        return x == self.fixed and self.lo <= y <= self.hi

    def triple(self) -> list[int]:
        return [self.fixed, self.lo, self.hi]


def default_endpoints(n: int) -> tuple[Point, Point]:
    return Point(2, 2), Point(n - 3, n - 3)


@dataclass(frozen=True)
class GridMap:
    n: int
    barriers: tuple[Barrier, ...] = ()
    scenario: str = "random"
    seed: int = 0

    def __post_init__(self):
        # horizontal first, then vertical, each in insertion order: the only
        # order the JSON triple format can represent
        bars = tuple(self.barriers)
        ordered = tuple(b for b in bars if b.axis == HORIZONTAL) + tuple(
            b for b in bars if b.axis == VERTICAL
        )
        object.__setattr__(self, "barriers", ordered)
        for b in ordered:
            if not (0 <= b.fixed < self.n and 0 <= b.lo and b.hi < self.n):
                raise OutOfBoundsError(f"barrier {b} leaves the {self.n}x{self.n} map")

    @cached_property
    def blocked(self) -> np.ndarray:
        """Occupancy array indexed ``[y, x]``."""
        grid = np.zeros((self.n, self.n), dtype=bool)
        for b in self.barriers:
            if b.axis == HORIZONTAL:
                grid[b.fixed, b.lo : b.hi + 1] = True
            else:
                grid[b.lo : b.hi + 1, b.fixed] = True
        return grid

    @cached_property
    def blocked_flat(self) -> list[bool]:
        # row-major y * n + x; plain list for fast scalar indexing in search loops
        return self.blocked.ravel().tolist()

    @property
    def horizontal_barriers(self) -> list[list[int]]:
        return [b.triple() for b in self.barriers if b.axis == HORIZONTAL]

    @property
    def vertical_barriers(self) -> list[list[int]]:
        return [b.triple() for b in self.barriers if b.axis == VERTICAL]

    def in_bounds(self, p) -> bool:
        return 0 <= p[0] < self.n and 0 <= p[1] < self.n


def is_blocked(grid: GridMap, p) -> bool:
    if not grid.in_bounds(p):
        raise OutOfBoundsError(f"point {tuple(p)} outside {grid.n}x{grid.n} map")
    return bool(grid.blocked[p[1], p[0]])


def _check_size(n: int) -> None:
    if n < 50 or n % 50:
        raise InvalidSizeError(f"edge length must be a positive multiple of 50, got {n}")


def _seed_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & 0xFFFF_FFFF_FFFF_FFFF)


def _random_barrier(rng: np.random.Generator, n: int) -> Barrier:
    axis = HORIZONTAL if rng.integers(2) == 0 else VERTICAL
    length = int(rng.integers(MIN_BARRIER_LEN, min(MAX_BARRIER_LEN, n - 1) + 1))
    fixed = int(rng.integers(0, n))
    lo = int(rng.integers(0, n - length))
    return Barrier(axis, fixed, lo, lo + length)


def _place(rng, n, draw, keep_clear) -> Barrier:
    for _ in range(MAX_PLACEMENT_TRIES):
        b = draw(rng, n)
        if not any(b.covers(p) for p in keep_clear):
            return b
    raise MapError(f"could not place a barrier clear of {keep_clear} in {MAX_PLACEMENT_TRIES} tries")


def _giant_length(rng, n) -> int:
    return int(rng.integers(int(np.ceil(0.5 * n)), int(0.6 * n) + 1))


def _cross(rng, n, center: Point) -> list[Barrier]:
    out = []
    for axis in (HORIZONTAL, VERTICAL):
        length = _giant_length(rng, n)
        lo = min(max(0, (center.x if axis == HORIZONTAL else center.y) - length // 2), n - 1 - length)
        fixed = center.y if axis == HORIZONTAL else center.x
        out.append(Barrier(axis, fixed, lo, lo + length))
    return out


def _bars(rng, n) -> list[Barrier]:
    axis = HORIZONTAL if rng.integers(2) == 0 else VERTICAL
    out = []
    for i in range(3):
        length = _giant_length(rng, n)
        fixed = (i + 1) * n // 4
        # alternate which edge each bar hangs from so a path has to weave
        lo = 0 if i % 2 == 0 else n - 1 - length
        out.append(Barrier(axis, fixed, lo, lo + length))
    return out


def generate_map(n: int, scenario: str = "random", seed: int = 0) -> GridMap:
    """Random map with ``3 * (n / 50) ** 2`` barriers, plus giant obstacles for
    the ``cross`` and ``bars`` scenarios.

    The random barriers are drawn first from the same stream, so a ``cross`` or
    ``bars`` map contains exactly the barriers of the ``random`` map with the
    same seed.
    """
    _check_size(n)
    if scenario not in SCENARIOS:
        raise MapError(f"unknown scenario {scenario!r}")
    rng = _seed_rng(seed)
    start, goal = default_endpoints(n)
    count = 3 * (n // 50) ** 2
    barriers = [_place(rng, n, _random_barrier, (start, goal)) for _ in range(count)]
    if scenario == "cross":
        center = Point((start.x + goal.x) // 2, (start.y + goal.y) // 2)
        barriers += _cross(rng, n, center)
    elif scenario == "bars":
        barriers += _bars(rng, n)
    return GridMap(n, tuple(barriers), scenario, seed)


def map_to_dict(grid: GridMap) -> dict:
    return {
        "n": grid.n,
        "scenario": grid.scenario,
        "seed": grid.seed,
        "horizontal_barriers": grid.horizontal_barriers,
        "vertical_barriers": grid.vertical_barriers,
    }


def serialize_map(grid: GridMap) -> str:
    return json.dumps(map_to_dict(grid))


def _triples(obj: dict, key: str, axis: str) -> list[Barrier]:
    raw = obj.get(key, [])
    if not isinstance(raw, list):
        raise MapFormatError("expected a list of [fixed, start, end] triples", key)
    out = []
    for i, t in enumerate(raw):
        if not (isinstance(t, list) and len(t) == 3 and all(isinstance(v, int) for v in t)):
            raise MapFormatError(f"entry {i} is not an integer triple: {t!r}", key)
        try:
            out.append(Barrier(axis, *t))
        except MapError as exc:
            raise MapFormatError(f"entry {i}: {exc}", key) from None
    return out


def map_from_dict(obj: dict) -> GridMap:
    if not isinstance(obj, dict):
        raise MapFormatError("top level must be a JSON object")
    n = obj.get("n")
    if not isinstance(n, int) or n <= 0:
        raise MapFormatError(f"expected a positive integer, got {n!r}", "n")
    scenario = obj.get("scenario", "random")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        raise MapFormatError(f"expected an integer, got {seed!r}", "seed")
    horiz = _triples(obj, "horizontal_barriers", HORIZONTAL)
    vert = _triples(obj, "vertical_barriers", VERTICAL)
    for key, group in (("horizontal_barriers", horiz), ("vertical_barriers", vert)):
        for b in group:
            if not (0 <= b.fixed < n and 0 <= b.lo and b.hi < n):
                raise MapFormatError(f"barrier {b.triple()} outside [0, {n})", key)
    return GridMap(n, tuple(horiz + vert), scenario, seed)


def parse_map(text: str) -> GridMap:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(f"malformed JSON: {exc}") from None
    return map_from_dict(obj)
