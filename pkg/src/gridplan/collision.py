"""Segment-versus-barrier collision tests.

A barrier is modelled as the closed axis-aligned segment through its cell
centres. All coordinates are integers, so the orientation predicate is exact
and no epsilon is involved anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .grid_map import HORIZONTAL, Barrier, Point


class Aabb(NamedTuple):
    min_x: int
    min_y: int
    max_x: int
    max_y: int


class Segment(NamedTuple):
    a: Point
    b: Point


@dataclass
class CollisionStats:
    """Counters bumped by the detectors when passed in."""

    broad_rejects: int = 0
    precise_tests: int = 0


def aabb_of_segment(s: Segment) -> Aabb:
    (ax, ay), (bx, by) = s
    return Aabb(min(ax, bx), min(ay, by), max(ax, bx), max(ay, by))


def aabb_of_barrier(b: Barrier) -> Aabb:
    if b.axis == HORIZONTAL:
        return Aabb(b.lo, b.fixed, b.hi, b.fixed)
    return Aabb(b.fixed, b.lo, b.fixed, b.hi)


def aabb_overlap(p: Aabb, q: Aabb) -> bool:
    # closed intervals: boxes that only touch still count as overlapping
    return p.min_x <= q.max_x and q.min_x <= p.max_x and p.min_y <= q.max_y and q.min_y <= p.max_y


def orient(p, q, r) -> int:
    """Twice the signed area of triangle pqr: >0 left turn, <0 right turn, 0 collinear."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    # r collinear with pq; is it inside pq's bounding box?
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed segments p1p2 and q1q2 share at least one point. Either may be a single point."""
    if p1 == p2 and q1 == q2:
        return p1 == q1
    if p1 == p2:
        return orient(q1, q2, p1) == 0 and _on_segment(q1, q2, p1)
    if q1 == q2:
        return orient(p1, p2, q1) == 0 and _on_segment(p1, p2, q1)
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    return (
        (d1 == 0 and _on_segment(q1, q2, p1))
        or (d2 == 0 and _on_segment(q1, q2, p2))
        or (d3 == 0 and _on_segment(p1, p2, q1))
        or (d4 == 0 and _on_segment(p1, p2, q2))
    )


def segment_intersects_barrier(s: Segment, b: Barrier) -> bool:
    q1, q2 = b.endpoints
    return segments_intersect(s[0], s[1], q1, q2)


def detect_collision_precise(
    s: Segment, barriers: Iterable[Barrier], stats: CollisionStats | None = None
) -> bool:
    """Run the exact test against every barrier until one hits."""
    for b in barriers:
        if stats is not None:
            stats.precise_tests += 1
        if segment_intersects_barrier(s, b):
            return True
    return False


def detect_collision_two_stage(
    s: Segment,
    barriers: Iterable[Barrier],
    stats: CollisionStats | None = None,
    boxes: Iterable[Aabb] | None = None,
) -> bool:
    """AABB rejection first, exact test only for barriers whose box overlaps the segment's.

    ``boxes`` may carry precomputed barrier boxes, aligned with ``barriers``.
    """
    seg_box = aabb_of_segment(s)
    barriers = list(barriers)
    if boxes is None:
        boxes = [aabb_of_barrier(b) for b in barriers]
    for b, box in zip(barriers, boxes):
        if not aabb_overlap(seg_box, box):
            if stats is not None:
                stats.broad_rejects += 1
            continue
        if stats is not None:
            stats.precise_tests += 1
        if segment_intersects_barrier(s, b):
            return True
    return False
