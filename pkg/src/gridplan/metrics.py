"""Deterministic cost accounting and score normalisation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

# nominal sizes of one OPEN entry (f, tie, seq, state, g, stamp) and one CLOSED key
OPEN_ENTRY_BYTES = 48
CLOSED_ENTRY_BYTES = 16


@dataclass
class MemoryMeter:
    """Peak of ``open * bytes_per_open + closed * bytes_per_closed`` over a run."""

    bytes_per_open: int = OPEN_ENTRY_BYTES
    bytes_per_closed: int = CLOSED_ENTRY_BYTES
    open_entries: int = 0
    closed_entries: int = 0
    peak_units: int = 0

    def observe(self, open_entries: int, closed_entries: int) -> None:
        self.open_entries = open_entries
        self.closed_entries = closed_entries
        units = open_entries * self.bytes_per_open + closed_entries * self.bytes_per_closed
        if units > self.peak_units:
            self.peak_units = units


def normalize_score(x_current: float, x_min: float, x_max: float) -> float:
    """Cost-type score: 1 at the minimum, 0 at the maximum."""
    if x_max < x_min:
        raise ValueError(f"x_max ({x_max}) < x_min ({x_min})")
    if x_max == x_min:
        return 1.0
    if not x_min <= x_current <= x_max:
        warnings.warn(f"{x_current} outside [{x_min}, {x_max}], clamping", RuntimeWarning, stacklevel=2)
        x_current = min(max(x_current, x_min), x_max)
    return (x_max - x_current) / (x_max - x_min)


def final_scores(per_scale_norms: Mapping[int, float]) -> float:
    if not per_scale_norms:
        raise ValueError("need at least one map scale")
    values = list(per_scale_norms.values())
    return sum(values) / len(values)


def path_length_percent(length: float, oracle_length: float) -> float:
    if oracle_length is None or oracle_length <= 0:
        raise ValueError("path length percent undefined without a positive optimal length")
    pct = 100.0 * length / oracle_length
    # a planner beating the optimum means the planner or the oracle is broken
    assert pct >= 100.0 - 1e-9, f"path shorter than optimal: {length} < {oracle_length}"
    return pct
