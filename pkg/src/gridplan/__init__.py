"""Waypoint-guided A* path planning on barrier grid maps."""
from .astar_core import (
    PlanningInputError,
    PlanResult,
    SearchNode,
    SearchTimeout,
    dijkstra_oracle,
    dijkstra_path,
    heuristic_f,
    path_length,
    plan_baseline_astar,
    plan_opt_astar,
)
from .bench import BenchConfig, BenchReport, run_benchmark, write_report
from .collision import (
    Aabb,
    Segment,
    aabb_of_segment,
    aabb_overlap,
    detect_collision_precise,
    detect_collision_two_stage,
    segment_intersects_barrier,
)
from .grid_map import Barrier, GridMap, MapError, Point, generate_map, is_blocked, parse_map, serialize_map
from .incremental_repo import FewShotExample, FewShotRepo, Thresholds, train, update_repository, validate_example
from .llm_waypoints import (
    ChatCompletionClient,
    LlmError,
    PromptBundle,
    StubClient,
    WaypointSet,
    parse_waypoints,
    render_prompt,
)
from .metrics import MemoryMeter, final_scores, normalize_score, path_length_percent
from .planner import plan_illm, plan_llm_astar
from .waypoint_selection import SelectionPolicy, default_select, select_waypoints

__all__ = [
    "Aabb",
    "Barrier",
    "BenchConfig",
    "BenchReport",
    "ChatCompletionClient",
    "FewShotExample",
    "FewShotRepo",
    "GridMap",
    "LlmError",
    "MapError",
    "MemoryMeter",
    "PlanResult",
    "PlanningInputError",
    "Point",
    "PromptBundle",
    "SearchNode",
    "SearchTimeout",
    "Segment",
    "SelectionPolicy",
    "StubClient",
    "Thresholds",
    "WaypointSet",
    "aabb_of_segment",
    "aabb_overlap",
    "default_select",
    "detect_collision_precise",
    "detect_collision_two_stage",
    "dijkstra_oracle",
    "dijkstra_path",
    "final_scores",
    "generate_map",
    "heuristic_f",
    "is_blocked",
    "normalize_score",
    "parse_map",
    "parse_waypoints",
    "path_length",
    "path_length_percent",
    "plan_baseline_astar",
    "plan_illm",
    "plan_llm_astar",
    "plan_opt_astar",
    "render_prompt",
    "run_benchmark",
    "segment_intersects_barrier",
    "select_waypoints",
    "serialize_map",
    "train",
    "update_repository",
    "validate_example",
    "write_report",
]

__version__ = "0.1.0"
