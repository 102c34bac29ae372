import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplan.astar_core import dijkstra_path
from gridplan.grid_map import GridMap, Point, default_endpoints, generate_map
from gridplan.incremental_repo import FewShotExample, FewShotRepo
from gridplan.llm_waypoints import (
    MARKER,
    TEMPLATE,
    ChatCompletionClient,
    LlmError,
    LlmTransportError,
    StubClient,
    UnreachableError,
    WaypointFormatError,
    WaypointSet,
    format_waypoints,
    parse_waypoints,
    query_waypoints,
    render_prompt,
    stub_generate,
)

from conftest import vbar

DEMO_OUTPUT = "Generated Path: [[94, 321], [217, 211], [341, 275], [464, 387], [588, 421], [650, 544], [706, 668]]"


def demo_example():
    return FewShotExample(
        Point(94, 321),
        Point(706, 668),
        [[494, 166, 634], [474, 57, 386]],
        [[247, 182, 632], [553, 387, 775]],
        [Point(*p) for p in json.loads(DEMO_OUTPUT.split(":", 1)[1])],
    )


def test_empty_repo_prompt():
    grid = generate_map(50, "random", 1)
    bundle = render_prompt(None, grid, (2, 2), (47, 47))
    assert bundle.few_shots == []
    assert bundle.template == TEMPLATE
    assert bundle.text.startswith("# Role") and bundle.text.endswith("Generated Path:")
    assert bundle.text.index("# Workflow") < bundle.text.index("Start Point: [2, 2]")


def test_task_contains_each_field_once():
    grid = generate_map(100, "random", 1)
    task = render_prompt(None, grid, (2, 2), (97, 97)).task
    for key in ("Start Point:", "goal:", "horizontal_barriers:", "vertical_barriers:"):
        assert task.count(key) == 1
    assert json.dumps(grid.horizontal_barriers) in task


def test_few_shot_block_layout():
    repo = FewShotRepo(examples=[demo_example()])
    bundle = render_prompt(repo, GridMap(50), (2, 2), (47, 47))
    assert len(bundle.few_shots) == 1
    block = bundle.few_shots[0]
    assert "start: [94, 321]" in block
    assert "Generated Path: [[94, 321], [217, 211]" in block
    assert "horizontal_barriers: [[494, 166, 634], [474, 57, 386]]" in block
    # coordinates larger than the map are kept verbatim
    assert "[553, 387, 775]" in block


def test_prompt_only_task_depends_on_map():
    repo = [demo_example()]
    a = render_prompt(repo, generate_map(50, "random", 1), (2, 2), (47, 47))
    b = render_prompt(repo, generate_map(50, "random", 2), (2, 2), (47, 47))
    assert a.template == b.template and a.few_shots == b.few_shots
    assert a.task != b.task
    assert render_prompt(repo, generate_map(50, "random", 1), (2, 2), (47, 47)).text == a.text


def test_parse_demo_output():
    ws = parse_waypoints(DEMO_OUTPUT)
    assert len(ws.points) == 7 and ws.points[0] == (94, 321) and ws.points[-1] == (706, 668)
    assert ws.meets_min_count


def test_parse_prose_and_last_marker():
    raw = "Let me think.\nGenerated Path: [[0, 0]]\nRevised:\nGenerated Path: [[1, 2], [3, 4]] done."
    assert parse_waypoints(raw).points == [(1, 2), (3, 4)]


@pytest.mark.parametrize(
    "raw",
    [
        "no marker here [[1, 2]]",
        "Generated Path: nothing",
        "Generated Path: [[1, 2], [3]]",
        "Generated Path: [[1.5, 2]]",
        "Generated Path: [[1, 2]",
        "Generated Path: [[true, 2]]",
        'Generated Path: {"a": 1}',
    ],
)
def test_parse_errors_keep_raw_text(raw):
    with pytest.raises(WaypointFormatError) as info:
        parse_waypoints(raw)
    assert info.value.raw_text == raw


def test_short_and_out_of_bounds_lists_are_flagged():
    ws = parse_waypoints("Generated Path: [[0, 0], [60, 3], [5, -1]]", n=50)
    assert not ws.meets_min_count
    assert ws.out_of_bounds == [1, 2]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)), max_size=12))
def test_format_parse_round_trip(points):
    assert parse_waypoints(format_waypoints(points)).points == [Point(*p) for p in points]


def test_interior_strips_endpoints():
    ws = WaypointSet([Point(0, 0), Point(3, 3), Point(9, 9)])
    assert ws.interior((0, 0), (9, 9)) == [(3, 3)]
    assert ws.interior((1, 1), (8, 8)) == [(0, 0), (3, 3), (9, 9)]


def test_stub_shape_and_determinism():
    grid = generate_map(200, "random", 5)
    start, goal = default_endpoints(200)
    a = stub_generate(grid, start, goal, seed=3)
    assert len(a.points) == 5 and a.points[0] == start and a.points[-1] == goal
    assert a == stub_generate(grid, start, goal, seed=3)
    assert all(0 <= p.x < 200 and 0 <= p.y < 200 for p in a.points)


def test_stub_zero_radius_lies_on_optimal_path():
    grid = generate_map(100, "random", 8)
    start, goal = default_endpoints(100)
    path = set(dijkstra_path(grid, start, goal))
    ws = stub_generate(grid, start, goal, seed=1, radius=0)
    assert set(ws.points) <= path


def test_stub_jitter_bounded():
    grid = generate_map(200, "random", 8)
    start, goal = default_endpoints(200)
    ref = stub_generate(grid, start, goal, seed=0, radius=0).points
    for seed in range(20):
        pts = stub_generate(grid, start, goal, seed=seed).points
        for p, q in zip(pts[1:-1], ref[1:-1]):
            assert max(abs(p.x - q.x), abs(p.y - q.y)) <= 10


def test_stub_edge_cases():
    assert stub_generate(GridMap(10), (3, 3), (3, 3), seed=0).points == [(3, 3)]
    with pytest.raises(UnreachableError):
        stub_generate(GridMap(20, (vbar(10, 0, 19),)), (2, 2), (18, 2), seed=0)


def test_stub_client_through_query():
    grid = generate_map(50, "random", 4)
    start, goal = default_endpoints(50)
    ws = query_waypoints(StubClient(seed=2), render_prompt(None, grid, start, goal))
    assert ws.points == stub_generate(grid, start, goal, seed=2).points
    assert ws.raw_text.startswith("Here is")


# -- live client against a local fake endpoint --------------------------------


class _Fake(BaseHTTPRequestHandler):
    replies: list = []
    seen: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((self.path, dict(self.headers), body))
        status, payload = type(self).replies.pop(0)
        data = payload.encode() if isinstance(payload, str) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def fake_server():
    _Fake.replies, _Fake.seen = [], []
    server = HTTPServer(("127.0.0.1", 0), _Fake)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1", _Fake
    server.shutdown()


def _chat(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


def test_live_client_success_and_log(fake_server, tmp_path):
    url, fake = fake_server
    fake.replies = [(200, _chat("Sure. " + DEMO_OUTPUT))]
    log = tmp_path / "llm.jsonl"
    client = ChatCompletionClient(url, "m1", "secret", log_path=log, sleep=lambda s: None)
    bundle = render_prompt(None, GridMap(50), (2, 2), (47, 47))
    ws = query_waypoints(client, bundle)
    assert len(ws.points) == 7
    path, headers, body = fake.seen[0]
    assert path == "/v1/chat/completions"
    assert headers["Authorization"] == "Bearer secret"
    assert body["model"] == "m1" and body["temperature"] == 0
    assert body["messages"][0]["content"] == bundle.text
    record = json.loads(log.read_text().splitlines()[0])
    assert record["response"].endswith(DEMO_OUTPUT)


def test_live_client_retries_then_succeeds(fake_server):
    url, fake = fake_server
    fake.replies = [(500, "oops"), (200, "not json"), (200, _chat(DEMO_OUTPUT))]
    waits = []
    client = ChatCompletionClient(url, "m", sleep=waits.append, backoff=0.5)
    assert MARKER in client.complete(render_prompt(None, GridMap(50), (2, 2), (47, 47)))
    assert waits == [0.5, 1.0]
    assert "Authorization" not in fake.seen[0][1]


def test_live_client_gives_up_after_retries(fake_server):
    url, fake = fake_server
    fake.replies = [(503, "busy")] * 4
    waits = []
    client = ChatCompletionClient(url, "m", sleep=waits.append)
    with pytest.raises(LlmTransportError):
        client.complete(render_prompt(None, GridMap(50), (2, 2), (47, 47)))
    assert len(fake.seen) == 4 and waits == [1.0, 2.0, 4.0]


def test_live_client_unreachable_host():
    client = ChatCompletionClient("http://127.0.0.1:9", "m", timeout=0.5, retries=1, sleep=lambda s: None)
    with pytest.raises(LlmError):
        client.complete(render_prompt(None, GridMap(50), (2, 2), (47, 47)))


def test_from_env(monkeypatch):
    monkeypatch.delenv("LLM_BASE_URL", raising=False)
    with pytest.raises(LlmError):
        ChatCompletionClient.from_env()
    monkeypatch.setenv("LLM_BASE_URL", "http://x/v1/")
    monkeypatch.setenv("LLM_MODEL", "qm")
    monkeypatch.setenv("LLM_API_KEY", "k")
    c = ChatCompletionClient.from_env()
    assert c.url == "http://x/v1/chat/completions" and c.model == "qm" and c.api_key == "k"
