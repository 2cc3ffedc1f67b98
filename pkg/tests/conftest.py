from __future__ import annotations

import threading
from datetime import datetime, timedelta
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from toolseek.engine import Engine
from toolseek.store import MemoryDocumentStore
from toolseek.terminology import load_terminology

DATA = Path(__file__).parent / "data"

F1_REVIEWERS = ("emerie", "jeseale", "fabien", "claudia")


@pytest.fixture(scope="session")
def f1_terminology_text() -> str:
    return (DATA / "f1_terminology.json").read_text("utf-8")


@pytest.fixture(scope="session")
def f1_tools_lines() -> list[str]:
    return (DATA / "f1_tools.jsonl").read_text("utf-8").splitlines()


@pytest.fixture(scope="session")
def f1_graph(f1_terminology_text):
    return load_terminology(f1_terminology_text)


class SimClock:
    """Injectable clock; every call advances by `step` to keep timestamps unique."""

    def __init__(self, start="2026-01-01T00:00:00+00:00", step_seconds=1.0):
        self.now = datetime.fromisoformat(start)
        self.step = timedelta(seconds=step_seconds)

    def __call__(self) -> datetime:
        current = self.now
        self.now = self.now + self.step
        return current

    def advance(self, **kwargs) -> None:
        self.now = self.now + timedelta(**kwargs)


def seed_f1(engine: Engine, tools_lines: list[str], *, with_reviews=True) -> None:
    report = engine.registry.ingest_records(tools_lines)
    assert report.accepted == 4 and not report.rejected, report
    if not with_reviews:
        return
    for user in F1_REVIEWERS:
        engine.community.create_user(user, user.title())
        engine.community.add_review(user, "TOOL_000001", 5)
    engine.community.create_user("dana", "Dana")
    engine.community.add_review("dana", "TOOL_000003", 4)


@pytest.fixture
def f1_engine(f1_graph, f1_tools_lines) -> Engine:
    engine = Engine(MemoryDocumentStore(), f1_graph, clock=SimClock())
    seed_f1(engine, f1_tools_lines)
    return engine


# accession constants for readability in tests
SAMTOOLS = "TOOL_000001"
QCHECK = "TOOL_000002"
DESEEKER = "TOOL_000003"
SNPFINDR = "TOOL_000004"


class _StubHandler(BaseHTTPRequestHandler):
    """Scriptable HTTP stub. Routes configured via server.routes:
    path -> int status | ("redirect", location) | ("sleep", seconds)."""

    def _respond(self):
        import time as _time
        self.server.access_log.append((_time.monotonic(), self.path,
                                       self.headers.get("User-Agent", "")))
        action = self.server.routes.get(self.path, 404)
        if isinstance(action, tuple) and action[0] == "redirect":
            self.send_response(301)
            self.send_header("Location", action[1])
            self.end_headers()
            return
        if isinstance(action, tuple) and action[0] == "sleep":
            _time.sleep(action[1])
            self.send_response(200)
            self.end_headers()
            return
        self.send_response(int(action))
        self.end_headers()

    do_GET = _respond
    do_HEAD = _respond

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.routes = {}
    server.access_log = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield server, base
    server.shutdown()
    server.server_close()
