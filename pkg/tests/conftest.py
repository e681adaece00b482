"""Shared fixtures: an in-process stub HTTP server speaking the wire formats
(chat completions, embeddings, NLI contradiction scores) with scriptable
replies, failure injection, and request recording."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class StubState:
    """Mutable behavior of the stub endpoint, shared with the test."""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.requests: list[tuple[str, dict, dict]] = []  # (path, headers, body)
        self.chat_replies: list[str] = ["A"]
        self.chat_calls = 0
        self.embed_calls = 0
        # Statuses to emit (and consume) before serving real replies.
        self.fail_statuses: list[int] = []
        self.raw_body: bytes | None = None  # overrides everything when set
        self.embed_fn = lambda text, model: [1.0, 0.0, 0.0, 0.0]
        self.nli_fn = lambda premise, hypothesis: 0.0

    def record(self, path: str, headers: dict, body: dict) -> None:
        with self.lock:
            self.requests.append((path, headers, body))

    def next_failure(self) -> int | None:
        with self.lock:
            if self.fail_statuses:
                return self.fail_statuses.pop(0)
        return None

    def next_chat_reply(self) -> str:
        with self.lock:
            reply = self.chat_replies[self.chat_calls % len(self.chat_replies)]
            self.chat_calls += 1
            return reply

    def count_embed(self) -> None:
        with self.lock:
            self.embed_calls += 1


class _Handler(BaseHTTPRequestHandler):
    state: StubState

    def log_message(self, *args) -> None:  # keep test output quiet
        pass

    def _send_json(self, status: int, obj: dict) -> None:
        data = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self) -> None:  # noqa: N802 (http.server API)
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length) or b"{}")
        headers = {k: v for k, v in self.headers.items()}
        self.state.record(self.path, headers, body)

        if self.state.raw_body is not None:
            self.send_response(200)
            self.send_header("Content-Length", str(len(self.state.raw_body)))
            self.end_headers()
            self.wfile.write(self.state.raw_body)
            return
        failure = self.state.next_failure()
        if failure is not None:
            self._send_json(failure, {"error": f"injected {failure}"})
            return

        try:
            if self.path.endswith("/chat/completions"):
                reply = self.state.next_chat_reply()
                self._send_json(200, {"choices": [{"message": {"content": reply}}]})
            elif self.path.endswith("/embeddings"):
                self.state.count_embed()
                vector = self.state.embed_fn(body.get("input", ""), body.get("model", ""))
                self._send_json(200, {"data": [{"embedding": vector}]})
            elif self.path.endswith("/nli") or self.path == "/":
                score = self.state.nli_fn(body.get("premise", ""), body.get("hypothesis", ""))
                self._send_json(200, {"contradiction": score})
            else:
                self._send_json(404, {"error": "unknown path"})
        except Exception as exc:  # scripted failures map to HTTP 500
            self._send_json(500, {"error": repr(exc)})


class StubServer:
    def __init__(self) -> None:
        self.state = StubState()
        handler = type("Handler", (_Handler,), {"state": self.state})
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def close(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub():
    server = StubServer()
    yield server
    server.close()
