import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest


class StubHandler(BaseHTTPRequestHandler):
    """Replays scripted (status, body) responses and records every request."""

    def _reply(self):
        status, body = self.server.script.pop(0) if self.server.script else (200, {})
        data = body if isinstance(body, bytes) else json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        self.server.requests.append((self.path, json.loads(raw) if raw else None))
        self._reply()

    def do_GET(self):
        self.server.requests.append((self.path, None))
        self._reply()

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_service():
    server = HTTPServer(("127.0.0.1", 0), StubHandler)
    server.script = []
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        thread.join()
