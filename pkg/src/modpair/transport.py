"""Optional HTTP adapter exposing the two wire endpoints for one instance.

GET /api/v1/tfidf and GET /api/v1/model return the same canonical bytes the
in-process simulator serves, with the artifact version in a response header.
The simulator itself never opens sockets; this exists so the endpoints are
real and testable against an actual transport.
"""

from __future__ import annotations

import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .classifier import LinearModel, model_from_bytes
from .errors import PeerUnavailableError
from .fedsim import FediverseSim
from .textproc import TfIdfProfile, profile_from_bytes

VERSION_HEADER = "X-Artifact-Version"
PROFILE_PATH = "/api/v1/tfidf"
MODEL_PATH = "/api/v1/model"


class _InstanceHandler(BaseHTTPRequestHandler):
    sim: FediverseSim
    domain: str

    def log_message(self, *args):  # keep test output quiet
        pass

    def _respond(self, payload: bytes, version: int) -> None:
        self.send_response(200)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header(VERSION_HEADER, str(version))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):
        try:
            if self.path == PROFILE_PATH:
                self._respond(
                    self.sim.serve_profile(self.domain),
                    self.sim.profile_version(self.domain),
                )
            elif self.path == MODEL_PATH:
                self._respond(
                    self.sim.serve_model(self.domain),
                    self.sim.model_version(self.domain),
                )
            else:
                self.send_error(404, "unknown endpoint")
        except PeerUnavailableError:
            self.send_response(503)
            self.send_header("Retry-After", str(int(self.sim.clock.refresh_period)))
            self.end_headers()


def serve_instance(
    sim: FediverseSim, domain: str, port: int = 0
) -> ThreadingHTTPServer:
    """Start serving one instance's endpoints on localhost; caller shuts down."""
    handler = type(
        "BoundHandler", (_InstanceHandler,), {"sim": sim, "domain": domain}
    )
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def _http_get(url: str) -> tuple[bytes, int]:
    try:
        with urllib.request.urlopen(url) as response:
            return response.read(), int(response.headers[VERSION_HEADER])
    except urllib.error.HTTPError as exc:
        if exc.code == 503:
            raise PeerUnavailableError(f"{url} not published yet") from exc
        raise


def http_fetch_profile(base_url: str) -> tuple[TfIdfProfile, int]:
    payload, version = _http_get(base_url.rstrip("/") + PROFILE_PATH)
    return profile_from_bytes(payload), version


def http_fetch_model(base_url: str) -> tuple[LinearModel, int]:
    payload, version = _http_get(base_url.rstrip("/") + MODEL_PATH)
    return model_from_bytes(payload), version
