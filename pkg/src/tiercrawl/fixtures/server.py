"""A loopback HTTP server for a generated fixture corpus.

One server process listens on the same port on three loopback addresses so
that a page can reference a second, unrelated domain (``alt``) and an ad host
(``ad``) without any DNS setup.  Placeholder tokens in served markup and
scripts are replaced by the matching origin.
"""
from __future__ import annotations

import errno
import hashlib
import mimetypes
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Dict, List, Optional, Union

from ..errors import IoFailure, PortInUse
from .generator import AD, ALT, MANIFEST_NAME, SELF, Manifest

SELF_HOST, ALT_HOST, AD_HOST = "127.0.0.1", "127.0.0.2", "127.0.0.3"
_SERVED_DIRS = ("pages", "frames", "js", "ads")
_TEXT_TYPES = {".html": "text/html; charset=utf-8", ".js": "application/javascript", ".css": "text/css"}

# 1x1 transparent GIF
_GIF = bytes.fromhex("47494638396101000100800000000000ffffff21f90401000000002c00000000010001000002024401003b")
_PNG = bytes.fromhex(
    "89504e470d0a1a0a0000000d4948445200000001000000010806000000"
    "1f15c4890000000d49444154789c6360000002000154a24f5d0000000049454e44ae426082"
)


@dataclass(frozen=True)
class LoggedRequest:
    host: str
    path: str
    status: int
    at: float


def synthesized_body(name: str) -> bytes:
    """Deterministic, per-name distinct content for a ``/r/`` resource."""
    stem, _, ext = name.rpartition(".")
    tag = hashlib.md5(name.encode()).hexdigest()
    if ext == "gif":
        return _GIF + tag.encode()
    if ext in ("png", "jpg", "jpeg"):
        return _PNG + tag.encode()
    if ext == "svg":
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="1" height="1"><desc>{tag}</desc></svg>'.encode()
    if ext == "css":
        return f"/* {tag} */\nbody {{ margin: 0; }}\n".encode()
    if ext == "js":
        return f"/* {tag} */\nvar loaded_{stem.replace('-', '_')} = true;\n".encode()
    if ext == "json":
        return f'{{"id": "{tag}"}}'.encode()
    return tag.encode()


def _content_type(name: str) -> str:
    ext = os.path.splitext(name)[1].lower()
    if ext in _TEXT_TYPES:
        return _TEXT_TYPES[ext]
    return mimetypes.guess_type(name)[0] or "application/octet-stream"


class _Handler(BaseHTTPRequestHandler):
    server_version = "fixture/1"
    protocol_version = "HTTP/1.1"
    # headers and body leave in one write; separate small writes stall on delayed ACKs
    wbufsize = 1 << 16
    disable_nagle_algorithm = True

    def log_message(self, fmt, *args):  # quiet
        pass

    def do_GET(self):
        owner: FixtureServer = self.server.owner
        path = self.path.split("?", 1)[0].split("#", 1)[0]
        status, body, ctype, headers = owner._respond(path)
        delay = owner.latency_for(path)
        if delay > 0:
            time.sleep(delay)
        owner._log(self.server.host_name, self.path, status)
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        for k, v in headers.items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)


class FixtureServer:
    """Running server handle; use as a context manager or call :meth:`stop`."""

    def __init__(
        self,
        corpus_dir,
        port: int = 0,
        latency: Union[float, Callable[[str], float]] = 0.0,
        hosts=(SELF_HOST, ALT_HOST, AD_HOST),
    ):
        self.corpus_dir = os.path.abspath(corpus_dir)
        if not os.path.exists(os.path.join(self.corpus_dir, MANIFEST_NAME)):
            raise IoFailure(f"no {MANIFEST_NAME} in {self.corpus_dir}")
        self.manifest = Manifest.load(self.corpus_dir)
        self.latency = latency
        self._log_lock = threading.Lock()
        self._requests: List[LoggedRequest] = []
        self._cache: Dict[str, bytes] = {}
        self._servers: List[ThreadingHTTPServer] = []
        self._threads: List[threading.Thread] = []
        try:
            for host in hosts:
                srv = ThreadingHTTPServer((host, port), _Handler)
                srv.daemon_threads = True
                srv.owner = self
                srv.host_name = host
                self._servers.append(srv)
                port = srv.server_address[1]
        except OSError as exc:
            self._close_servers()
            if exc.errno == errno.EADDRINUSE:
                raise PortInUse(f"port {port} is in use") from exc
            raise
        self.port = port
        self.hosts = tuple(hosts)
        for srv in self._servers:
            t = threading.Thread(target=srv.serve_forever, kwargs={"poll_interval": 0.1}, daemon=True)
            t.start()
            self._threads.append(t)

    # -- addressing ----------------------------------------------------------
    def origin_of(self, host: str) -> str:
        return f"http://{host}:{self.port}"

    @property
    def origin(self) -> str:
        return self.origin_of(self.hosts[0])

    @property
    def alt_origin(self) -> str:
        return self.origin_of(self.hosts[1 % len(self.hosts)])

    @property
    def ad_origin(self) -> str:
        return self.origin_of(self.hosts[2 % len(self.hosts)])

    @property
    def ad_host(self) -> str:
        return self.hosts[2 % len(self.hosts)]

    def expand(self, text: str) -> str:
        """Replace origin placeholders in ``text`` with this server's origins."""
        return text.replace(SELF, self.origin).replace(ALT, self.alt_origin).replace(AD, self.ad_origin)

    def url(self, path: str) -> str:
        return self.origin + path

    def page_urls(self, kinds=None) -> List[str]:
        return [self.url(p.path) for p in self.manifest.pages if kinds is None or p.kind in kinds]

    # -- request log ---------------------------------------------------------
    def _log(self, host: str, path: str, status: int):
        with self._log_lock:
            self._requests.append(LoggedRequest(host, path, status, time.monotonic()))

    def requests(self) -> List[LoggedRequest]:
        with self._log_lock:
            return list(self._requests)

    def clear_log(self):
        with self._log_lock:
            self._requests.clear()

    def latency_for(self, path: str) -> float:
        if callable(self.latency):
            return float(self.latency(path))
        return float(self.latency)

    # -- content -------------------------------------------------------------
    def _file(self, rel: str) -> Optional[bytes]:
        with self._log_lock:
            if rel in self._cache:
                return self._cache[rel]
        full = os.path.normpath(os.path.join(self.corpus_dir, rel))
        if not full.startswith(self.corpus_dir + os.sep) or not os.path.isfile(full):
            return None
        with open(full, "rb") as fh:
            data = fh.read()
        if full.endswith((".html", ".js")):
            data = self.expand(data.decode("utf-8")).encode("utf-8")
        with self._log_lock:
            self._cache[rel] = data
        return data

    def _respond(self, path: str):
        headers = {}
        parts = path.lstrip("/").split("/", 1)
        if len(parts) == 2 and parts[0] == "r" and parts[1] and "/" not in parts[1]:
            name = parts[1]
            if name.endswith("-poll.json"):
                headers["Cache-Control"] = "no-store"
            return 200, synthesized_body(name), _content_type(name), headers
        if len(parts) == 2 and parts[0] in _SERVED_DIRS:
            data = self._file(path.lstrip("/"))
            if data is not None:
                return 200, data, _content_type(path), headers
        return 404, b"not found\n", "text/plain", headers

    # -- lifecycle -----------------------------------------------------------
    def _close_servers(self):
        for srv in self._servers:
            srv.server_close()

    def stop(self):
        for srv in self._servers:
            srv.shutdown()
        for t in self._threads:
            t.join(timeout=5)
        self._close_servers()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def serve(corpus_dir, port: int = 0, latency=0.0, hosts=(SELF_HOST, ALT_HOST, AD_HOST)) -> FixtureServer:
    """Serve ``corpus_dir`` on ``port`` (0 picks a free one) across the fixture hosts."""
    return FixtureServer(corpus_dir, port, latency, hosts)
