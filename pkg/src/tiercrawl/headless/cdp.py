"""A small synchronous client for the browser remote-debugging protocol.

One websocket connection to the browser endpoint carries commands for every
attached page session (flattened sessions).  A reader thread dispatches
command results to waiting callers and events to per-session queues.
"""
from __future__ import annotations

import itertools
import json
import queue
import threading
from typing import Any, Dict, Optional

from websockets.exceptions import ConnectionClosed
from websockets.sync.client import connect

from ..errors import BrowserUnavailable, CrashedTab


class ProtocolError(RuntimeError):
    """The browser answered a command with an error object."""


class _Pending:
    __slots__ = ("event", "result", "error")

    def __init__(self):
        self.event = threading.Event()
        self.result = None
        self.error = None


class CdpConnection:
    def __init__(self, endpoint: str, timeout: float = 10.0):
        try:
            self._ws = connect(endpoint, max_size=None, open_timeout=timeout, ping_interval=None)
        except (OSError, TimeoutError, ConnectionClosed) as exc:
            raise BrowserUnavailable(f"cannot connect to browser at {endpoint}: {exc}") from exc
        self.endpoint = endpoint
        self._ids = itertools.count(1)
        self._pending: Dict[int, _Pending] = {}
        self._sessions: Dict[str, "queue.Queue"] = {}
        self._lock = threading.Lock()
        self._send_lock = threading.Lock()
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, name="cdp-reader", daemon=True)
        self._reader.start()

    def _read_loop(self):
        try:
            for raw in self._ws:
                msg = json.loads(raw)
                if "id" in msg:
                    with self._lock:
                        waiter = self._pending.pop(msg["id"], None)
                    if waiter is not None:
                        waiter.result = msg.get("result")
                        waiter.error = msg.get("error")
                        waiter.event.set()
                    continue
                sid = msg.get("sessionId")
                method = msg.get("method", "")
                if method == "Target.detachedFromTarget":
                    sid = msg.get("params", {}).get("sessionId", sid)
                with self._lock:
                    q = self._sessions.get(sid) if sid else None
                if q is not None:
                    q.put(msg)
        except ConnectionClosed:
            pass
        finally:
            self._closed = True
            with self._lock:
                waiters = list(self._pending.values())
                self._pending.clear()
                queues = list(self._sessions.values())
            for w in waiters:
                w.error = {"message": "browser connection closed"}
                w.event.set()
            for q in queues:
                q.put({"method": "Inspector.detached", "params": {"reason": "connection closed"}})

    @property
    def closed(self) -> bool:
        return self._closed

    def send(self, method: str, params: Optional[dict] = None, session_id: Optional[str] = None,
             timeout: float = 30.0) -> Any:
        if self._closed:
            raise BrowserUnavailable("browser connection is closed")
        msg_id = next(self._ids)
        msg = {"id": msg_id, "method": method, "params": params or {}}
        if session_id:
            msg["sessionId"] = session_id
        waiter = _Pending()
        with self._lock:
            self._pending[msg_id] = waiter
        try:
            with self._send_lock:
                self._ws.send(json.dumps(msg))
        except ConnectionClosed as exc:
            with self._lock:
                self._pending.pop(msg_id, None)
            raise BrowserUnavailable("browser connection closed") from exc
        if not waiter.event.wait(timeout):
            with self._lock:
                self._pending.pop(msg_id, None)
            raise TimeoutError(f"{method} got no reply within {timeout}s")
        if waiter.error is not None:
            text = waiter.error.get("message", str(waiter.error))
            if self._closed or "session" in text.lower() or "crash" in text.lower():
                raise CrashedTab(f"{method}: {text}")
            raise ProtocolError(f"{method}: {text}")
        return waiter.result or {}

    def subscribe(self, session_id: str) -> "queue.Queue":
        q: "queue.Queue" = queue.Queue()
        with self._lock:
            self._sessions[session_id] = q
        return q

    def unsubscribe(self, session_id: str) -> None:
        with self._lock:
            self._sessions.pop(session_id, None)

    def close(self) -> None:
        try:
            self._ws.close()
        except Exception:  # already gone
            pass
        self._reader.join(timeout=5)
