"""Locating, launching and connecting to a headless browser."""
from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
import threading
import time
from typing import List, Optional

from ..config import BROWSER_EXECUTABLE_ENV, HeadlessConfig
from ..errors import BrowserUnavailable
from .cdp import CdpConnection

_CANDIDATES = (
    "chromium",
    "chromium-browser",
    "google-chrome",
    "google-chrome-stable",
    "chrome",
    "headless_shell",
    "chrome-headless-shell",
)
_FALLBACK_PATHS = ("/tmp/chromium",)
_LISTENING_RE = re.compile(r"DevTools listening on (ws://\S+)")

LAUNCH_ARGS = (
    "--headless=new",
    "--no-sandbox",
    "--no-zygote",
    "--disable-gpu",
    "--disable-dev-shm-usage",
    "--no-first-run",
    "--no-default-browser-check",
    "--disable-background-networking",
    "--disable-component-update",
    "--disable-sync",
    "--disable-extensions",
    "--mute-audio",
    "--remote-debugging-port=0",
    # keep cross-origin frames in the page's own target so one session sees every request
    "--disable-features=IsolateOrigins,site-per-process,HttpsUpgrades",
    "--disable-site-isolation-trials",
)


def find_browser(explicit: Optional[str] = None) -> Optional[str]:
    """Path of a usable browser executable, or None."""
    for cand in (explicit, os.environ.get(BROWSER_EXECUTABLE_ENV)):
        if cand:
            path = shutil.which(cand) or (cand if os.path.isfile(cand) else None)
            if path:
                return path
    for name in _CANDIDATES:
        path = shutil.which(name)
        if path:
            return path
    for path in _FALLBACK_PATHS:
        if os.path.isfile(path) and os.access(path, os.X_OK):
            return path
    return None


class ManagedBrowser:
    """A browser process started by the tier and torn down with it."""

    def __init__(self, executable: str, extra_args: List[str] = (), launch_timeout: float = 20.0):
        self.profile = tempfile.mkdtemp(prefix="tiercrawl-browser-")
        args = [executable, *LAUNCH_ARGS, f"--user-data-dir={self.profile}", *extra_args, "about:blank"]
        try:
            self.proc = subprocess.Popen(
                args, stdout=subprocess.DEVNULL, stderr=subprocess.PIPE, text=True, errors="replace"
            )
        except OSError as exc:
            shutil.rmtree(self.profile, ignore_errors=True)
            raise BrowserUnavailable(f"cannot start {executable}: {exc}") from exc
        self.endpoint = self._await_endpoint(launch_timeout)

    def _await_endpoint(self, limit: float) -> str:
        found: List[str] = []
        done = threading.Event()

        def pump():
            for line in self.proc.stderr:
                if not found:
                    m = _LISTENING_RE.search(line)
                    if m:
                        found.append(m.group(1))
                        done.set()
            done.set()

        threading.Thread(target=pump, daemon=True).start()
        deadline = time.monotonic() + limit
        while not done.wait(0.05):
            if time.monotonic() > deadline:
                break
        if not found:
            self.close()
            raise BrowserUnavailable("browser did not report a debugging endpoint")
        return found[0]

    def close(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(5)
        shutil.rmtree(self.profile, ignore_errors=True)


class Browser:
    """A protocol connection, plus the managed process when we launched one."""

    def __init__(self, config: Optional[HeadlessConfig] = None):
        self.config = config or HeadlessConfig()
        self.managed: Optional[ManagedBrowser] = None
        endpoint = self.config.resolved_endpoint()
        if endpoint is None:
            exe = find_browser(self.config.executable)
            if exe is None:
                raise BrowserUnavailable(
                    "no browser endpoint configured and no browser executable found "
                    f"(set {BROWSER_EXECUTABLE_ENV} or headless.endpoint)"
                )
            self.managed = ManagedBrowser(exe, self.config.extra_args, self.config.launch_timeout)
            endpoint = self.managed.endpoint
        try:
            self.conn = CdpConnection(endpoint, timeout=self.config.launch_timeout)
        except BrowserUnavailable:
            if self.managed:
                self.managed.close()
            raise

    def close(self):
        self.conn.close()
        if self.managed:
            self.managed.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def browser_available(config: Optional[HeadlessConfig] = None) -> bool:
    config = config or HeadlessConfig()
    return bool(config.resolved_endpoint() or find_browser(config.executable))
