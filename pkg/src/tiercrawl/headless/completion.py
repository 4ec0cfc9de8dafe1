"""When is a page load finished?

The default rule is network idle: after the main document's load event, no
request may be in flight for ``idle_window`` seconds.  A hard cap of
``max_wait`` seconds from navigation start bounds pages that never go quiet.
With ``paper_parity_load_event`` the load event alone ends the capture, which
misses anything a page requests after it.
"""
from __future__ import annotations

from typing import Iterable, List, NamedTuple, Optional

from ..config import HeadlessConfig

NETWORK_IDLE = "network_idle"
TIMEOUT_EXPIRED = "timeout_expired"
LOAD_EVENT_ONLY = "load_event_only"
OUTCOMES = (NETWORK_IDLE, TIMEOUT_EXPIRED, LOAD_EVENT_ONLY)

# event kinds
START = "start"
REQUEST = "request"
FINISHED = "finished"
FAILED = "failed"
LOAD = "load"


class Event(NamedTuple):
    at: float
    kind: str
    request_id: Optional[str] = None


class Decision(NamedTuple):
    complete: bool
    outcome: Optional[str] = None
    at: Optional[float] = None


def completion_condition(events: Iterable[Event], config: HeadlessConfig, now: Optional[float] = None) -> Decision:
    """Decide from the event history whether the load is complete at time ``now``.

    ``events`` must begin with a START event.  When ``now`` is omitted the
    time of the last event is used.  The returned ``at`` is the instant the
    deciding rule fired.
    """
    events = sorted(events, key=lambda e: e.at)
    if not events or events[0].kind != START:
        raise ValueError("event history must begin with a start event")
    start = events[0].at
    if now is None:
        now = events[-1].at
    cap = start + config.max_wait

    inflight = set()
    loaded = False
    idle_since = None

    def idle_done(t):
        return loaded and not inflight and idle_since is not None and t - idle_since >= config.idle_window

    for ev in events[1:]:
        if ev.at > now:
            break
        if ev.at >= cap and not idle_done(cap):
            return Decision(True, TIMEOUT_EXPIRED, cap)
        if idle_done(ev.at):
            return Decision(True, NETWORK_IDLE, idle_since + config.idle_window)
        if ev.kind == REQUEST:
            inflight.add(ev.request_id)
            idle_since = None
        elif ev.kind in (FINISHED, FAILED):
            inflight.discard(ev.request_id)
            if loaded and not inflight and idle_since is None:
                idle_since = ev.at
        elif ev.kind == LOAD and not loaded:
            loaded = True
            if config.paper_parity_load_event:
                return Decision(True, LOAD_EVENT_ONLY, ev.at)
            if not inflight:
                idle_since = ev.at
    if idle_done(min(now, cap)):
        return Decision(True, NETWORK_IDLE, idle_since + config.idle_window)
    if now >= cap:
        return Decision(True, TIMEOUT_EXPIRED, cap)
    return Decision(False)


class CompletionTracker:
    """Incremental wrapper that also reports how long a caller may sleep."""

    def __init__(self, config: HeadlessConfig, start: float):
        self.config = config
        self.events: List[Event] = [Event(start, START)]

    @property
    def start(self) -> float:
        return self.events[0].at

    def record(self, at: float, kind: str, request_id: Optional[str] = None) -> None:
        self.events.append(Event(at, kind, request_id))

    def decide(self, now: float) -> Decision:
        return completion_condition(self.events, self.config, now)

    def next_check(self, now: float) -> float:
        """Seconds until the decision could change absent new events."""
        cap = self.start + self.config.max_wait
        return max(0.0, min(cap - now, self.config.idle_window, 0.25))
