"""The script-executing crawler tier, driven over the browser debugging protocol."""
from .browser import Browser, browser_available, find_browser
from .capture import CapturedRequest, HeadlessCapture, HeadlessTier, fetch_headless
from .completion import (
    LOAD_EVENT_ONLY,
    NETWORK_IDLE,
    TIMEOUT_EXPIRED,
    CompletionTracker,
    Event,
    completion_condition,
)

__all__ = [
    "Browser", "browser_available", "find_browser", "CapturedRequest", "HeadlessCapture",
    "HeadlessTier", "fetch_headless", "LOAD_EVENT_ONLY", "NETWORK_IDLE", "TIMEOUT_EXPIRED",
    "CompletionTracker", "Event", "completion_condition",
]
