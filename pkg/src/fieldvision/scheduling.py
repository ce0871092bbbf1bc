"""Inference-load control: frame skipping, rate limiting, FPS measurement.

Everything here is driven by caller-supplied timestamps or an injected
clock, so scheduling behavior is fully deterministic under `ManualClock`.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Protocol

from .errors import ClockSkewError, NoDataError

DEFAULT_RATE_CAP = 20.0
DEFAULT_FPS_WINDOW = 60.0


class AdmissionStrategy(Protocol):
    """Decides whether a frame index enters the inference pipeline.

    Only the static stride policy ships; adaptive policies (load-based
    stride, resolution scaling) can plug in behind the same call.
    """

    def accept(self, frame_index: int) -> bool: ...


class FrameSkipper:
    """Admits every nth frame by index."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"stride must be >= 1, got {n}")
        self.n = n
        self.counter = 0

    def accept(self, frame_index: int) -> bool:
        if frame_index < 0:
            raise ValueError(f"negative frame index {frame_index}")
        return frame_index % self.n == 0

    def offer(self) -> bool:
        """Stateful form: feed frames in arrival order without tracking indices."""
        index = self.counter
        self.counter += 1
        return self.accept(index)


class RateLimiter:
    """Token bucket capped at one stored token.

    The single-token cap keeps bursts at `cap + 1` over any window, which is
    what a detection-rate limit wants: smooth admission, no catch-up bursts
    after a stall.
    """

    def __init__(self, max_per_second: float):
        if max_per_second <= 0:
            raise ValueError(f"rate cap must be positive, got {max_per_second}")
        self.max_per_second = max_per_second
        self._tokens = 1.0
        self._last: float | None = None

    def allow(self, now: float) -> bool:
        if self._last is not None:
            if now < self._last:
                raise ClockSkewError(f"clock went backwards: {self._last} -> {now}")
            self._tokens = min(1.0, self._tokens + (now - self._last) * self.max_per_second)
        self._last = now
        # epsilon absorbs float jitter in the refill sum; without it a
        # 1.0-2e-16 bucket waits a full extra period and the cap then
        # discards the overshoot, so the shortfall would accumulate
        if self._tokens >= 1.0 - 1e-9:
            self._tokens = max(0.0, self._tokens - 1.0)
            return True
        return False


class FpsMeter:
    """Completions per second over a sliding window of timestamps.

    Thread-safe: the pipeline ticks from its worker while reporters poll.
    """

    def __init__(self, window: float = DEFAULT_FPS_WINDOW):
        if window <= 0:
            raise ValueError(f"window must be positive, got {window}")
        self.window = window
        self._ticks: deque[float] = deque()
        self._ever_ticked = False
        self._latest = float("-inf")
        self._lock = threading.Lock()

    def tick(self, now: float) -> None:
        with self._lock:
            if now < self._latest:
                raise ClockSkewError(f"clock went backwards: {self._latest} -> {now}")
            self._latest = now
            self._ever_ticked = True
            self._ticks.append(now)

    def report(self, now: float) -> float:
        with self._lock:
            if not self._ever_ticked:
                raise NoDataError("no completions have been recorded")
            if now < self._latest:
                raise ClockSkewError(f"clock went backwards: {self._latest} -> {now}")
            cutoff = now - self.window
            while self._ticks and self._ticks[0] < cutoff:
                self._ticks.popleft()
            return len(self._ticks) / self.window
