"""In-process topic bus with bounded per-subscriber queues.

Publishing never blocks: when a subscriber's queue is full the oldest
message is dropped and counted. A robot should act on the freshest
detection; stale ones are worthless.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

from .errors import SubscriptionClosed, TopicError

DEFAULT_QUEUE_CAPACITY = 16

TOPIC_DETECTIONS = "/yolo/detections"
TOPIC_BBOXES = "/yolo/bboxes"


@dataclass(frozen=True)
class Topic:
    name: str
    kind: str = "detections"

    def __post_init__(self):
        if not self.name or not self.name.startswith("/"):
            raise TopicError(f"topic name must be slash-rooted, got {self.name!r}")


class Subscription:
    """Single-consumer bounded queue attached to one topic."""

    def __init__(self, topic: Topic, capacity: int = DEFAULT_QUEUE_CAPACITY):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.topic = topic
        self.capacity = capacity
        self.dropped = 0
        self._items: deque = deque()
        self._cond = threading.Condition()
        self._closed = False

    def _offer(self, message) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._items) >= self.capacity:
                self._items.popleft()
                self.dropped += 1
            self._items.append(message)
            self._cond.notify()

    def get(self, timeout: float | None = None):
        """Next message in publish order; raises TimeoutError on timeout and
        SubscriptionClosed once closed and drained."""
        with self._cond:
            while not self._items:
                if self._closed:
                    raise SubscriptionClosed(f"subscription to {self.topic.name} closed")
                if not self._cond.wait(timeout=timeout):
                    raise TimeoutError(f"no message on {self.topic.name} within {timeout}s")
            return self._items.popleft()

    def poll(self):
        with self._cond:
            if self._items:
                return self._items.popleft()
            return None

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)


class Broker:
    """Thread-safe topic registry and fan-out."""

    def __init__(self):
        self._topics: dict[str, Topic] = {}
        self._subs: dict[str, list[Subscription]] = {}
        self._lock = threading.Lock()

    def register(self, name: str, kind: str = "detections") -> Topic:
        with self._lock:
            existing = self._topics.get(name)
            if existing is not None:
                if existing.kind != kind:
                    raise TopicError(f"topic {name} already registered with kind {existing.kind}")
                return existing
            topic = Topic(name=name, kind=kind)
            self._topics[name] = topic
            self._subs[name] = []
            return topic

    def topics(self) -> list[Topic]:
        with self._lock:
            return list(self._topics.values())

    def subscribe(self, name: str, capacity: int = DEFAULT_QUEUE_CAPACITY) -> Subscription:
        with self._lock:
            topic = self._topics.get(name)
            if topic is None:
                raise TopicError(f"no such topic {name!r}")
            sub = Subscription(topic, capacity=capacity)
            self._subs[name].append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            subs = self._subs.get(sub.topic.name, [])
            if sub in subs:
                subs.remove(sub)
        sub.close()

    def pending(self, name: str) -> int:
        """Deepest subscriber queue on a topic; 0 when everything drained."""
        with self._lock:
            if name not in self._topics:
                raise TopicError(f"no such topic {name!r}")
            subs = list(self._subs[name])
        return max((len(s) for s in subs), default=0)

    def publish(self, name: str, message) -> int:
        """Deliver to every subscriber queue; returns the subscriber count.

        Never blocks the publisher: full queues drop their oldest entry.
        """
        with self._lock:
            if name not in self._topics:
                raise TopicError(f"no such topic {name!r}")
            subs = list(self._subs[name])
        for sub in subs:
            sub._offer(message)
        return len(subs)
