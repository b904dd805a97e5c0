"""In-process publish-subscribe bus.

Topics are slash-separated lowercase paths; subscription patterns may use
``*`` to match exactly one segment. Delivery is at-most-once per
subscription with a bounded per-subscriber queue (overflow drops the newest
message and reports it on ``system/errors``). Sequence numbers increase
strictly per (sender, topic), and each subscriber sees that order.
"""

from __future__ import annotations

import queue
import re
import threading
from dataclasses import dataclass
from typing import Any

from ..errors import BadPattern, BusClosed, DuplicateName, WildcardPublish

_SEGMENT_RE = re.compile(r"^[a-z0-9_-]+$")

DEFAULT_QUEUE_CAPACITY = 1024


@dataclass(frozen=True)
class Message:
    topic: str
    correlation_id: str
    sender: str
    seq: int
    payload: Any  # JSON-representable

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "correlation_id": self.correlation_id,
            "sender": self.sender,
            "seq": self.seq,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Message":
        return cls(topic=data["topic"], correlation_id=data["correlation_id"],
                   sender=data["sender"], seq=data["seq"], payload=data["payload"])


def validate_topic(topic: str, allow_wildcard: bool = False) -> list[str]:
    """Split and check a topic; returns its segments."""
    if not topic or not isinstance(topic, str):
        raise BadPattern(f"topic must be a non-empty string, got {topic!r}")
    segments = topic.split("/")
    for segment in segments:
        if segment == "*":
            if not allow_wildcard:
                raise WildcardPublish(f"wildcard in published topic {topic!r}")
            continue
        if not _SEGMENT_RE.match(segment):
            raise BadPattern(f"bad topic segment {segment!r} in {topic!r}")
    return segments


def topic_matches(pattern: str, topic: str) -> bool:
    """True when the pattern covers the topic; ``*`` matches exactly one
    segment."""
    p_segments = pattern.split("/")
    t_segments = topic.split("/")
    if len(p_segments) != len(t_segments):
        return False
    return all(p == "*" or p == t for p, t in zip(p_segments, t_segments))


_CLOSED = object()  # queue sentinel


class Subscription:
    """Live stream of matching messages; close() stops delivery."""

    def __init__(self, bus: "MessageBus", agent: str, pattern: str,
                 q: queue.Queue):
        self.bus = bus
        self.agent = agent
        self.pattern = pattern
        self.queue = q
        self.active = True

    def get(self, timeout: float | None = None) -> Message | None:
        """Next message, None once the subscription (or bus) is closed.
        Raises queue.Empty on timeout."""
        value = self.queue.get(timeout=timeout)
        if value is _CLOSED:
            return None
        return value

    def close(self) -> None:
        self.bus._unsubscribe(self)


class MessageBus:
    """Topic router safe for concurrent publish/subscribe from any thread."""

    def __init__(self, queue_capacity: int = DEFAULT_QUEUE_CAPACITY):
        self._lock = threading.Lock()
        self._subscriptions: list[Subscription] = []
        self._seq: dict[tuple[str, str], int] = {}
        self._names: set[str] = set()
        self._closed = False
        self._queue_capacity = queue_capacity
        self._reporting_overflow = False

    def publish(self, topic: str, payload: Any, *, sender: str,
                correlation_id: str = "") -> int:
        """Deliver to every matching subscriber; returns how many received
        it. Publishing to zero subscribers is not an error."""
        validate_topic(topic, allow_wildcard=False)
        with self._lock:
            if self._closed:
                raise BusClosed("bus is closed")
            key = (sender, topic)
            seq = self._seq.get(key, 0) + 1
            self._seq[key] = seq
            message = Message(topic=topic, correlation_id=correlation_id,
                              sender=sender, seq=seq, payload=payload)
            delivered = 0
            overflowed: list[Subscription] = []
            for sub in self._subscriptions:
                if not sub.active or not topic_matches(sub.pattern, topic):
                    continue
                try:
                    sub.queue.put_nowait(message)
                    delivered += 1
                except queue.Full:
                    overflowed.append(sub)
            for sub in overflowed:
                self._report_overflow(sub, message)
            return delivered

    def _report_overflow(self, sub: Subscription, dropped: Message) -> None:
        # already under self._lock; guard against recursive overflow
        if self._reporting_overflow:
            return
        self._reporting_overflow = True
        try:
            diag = Message(
                topic="system/errors", correlation_id="",
                sender="bus",
                seq=self._seq.setdefault(("bus", "system/errors"), 0) + 1,
                payload={
                    "error_code": "queue_overflow",
                    "subscriber": sub.agent,
                    "pattern": sub.pattern,
                    "dropped_topic": dropped.topic,
                    "dropped_seq": dropped.seq,
                },
            )
            self._seq[("bus", "system/errors")] = diag.seq
            for other in self._subscriptions:
                if other.active and topic_matches(other.pattern, "system/errors"):
                    try:
                        other.queue.put_nowait(diag)
                    except queue.Full:
                        pass
        finally:
            self._reporting_overflow = False

    def subscribe(self, agent: str, pattern: str, *,
                  shared_queue: queue.Queue | None = None) -> Subscription:
        """Register interest in a pattern. Overlapping subscriptions by one
        agent each receive their own copy of a matching message."""
        validate_topic(pattern, allow_wildcard=True)
        q = shared_queue if shared_queue is not None else queue.Queue(
            maxsize=self._queue_capacity)
        sub = Subscription(self, agent, pattern, q)
        with self._lock:
            if self._closed:
                raise BusClosed("bus is closed")
            self._subscriptions.append(sub)
        return sub

    def _unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            sub.active = False
            if sub in self._subscriptions:
                self._subscriptions.remove(sub)
        try:
            sub.queue.put_nowait(_CLOSED)
        except queue.Full:
            pass

    # -- agent-name registry (bus-wide uniqueness) --

    def claim_name(self, name: str) -> None:
        with self._lock:
            if name in self._names:
                raise DuplicateName(f"agent name {name!r} already on this bus")
            self._names.add(name)

    def release_name(self, name: str) -> None:
        with self._lock:
            self._names.discard(name)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            subs = list(self._subscriptions)
            self._subscriptions.clear()
        for sub in subs:
            sub.active = False
            try:
                sub.queue.put_nowait(_CLOSED)
            except queue.Full:
                pass

    @property
    def closed(self) -> bool:
        return self._closed
