"""WebSocket gateway between the detection process and the listener process.

The server side broadcasts every message published on its broker's ingress
topic to all connected peers as JSON text frames, and publishes frames it
receives onto the egress topic. The client side (`GatewayLink` plus
`listener_run`) maintains a reconnecting connection and republishes decoded
messages locally. Malformed frames are logged, counted, and skipped; the
stream keeps flowing.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable, Iterator

from websockets.exceptions import ConnectionClosed, InvalidHandshake, InvalidURI
from websockets.sync.client import connect as ws_connect
from websockets.sync.server import serve as ws_serve

from .broker import Broker, Subscription, TOPIC_BBOXES, TOPIC_DETECTIONS
from .errors import SubscriptionClosed, VisionError, WireParseError, WireValidationError
from .wire import DetectionMessage, decode, encode

log = logging.getLogger(__name__)

DEFAULT_PORT = 8765
RECONNECT_INITIAL = 0.1
RECONNECT_CAP = 5.0


class GatewayServer:
    """Bridges a local broker onto a WebSocket port.

    ingress topic -> all connected peers; peer frames -> egress topic.
    """

    def __init__(
        self,
        broker: Broker,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        ingress: str = TOPIC_DETECTIONS,
        egress: str = TOPIC_BBOXES,
        queue_capacity: int = 16,
    ):
        self.broker = broker
        self.ingress = ingress
        self.egress = egress
        self.queue_capacity = queue_capacity
        self.decode_errors = 0
        self.connections = 0
        broker.register(ingress)
        broker.register(egress)
        self._server = ws_serve(self._handle, host, port)
        self._port = self._server.socket.getsockname()[1]
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="gateway-server", daemon=True
        )
        self._peers: set = set()
        self._peers_lock = threading.Lock()
        self._closed = False

    @property
    def port(self) -> int:
        return self._port

    def start(self) -> GatewayServer:
        self._thread.start()
        return self

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self._server.shutdown()
        # shutdown() only stops the listener; established connections must be
        # closed explicitly or peers would not notice the restart for ages
        with self._peers_lock:
            peers = list(self._peers)
        for ws in peers:
            try:
                ws.close()
            except Exception:
                pass
        if self._thread.is_alive():
            self._thread.join(timeout=5.0)

    def __enter__(self) -> GatewayServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()

    def _handle(self, ws) -> None:
        self.connections += 1
        with self._peers_lock:
            self._peers.add(ws)
        sub = self.broker.subscribe(self.ingress, capacity=self.queue_capacity)
        stop = threading.Event()
        sender = threading.Thread(
            target=self._pump, args=(ws, sub, stop), name="gateway-sender", daemon=True
        )
        sender.start()
        try:
            for frame in ws:
                try:
                    msg = decode(frame)
                except (WireParseError, WireValidationError) as exc:
                    self.decode_errors += 1
                    log.warning("gateway: dropping malformed frame: %s", exc)
                    continue
                self.broker.publish(self.egress, msg)
        except ConnectionClosed:
            pass
        finally:
            stop.set()
            with self._peers_lock:
                self._peers.discard(ws)
            self.broker.unsubscribe(sub)
            sender.join(timeout=2.0)

    def _pump(self, ws, sub: Subscription, stop: threading.Event) -> None:
        while not stop.is_set():
            try:
                msg = sub.get(timeout=0.1)
            except TimeoutError:
                continue
            except SubscriptionClosed:
                return
            try:
                ws.send(encode(msg).decode("utf-8"))
            except (ConnectionClosed, OSError):
                return


class GatewayLink:
    """Client connection that reconnects with exponential backoff.

    Backoff starts at 100 ms and doubles up to 5 s; each successful
    connection resets it. `reconnects` counts connection attempts after the
    first successful one.
    """

    def __init__(
        self,
        url: str,
        initial_backoff: float = RECONNECT_INITIAL,
        max_backoff: float = RECONNECT_CAP,
        open_timeout: float = 2.0,
    ):
        self.url = url
        self.initial_backoff = initial_backoff
        self.max_backoff = max_backoff
        self.open_timeout = open_timeout
        self.reconnects = 0
        self.connects = 0
        self._stop = threading.Event()
        self._ws = None

    def stop(self) -> None:
        self._stop.set()
        ws = self._ws
        if ws is not None:
            try:
                ws.close()
            except Exception:
                pass

    close = stop

    def frames(self) -> Iterator[str]:
        """Yield raw text frames until `stop()`; reconnects on any drop."""
        backoff = self.initial_backoff
        while not self._stop.is_set():
            try:
                ws = ws_connect(self.url, open_timeout=self.open_timeout)
            except (OSError, InvalidHandshake, InvalidURI, TimeoutError) as exc:
                if self.connects > 0:
                    self.reconnects += 1
                log.debug("gateway link: connect to %s failed (%s); retry in %.2fs",
                          self.url, exc, backoff)
                if self._stop.wait(backoff):
                    return
                backoff = min(backoff * 2.0, self.max_backoff)
                continue
            if self.connects > 0:
                self.reconnects += 1
            self.connects += 1
            backoff = self.initial_backoff
            log.info("gateway link: connected to %s", self.url)
            self._ws = ws
            try:
                while not self._stop.is_set():
                    try:
                        yield ws.recv(timeout=0.1)
                    except TimeoutError:
                        continue
            except ConnectionClosed as exc:
                log.warning("gateway link: connection lost (%s); reconnecting", exc)
            finally:
                self._ws = None
                try:
                    ws.close()
                except Exception:
                    pass


def listener_run(
    link: GatewayLink,
    broker: Broker,
    egress: str = TOPIC_BBOXES,
    on_message: Callable[[DetectionMessage], None] | None = None,
) -> int:
    """Republish every decodable frame from `link` onto the egress topic.

    Runs until the link is stopped; malformed frames are logged and skipped.
    Returns the number of messages republished.
    """
    broker.register(egress)
    republished = 0
    try:
        for frame in link.frames():
            try:
                msg = decode(frame)
            except (WireParseError, WireValidationError) as exc:
                log.warning("listener: skipping malformed message: %s", exc)
                continue
            broker.publish(egress, msg)
            republished += 1
            log.debug("listener: republished frame %d with %d detections",
                      msg.frame_id, len(msg.detections))
            if on_message is not None:
                on_message(msg)
    finally:
        link.stop()
    return republished


def connect_or_raise(url: str, open_timeout: float = 2.0):
    """One-shot connect used by probes; raises VisionError on failure."""
    try:
        return ws_connect(url, open_timeout=open_timeout)
    except (OSError, InvalidHandshake, InvalidURI, TimeoutError) as exc:
        raise VisionError(f"cannot reach {url}: {exc}") from exc
