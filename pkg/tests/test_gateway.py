from __future__ import annotations

import statistics
import threading
import time

from websockets.sync.client import connect as ws_connect

from fieldvision.broker import Broker, TOPIC_BBOXES, TOPIC_DETECTIONS
from fieldvision.gateway import GatewayLink, GatewayServer, listener_run
from fieldvision.wire import DetectionMessage, encode

from test_wire import GOLDEN_MESSAGE


def make_message(frame_id: int, timestamp: float = 0.0) -> DetectionMessage:
    return DetectionMessage(
        schema_version=1,
        frame_id=frame_id,
        timestamp=timestamp,
        frame_w=640,
        frame_h=480,
        detections=GOLDEN_MESSAGE.detections,
    )


def start_listener(url, received, count_event=None):
    """listener_run in a thread with its own broker; returns (link, broker, thread)."""
    broker = Broker()
    broker.register(TOPIC_BBOXES)
    link = GatewayLink(url, open_timeout=2.0)

    def on_message(msg):
        received.append(msg)
        if count_event and count_event[0] <= len(received):
            count_event[1].set()

    thread = threading.Thread(
        target=listener_run, args=(link, broker), kwargs={"on_message": on_message}, daemon=True
    )
    thread.start()
    return link, broker, thread


def wait_until(predicate, timeout=5.0, step=0.005):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(step)
    return predicate()


def test_loopback_round_trip_preserves_content():
    server_broker = Broker()
    with GatewayServer(server_broker, port=0) as server:
        received = []
        link, listener_broker, thread = start_listener(
            f"ws://127.0.0.1:{server.port}", received
        )
        sub = listener_broker.subscribe(TOPIC_BBOXES)
        assert wait_until(lambda: server.connections >= 1)
        msg = GOLDEN_MESSAGE
        server_broker.publish(TOPIC_DETECTIONS, msg)
        assert wait_until(lambda: len(received) == 1)
        assert received[0] == msg.quantized()
        assert sub.get(timeout=1.0) == msg.quantized()
        link.stop()
        thread.join(timeout=5)


def test_malformed_frame_is_counted_and_link_stays_up():
    broker = Broker()
    with GatewayServer(broker, port=0) as server:
        egress_sub = broker.subscribe(TOPIC_BBOXES)
        with ws_connect(f"ws://127.0.0.1:{server.port}") as ws:
            ws.send("this is not json")
            ws.send('{"schema_version": 1}')  # valid json, invalid schema
            ws.send(encode(GOLDEN_MESSAGE).decode("utf-8"))
            assert egress_sub.get(timeout=2.0) == GOLDEN_MESSAGE
        assert server.decode_errors == 2


def test_listener_skips_malformed_and_keeps_order():
    server_broker = Broker()
    with GatewayServer(server_broker, port=0) as server:
        received = []
        link, _, thread = start_listener(f"ws://127.0.0.1:{server.port}", received)
        assert wait_until(lambda: server.connections >= 1)
        for i in range(5):
            server_broker.publish(TOPIC_DETECTIONS, make_message(i))
        assert wait_until(lambda: len(received) == 5)
        assert [m.frame_id for m in received] == list(range(5))
        link.stop()
        thread.join(timeout=5)


def test_listener_republishes_n_minus_one_on_one_malformed():
    # drive the link directly from a raw server that injects one bad frame
    from websockets.sync.server import serve

    frames = [encode(make_message(i)).decode() for i in range(3)]
    frames.insert(2, "garbage{{{")
    sent = threading.Event()

    def handler(ws):
        for f in frames:
            ws.send(f)
        sent.wait(5.0)

    raw_server = serve(handler, "127.0.0.1", 0)
    port = raw_server.socket.getsockname()[1]
    st = threading.Thread(target=raw_server.serve_forever, daemon=True)
    st.start()
    try:
        received = []
        link, broker, thread = start_listener(f"ws://127.0.0.1:{port}", received)
        assert wait_until(lambda: len(received) == 3)
        time.sleep(0.1)
        assert len(received) == 3  # the malformed frame was skipped, not fatal
        link.stop()
        sent.set()
        thread.join(timeout=5)
    finally:
        raw_server.shutdown()


def test_reconnect_after_server_restart():
    server_broker = Broker()
    server = GatewayServer(server_broker, port=0).start()
    port = server.port
    received = []
    link, _, thread = start_listener(f"ws://127.0.0.1:{port}", received)
    assert wait_until(lambda: server.connections >= 1)
    server_broker.publish(TOPIC_DETECTIONS, make_message(0))
    assert wait_until(lambda: len(received) == 1)

    server.close()
    time.sleep(0.3)  # let the client notice and begin backing off

    server_broker2 = Broker()
    server2 = GatewayServer(server_broker2, port=port).start()
    try:
        assert wait_until(lambda: server2.connections >= 1, timeout=10)
        server_broker2.publish(TOPIC_DETECTIONS, make_message(1))
        assert wait_until(lambda: len(received) == 2, timeout=10)
        assert [m.frame_id for m in received] == [0, 1]  # no duplicated delivery
        assert link.reconnects <= 5
    finally:
        link.stop()
        thread.join(timeout=5)
        server2.close()


def test_link_backs_off_while_endpoint_down():
    link = GatewayLink("ws://127.0.0.1:1", open_timeout=0.2)  # nothing listens on port 1

    def run():
        for _ in link.frames():
            pass

    t = threading.Thread(target=run, daemon=True)
    t.start()
    time.sleep(0.8)
    link.stop()
    t.join(timeout=5)
    assert link.connects == 0


def test_added_latency_median_under_5ms():
    server_broker = Broker()
    with GatewayServer(server_broker, port=0) as server:
        delays = []
        send_times = {}
        broker = Broker()
        broker.register(TOPIC_BBOXES)
        link = GatewayLink(f"ws://127.0.0.1:{server.port}", open_timeout=2.0)

        def on_message(msg):
            delays.append(time.monotonic() - send_times[msg.frame_id])

        thread = threading.Thread(
            target=listener_run, args=(link, broker), kwargs={"on_message": on_message},
            daemon=True,
        )
        thread.start()
        assert wait_until(lambda: server.connections >= 1)
        n = 40
        for i in range(n):
            send_times[i] = time.monotonic()
            server_broker.publish(TOPIC_DETECTIONS, make_message(i))
            time.sleep(0.05)  # 20 msg/s
        assert wait_until(lambda: len(delays) == n)
        link.stop()
        thread.join(timeout=5)
    assert statistics.median(delays) < 0.005
