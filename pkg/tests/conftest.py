"""Shared fixture builders: synthetic frames, rendered shapes, fake servers."""

from __future__ import annotations

import math
import threading

import pytest

from fieldvision.boxes import Detection, DetectionSet, FrameMeta, PixelBox
from fieldvision.geometric import GeoProfile, Mask, parse_profile
from fieldvision.image import Image

GREEN = (30, 120, 40)
ORANGE_BRIGHT = (235, 120, 20)   # hue ~28, s ~0.91, v ~0.92
ORANGE_DIM = (110, 56, 9)        # same hue, v ~0.43
RED = (200, 30, 36)
BLUE_ARROW = (30, 60, 220)


def solid_image(width: int, height: int, color=GREEN) -> Image:
    return Image.filled(width, height, color)


def draw_disk(img: Image, cx: float, cy: float, r: float, color) -> None:
    """Hard-edged disk; a pixel is inside when its center is within r."""
    x0 = max(0, int(cx - r - 1))
    x1 = min(img.width, int(cx + r + 2))
    y0 = max(0, int(cy - r - 1))
    y1 = min(img.height, int(cy + r + 2))
    rr = r * r
    for y in range(y0, y1):
        dy = y + 0.5 - cy
        for x in range(x0, x1):
            dx = x + 0.5 - cx
            if dx * dx + dy * dy <= rr:
                img.put(x, y, color)


def draw_split_disk(img: Image, cx: float, cy: float, r: float, top, bottom) -> None:
    """Disk with different colors above and below its horizontal midline."""
    draw_disk(img, cx, cy, r, top)
    for y in range(int(cy), min(img.height, int(cy + r + 2))):
        if y + 0.5 < cy:
            continue
        for x in range(max(0, int(cx - r - 1)), min(img.width, int(cx + r + 2))):
            dx = x + 0.5 - cx
            dy = y + 0.5 - cy
            if dx * dx + dy * dy <= r * r:
                img.put(x, y, bottom)


def fill_polygon(img: Image, poly, color) -> None:
    """Even-odd scanline fill over pixel centers."""
    ys = [p[1] for p in poly]
    y_lo = max(0, int(min(ys)) - 1)
    y_hi = min(img.height, int(max(ys)) + 2)
    n = len(poly)
    for y in range(y_lo, y_hi):
        yc = y + 0.5
        xs = []
        for i in range(n):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % n]
            if (y1 <= yc < y2) or (y2 <= yc < y1):
                t = (yc - y1) / (y2 - y1)
                xs.append(x1 + t * (x2 - x1))
        xs.sort()
        for j in range(0, len(xs) - 1, 2):
            lo = max(0, math.ceil(xs[j] - 0.5))
            hi = min(img.width - 1, math.floor(xs[j + 1] - 0.5))
            for x in range(lo, hi + 1):
                img.put(x, y, color)


def arrow_polygon(
    cx: float,
    cy: float,
    angle_deg: float = 0.0,
    tail: float = 30.0,
    tail_w: float = 16.0,
    head: float = 80.0,
    head_w: float = 80.0,
):
    """Head-dominant arrow outline pointing along +x before rotation.

    Head-dominant matters: the tip-side-has-less-area rule identifies the
    pointed end only when the head outweighs the tail.
    """
    pts = [
        (-tail - head / 2, -tail_w / 2),
        (-head / 2, -tail_w / 2),
        (-head / 2, -head_w / 2),
        (head / 2, 0.0),
        (-head / 2, head_w / 2),
        (-head / 2, tail_w / 2),
        (-tail - head / 2, tail_w / 2),
    ]
    a = math.radians(angle_deg)
    ca, sa = math.cos(a), math.sin(a)
    return [(cx + x * ca - y * sa, cy + x * sa + y * ca) for x, y in pts]


def mask_from_predicate(width: int, height: int, predicate) -> Mask:
    m = Mask(width, height)
    i = 0
    for y in range(height):
        for x in range(width):
            if predicate(x, y):
                m.bits[i] = 1
            i += 1
    return m


TEST_PROFILE_TEXT = """
event = custom
classes = ball line right_arrow left_arrow forward_arrow

[ball]
shape = round
ranges = 15:45 0.5:1.0 0.6:1.0 | 15:45 0.5:1.0 0.25:0.55
min_area = 250
circularity = 0.8:1.3

[line]
shape = line
ranges = 340:20 0.5:1.0 0.3:1.0
min_area = 300

[arrows]
shape = arrow
ranges = 200:260 0.5:1.0 0.4:1.0
min_area = 400
"""


@pytest.fixture
def test_profile() -> GeoProfile:
    return parse_profile(TEST_PROFILE_TEXT)


def single_range_profile(ranges_spec: str, circ: str = "0.8:1.3", min_area: int = 250) -> GeoProfile:
    return parse_profile(
        "event = custom\nclasses = ball\n\n[ball]\nshape = round\n"
        f"ranges = {ranges_spec}\nmin_area = {min_area}\ncircularity = {circ}\n"
    )


def make_detection(
    class_id=0, label="ball", conf=0.9, box=(10, 10, 20, 20), frame_id=0
) -> Detection:
    return Detection(
        class_id=class_id, label=label, confidence=conf, box=PixelBox(*box), frame_id=frame_id
    )


def make_set(meta_wh=(640, 480), frame_id=0, dets=()) -> DetectionSet:
    meta = FrameMeta(frame_id=frame_id, timestamp=0.0, width=meta_wh[0], height=meta_wh[1])
    return DetectionSet(meta=meta, detections=tuple(dets))


class FakeInferenceServer:
    """Loopback stand-in for the out-of-process neural detector.

    Speaks the request protocol: answers probes with a descriptor and frame
    requests via a user hook returning a DetectionMessage byte string.
    """

    def __init__(self, respond, labels=("ball", "basket"), input_size=640, name="fake"):
        from websockets.sync.server import serve

        from fieldvision import wire

        self.respond = respond
        self.requests = []

        def handler(ws):
            for raw in ws:
                req = wire.decode_request(raw)
                self.requests.append(req)
                if req["kind"] == "probe":
                    ws.send(
                        wire.encode_descriptor(name, labels, input_size).decode("utf-8")
                    )
                else:
                    answer = self.respond(req)
                    if answer is not None:
                        ws.send(answer if isinstance(answer, str) else answer.decode("utf-8"))

        self._server = serve(handler, "127.0.0.1", 0, max_size=None)
        self.port = self._server.socket.getsockname()[1]
        self.url = f"ws://127.0.0.1:{self.port}"
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def close(self):
        self._server.shutdown()
        self._thread.join(timeout=5)


def write_ground_truth(directory, images: dict[str, tuple[Image, list[tuple[int, float, float, float, float]]]], labels):
    """Write a dataset directory: images, YOLO-style label files, classes.txt."""
    from fieldvision.image_io import write_png

    directory.mkdir(parents=True, exist_ok=True)
    (directory / "classes.txt").write_text("\n".join(labels) + "\n", encoding="utf-8")
    for stem, (img, objects) in images.items():
        write_png(img, directory / f"{stem}.png")
        lines = [
            f"{cid} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}" for cid, cx, cy, w, h in objects
        ]
        (directory / f"{stem}.txt").write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def predictions_from_ground_truth(gts, confidence=0.9):
    """Perfect prediction JSONL lines replaying the ground truth."""
    from fieldvision import wire
    from fieldvision.evaluation import write_prediction_line

    lines = []
    for frame_id, im in enumerate(gts.images):
        dets = tuple(
            wire.WireDetection(
                class_id=o.class_id,
                label=gts.class_map.label_for(o.class_id),
                confidence=confidence,
                bbox=o.box,
            )
            for o in im.objects
        )
        msg = wire.DetectionMessage(
            schema_version=1,
            frame_id=frame_id,
            timestamp=float(frame_id),
            frame_w=im.width,
            frame_h=im.height,
            detections=dets,
        )
        lines.append(write_prediction_line(msg, im.image_id))
    return lines
