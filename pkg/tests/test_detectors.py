from __future__ import annotations

import random

import pytest

from fieldvision import wire
from fieldvision.boxes import ClassMap, FrameMeta, NormBox, PixelBox
from fieldvision.clock import ManualClock
from fieldvision.detectors import (
    CallableBackend,
    Detector,
    ExternalBackend,
    GeometricDetector,
    PipelineDetector,
    RawDetection,
    ScriptedDetector,
)
from fieldvision.errors import DetectorTimeoutError, DetectorUnavailableError
from fieldvision.image import Image
from fieldvision.postprocess import NmsConfig

from conftest import (
    FakeInferenceServer,
    GREEN,
    ORANGE_BRIGHT,
    draw_disk,
    solid_image,
    test_profile,
)

CLASSES = ClassMap(("ball", "basket"))


def meta_for(img: Image, frame_id=0, ts=0.0) -> FrameMeta:
    return FrameMeta(frame_id=frame_id, timestamp=ts, width=img.width, height=img.height)


def wd(cx, cy, w, h, class_id=0, conf=0.9, label="ball"):
    return wire.WireDetection(
        class_id=class_id, label=label, confidence=conf, bbox=NormBox(cx, cy, w, h)
    )


def test_scripted_replays_known_frames_and_defaults_empty():
    script = {3: [wd(0.5, 0.5, 0.25, 0.25)]}
    det = ScriptedDetector(script, CLASSES)
    img = solid_image(640, 480)
    hit = det.detect(img, meta_for(img, frame_id=3))
    assert len(hit) == 1
    assert hit.detections[0].box == PixelBox(240, 180, 400, 300)
    miss = det.detect(img, meta_for(img, frame_id=4))
    assert len(miss) == 0


def test_scripted_latency_flows_through_injected_clock():
    clock = ManualClock()
    det = ScriptedDetector({}, CLASSES, latency=0.125, clock=clock)
    img = solid_image(64, 64)
    det.detect(img, meta_for(img))
    assert clock.now() == pytest.approx(0.125)
    assert det.probe().latency_ms == pytest.approx(125.0)


def test_scripted_from_jsonl(tmp_path):
    msg = wire.DetectionMessage(1, 2, 0.5, 640, 480, (wd(0.5, 0.5, 0.5, 0.5),))
    path = tmp_path / "log.jsonl"
    path.write_text(wire.encode(msg).decode() + "\n", encoding="utf-8")
    det = ScriptedDetector.from_jsonl(path, CLASSES)
    img = solid_image(640, 480)
    out = det.detect(img, meta_for(img, frame_id=2))
    assert len(out) == 1
    assert out.detections[0].box == PixelBox(160, 120, 480, 360)


def test_geometric_detector_implements_interface(test_profile):
    det = GeometricDetector(test_profile)
    assert isinstance(det, Detector)
    img = solid_image(640, 480, GREEN)
    draw_disk(img, 320, 240, 40, ORANGE_BRIGHT)
    out = det.detect(img, meta_for(img, frame_id=9))
    assert [d.label for d in out] == ["ball"]
    assert out.detections[0].frame_id == 9
    desc = det.probe()
    assert desc.name == "geometric"
    assert desc.class_map is test_profile.class_map


def test_pipeline_unletterboxes_model_plane_output():
    # backend reports the full content region of a 1920x1080 frame
    def fn(img, meta):
        return [RawDetection(class_id=0, confidence=0.9, box=PixelBox(0, 140, 640, 500))]

    pipeline = PipelineDetector(CallableBackend(fn, CLASSES), CLASSES)
    src = solid_image(1920, 1080)
    out = pipeline.detect(src, meta_for(src))
    assert len(out) == 1
    box = out.detections[0].box
    assert box.x1 == pytest.approx(0.0, abs=1e-6)
    assert box.y1 == pytest.approx(0.0, abs=1e-6)
    assert box.x2 == pytest.approx(1920.0, abs=1e-6)
    assert box.y2 == pytest.approx(1080.0, abs=1e-6)


def test_pipeline_applies_confidence_filter_and_nms():
    def fn(img, meta):
        return [
            RawDetection(0, 0.9, PixelBox(100, 100, 200, 200)),
            RawDetection(0, 0.8, PixelBox(102, 102, 202, 202)),  # suppressed by NMS
            RawDetection(0, 0.1, PixelBox(400, 400, 500, 500)),  # below confidence
            RawDetection(7, 0.9, PixelBox(10, 10, 20, 20)),      # unknown class: dropped
        ]

    pipeline = PipelineDetector(
        CallableBackend(fn, CLASSES), CLASSES, nms_config=NmsConfig(0.5, 0.25)
    )
    src = solid_image(640, 640)
    out = pipeline.detect(src, meta_for(src))
    assert len(out) == 1
    assert out.detections[0].confidence == pytest.approx(0.9)


def test_pipeline_clamps_arbitrary_raw_output_to_frame():
    rng = random.Random(21)

    def fn(img, meta):
        raws = []
        for _ in range(30):
            x1 = rng.uniform(-200, 700)
            y1 = rng.uniform(-200, 700)
            raws.append(
                RawDetection(
                    class_id=rng.randrange(4),
                    confidence=round(rng.uniform(0, 1), 3),
                    box=PixelBox(x1, y1, x1 + rng.uniform(1, 400), y1 + rng.uniform(1, 400)),
                )
            )
        return raws

    pipeline = PipelineDetector(CallableBackend(fn, CLASSES), CLASSES)
    for w, h in ((640, 480), (1920, 1080), (333, 777)):
        src = solid_image(w, h)
        out = pipeline.detect(src, meta_for(src))  # DetectionSet validates bounds
        for d in out:
            assert 0 <= d.box.x1 < d.box.x2 <= w
            assert 0 <= d.box.y1 < d.box.y2 <= h


def fake_echo_responder(req):
    """Respond with one centered detection on the model plane."""
    msg = wire.DetectionMessage(
        schema_version=1,
        frame_id=req["frame_id"],
        timestamp=req["timestamp"],
        frame_w=req["frame_w"],
        frame_h=req["frame_h"],
        detections=(wd(0.5, 0.5, 0.25, 0.25, conf=0.9),),
    )
    return wire.encode(msg)


def test_external_backend_round_trip(test_profile):
    server = FakeInferenceServer(fake_echo_responder)
    try:
        backend = ExternalBackend(server.url, timeout=2.0)
        desc = backend.probe()
        assert desc.name == "fake"
        assert desc.input_size == 640
        pipeline = PipelineDetector(backend, CLASSES)
        src = solid_image(640, 640)
        out = pipeline.detect(src, meta_for(src, frame_id=6))
        assert len(out) == 1
        assert out.detections[0].box == PixelBox(240.0, 240.0, 400.0, 400.0)
        assert out.detections[0].frame_id == 6
        # the server saw a letterboxed model-plane frame
        frame_reqs = [r for r in server.requests if r["kind"] == "frame"]
        assert frame_reqs[0]["frame_w"] == 640
        assert len(frame_reqs[0]["pixels"]) == 640 * 640 * 3
        backend.close()
    finally:
        server.close()


def test_external_backend_unavailable_when_no_server():
    backend = ExternalBackend("ws://127.0.0.1:1", timeout=0.3)
    with pytest.raises(DetectorUnavailableError):
        backend.probe()
    img = solid_image(640, 640)
    with pytest.raises(DetectorUnavailableError):
        backend.infer(img, meta_for(img))


def test_external_backend_times_out_on_silent_server():
    server = FakeInferenceServer(lambda req: None)  # never answers frames
    try:
        backend = ExternalBackend(server.url, timeout=0.3)
        img = solid_image(8, 8)
        with pytest.raises(DetectorTimeoutError):
            backend.infer(img, meta_for(img))
    finally:
        server.close()


def test_external_backend_rejects_malformed_response():
    server = FakeInferenceServer(lambda req: "{not json")
    try:
        backend = ExternalBackend(server.url, timeout=1.0)
        img = solid_image(8, 8)
        with pytest.raises(DetectorUnavailableError):
            backend.infer(img, meta_for(img))
    finally:
        server.close()


def test_geometric_detector_marathon_scene():
    from fieldvision.geometric import load_builtin_profile

    from conftest import BLUE_ARROW, RED, arrow_polygon, fill_polygon

    profile = load_builtin_profile("marathon")
    img = solid_image(640, 480, GREEN)
    img.fill_rect(300, 0, 340, 480, RED)  # guide line down the middle
    fill_polygon(img, arrow_polygon(480, 120, 0.0), BLUE_ARROW)
    det = GeometricDetector(profile)
    out = det.detect(img, meta_for(img))
    labels = sorted(d.label for d in out)
    assert labels == ["line", "right_arrow"]
    line = next(d for d in out if d.label == "line")
    assert line.box.y1 >= 480 - 480 // 3  # reported from the lower third


def test_backends_are_interchangeable_downstream(test_profile):
    """The same consumer loop works across all detector families."""
    img = solid_image(640, 480, GREEN)
    draw_disk(img, 320, 240, 40, ORANGE_BRIGHT)
    scripted = ScriptedDetector({0: [wd(0.5, 0.5, 0.2, 0.2)]}, CLASSES)
    geometric = GeometricDetector(test_profile)

    def fn(img, meta):
        return [RawDetection(0, 0.9, PixelBox(280, 280, 360, 360))]

    pipeline = PipelineDetector(CallableBackend(fn, CLASSES), CLASSES)
    for det in (scripted, geometric, pipeline):
        out = det.detect(img, meta_for(img))
        assert out.meta.frame_id == 0
        for d in out:
            assert 0 <= d.box.x1 < d.box.x2 <= 640
            assert 0 <= d.box.y1 < d.box.y2 <= 480
        assert det.probe().name
