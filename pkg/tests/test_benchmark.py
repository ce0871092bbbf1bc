from __future__ import annotations

import pytest

from fieldvision.boxes import ClassMap
from fieldvision.clock import ManualClock
from fieldvision.detectors import ScriptedDetector
from fieldvision.errors import ConfigError
from fieldvision.evaluation import FrameSource, load_ground_truth, run_benchmark
from fieldvision.image import Image
from fieldvision.wire import WireDetection

from conftest import write_ground_truth

CLASSES = ClassMap(("ball",))


def blank_source(n=3, w=160, h=120):
    return FrameSource.from_images(
        [(f"f{i:03d}", Image.filled(w, h, (10, 10, 10))) for i in range(n)]
    )


def scripted(latency, clock, script=None):
    return ScriptedDetector(script or {}, CLASSES, latency=latency, clock=clock)


def test_idle_fps_magnitude_tiny_model_analog():
    clock = ManualClock()
    report = run_benchmark(scripted(0.125, clock), blank_source(), "idle", 60.0, clock)
    assert report.fps.mean == pytest.approx(8.0, abs=0.1)
    assert report.mode == "idle"
    assert report.n_predictions == 0


def test_idle_fps_magnitude_small_model_analog():
    clock = ManualClock()
    report = run_benchmark(scripted(0.364, clock), blank_source(), "idle", 60.0, clock)
    assert report.fps.mean == pytest.approx(2.75, abs=0.05)


def test_idle_fps_is_reproducible_run_to_run():
    results = []
    for _ in range(3):
        clock = ManualClock()
        report = run_benchmark(scripted(0.125, clock), blank_source(), "idle", 60.0, clock)
        results.append((report.fps.mean, report.fps.p50, report.fps.p95, report.n_images))
    assert results[0] == results[1] == results[2]


def test_idle_rejects_zero_latency_on_manual_clock():
    clock = ManualClock()
    with pytest.raises(ConfigError):
        run_benchmark(scripted(0.0, clock), blank_source(), "idle", 1.0, clock)


def annotated_dataset(tmp_path, n=10):
    images = {}
    for i in range(n):
        images[f"f{i:03d}"] = (Image.filled(160, 120, (5, 5, 5)), [(0, 0.5, 0.5, 0.25, 0.25)])
    d = tmp_path / "ds"
    write_ground_truth(d, images, ["ball"])
    return load_ground_truth(d)


def replay_script(gts, mislabel_every=None):
    script = {}
    for frame_id, im in enumerate(gts.images):
        dets = []
        for o in im.objects:
            class_id = o.class_id
            label = gts.class_map.label_for(class_id)
            if mislabel_every and frame_id % mislabel_every == mislabel_every - 1:
                class_id = 1  # a class that never appears in ground truth
                label = "ghost"
            dets.append(
                WireDetection(class_id=class_id, label=label, confidence=0.9, bbox=o.box)
            )
        script[frame_id] = dets
    return script


def gts_source(gts):
    return FrameSource.from_images(
        [(im.image_id, Image.filled(im.width, im.height, (5, 5, 5))) for im in gts.images]
    )


def test_static_perfect_replay_scores_full_precision(tmp_path):
    gts = annotated_dataset(tmp_path)
    clock = ManualClock()
    det = ScriptedDetector(replay_script(gts), ClassMap(("ball", "ghost")), latency=0.01, clock=clock)
    report = run_benchmark(det, gts_source(gts), "static", clock=clock, ground_truth=gts)
    assert report.precision == pytest.approx(1.0)
    assert report.recall == pytest.approx(1.0)
    assert report.tp == 10 and report.fp == 0 and report.fn == 0
    assert report.fps.mean == pytest.approx(100.0, rel=0.01)


def test_static_every_tenth_frame_mislabeled(tmp_path):
    gts = annotated_dataset(tmp_path, n=100)
    clock = ManualClock()
    det = ScriptedDetector(
        replay_script(gts, mislabel_every=10), ClassMap(("ball", "ghost")),
        latency=0.01, clock=clock,
    )
    report = run_benchmark(det, gts_source(gts), "static", clock=clock, ground_truth=gts)
    assert report.precision == pytest.approx(0.9)


def test_dynamic_mode_matches_static_mechanics(tmp_path):
    gts = annotated_dataset(tmp_path)
    clock = ManualClock()
    det = ScriptedDetector(replay_script(gts), ClassMap(("ball", "ghost")), latency=0.02, clock=clock)
    report = run_benchmark(det, gts_source(gts), "dynamic", clock=clock, ground_truth=gts)
    assert report.mode == "dynamic"
    assert report.precision == pytest.approx(1.0)


def test_precision_modes_require_ground_truth():
    clock = ManualClock()
    with pytest.raises(ConfigError):
        run_benchmark(scripted(0.01, clock), blank_source(), "static", clock=clock)
    with pytest.raises(ConfigError):
        run_benchmark(scripted(0.01, clock), blank_source(), "nosuch", clock=clock)
