"""Operator-facing command line.

Subcommands wire the modules into the deployment workflows: `detect` runs a
detector over a frame directory and writes annotated frames plus a
prediction log, `serve` publishes detections through the WebSocket gateway,
`listen` republishes received messages onto the local bus, `eval` scores a
prediction log against ground truth, `compare` runs two detectors
side by side, and `bench` times the compiled kernels against the pure
fallback.

Exit codes: 0 success, 2 input/configuration error, 3 runtime/transport
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import threading
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import _kernels, wire
from .boxes import EVENT_CLASS_MAPS, FrameMeta
from .broker import Broker, TOPIC_BBOXES, TOPIC_DETECTIONS
from .clock import ManualClock, SystemClock
from .detectors import (
    ExternalBackend,
    GeometricDetector,
    PipelineDetector,
    ScriptedDetector,
)
from .drawing import annotate
from .errors import (
    ConfigError,
    DatasetError,
    DetectorTimeoutError,
    DetectorUnavailableError,
    GeometryError,
    TopicError,
    VisionError,
    WireParseError,
    WireValidationError,
)
from .evaluation import (
    FrameSource,
    load_ground_truth,
    load_predictions,
    map_scores,
    confusion_matrix,
    precision_recall,
    render_comparison,
    run_benchmark,
    write_prediction_line,
)
from .evaluation.report import EvalReport
from .gateway import GatewayLink, GatewayServer, listener_run
from .geometric import load_builtin_profile, load_profile
from .image import Image
from .image_io import write_png
from .postprocess import NmsConfig
from .scheduling import FrameSkipper, RateLimiter
from .textconf import load_sections

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3

_INPUT_ERRORS = (
    ConfigError,
    DatasetError,
    GeometryError,
    WireParseError,
    WireValidationError,
    ValueError,
)
_RUNTIME_ERRORS = (DetectorUnavailableError, DetectorTimeoutError, TopicError, OSError)


@dataclass(frozen=True)
class RunConfig:
    """Every runtime knob, resolved from defaults, config file, environment,
    and flags, in that order of increasing precedence."""

    detector: str = "geometric"
    event: str = "basketball"
    profile: str | None = None
    script: str | None = None
    latency_ms: float = 0.0
    input_size: int = 640
    skip_n: int = 1
    rate_cap: float = 20.0
    confidence: float = 0.25
    iou: float = 0.45
    endpoint: str = "ws://127.0.0.1:8765"
    host: str = "127.0.0.1"
    port: int = 8765
    out_dir: str = "runs"
    sim_clock: bool = False
    source_fps: float = 30.0
    duration: float | None = None
    queue_capacity: int = 16

    def validate(self) -> None:
        if self.detector not in ("geometric", "scripted", "external"):
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.event not in EVENT_CLASS_MAPS and self.profile is None:
            raise ConfigError(f"unknown event profile {self.event!r}")
        if self.input_size <= 0:
            raise ConfigError(f"input size must be positive, got {self.input_size}")
        if self.skip_n < 1:
            raise ConfigError(f"frame-skip stride must be >= 1, got {self.skip_n}")
        if self.rate_cap <= 0:
            raise ConfigError(f"rate cap must be positive, got {self.rate_cap}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfigError(f"confidence threshold {self.confidence} outside [0, 1]")
        if not 0.0 < self.iou < 1.0:
            raise ConfigError(f"IoU threshold {self.iou} outside (0, 1)")
        if self.latency_ms < 0:
            raise ConfigError(f"negative latency {self.latency_ms}")
        if self.source_fps <= 0:
            raise ConfigError(f"source fps must be positive, got {self.source_fps}")
        if self.queue_capacity < 1:
            raise ConfigError(f"queue capacity must be >= 1, got {self.queue_capacity}")

    def fingerprint(self) -> str:
        payload = json.dumps(
            {f.name: getattr(self, f.name) for f in fields(self)}, sort_keys=True
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:8]


_CONFIG_PARSERS = {
    "latency_ms": float, "rate_cap": float, "confidence": float, "iou": float,
    "source_fps": float, "duration": float,
    "input_size": int, "skip_n": int, "port": int, "queue_capacity": int,
    "sim_clock": lambda v: v.lower() in ("1", "true", "yes", "on"),
}


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        keys = load_sections(args.config).get("", {})
        updates = {}
        for key, value in keys.items():
            if key not in {f.name for f in fields(RunConfig)}:
                raise ConfigError(f"{args.config}: unknown config key {key!r}")
            updates[key] = _CONFIG_PARSERS.get(key, str)(value)
        cfg = replace(cfg, **updates)
    if os.environ.get("FIELDVISION_ENDPOINT"):
        cfg = replace(cfg, endpoint=os.environ["FIELDVISION_ENDPOINT"])
    if os.environ.get("FIELDVISION_PORT"):
        cfg = replace(cfg, port=int(os.environ["FIELDVISION_PORT"]))
    updates = {}
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            updates[f.name] = value
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


def make_run_dir(cfg: RunConfig) -> Path:
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    base = Path(cfg.out_dir) / f"{stamp}-{cfg.fingerprint()}"
    path = base
    suffix = 0
    while path.exists():
        suffix += 1
        path = Path(f"{base}-{suffix}")
    path.mkdir(parents=True)
    return path


def make_clock(cfg: RunConfig):
    return ManualClock() if cfg.sim_clock else SystemClock()


def build_detector(cfg: RunConfig, clock):
    if cfg.detector == "geometric":
        profile = load_profile(cfg.profile) if cfg.profile else load_builtin_profile(cfg.event)
        return GeometricDetector(profile)
    if cfg.detector == "scripted":
        if not cfg.script:
            raise ConfigError("scripted detector needs --script JSONL")
        return ScriptedDetector.from_jsonl(
            cfg.script,
            EVENT_CLASS_MAPS[cfg.event],
            latency=cfg.latency_ms / 1000.0,
            clock=clock,
        )
    backend = ExternalBackend(cfg.endpoint)
    return PipelineDetector(
        backend,
        EVENT_CLASS_MAPS[cfg.event],
        nms_config=NmsConfig(iou_threshold=cfg.iou, confidence_threshold=cfg.confidence),
        input_size=cfg.input_size,
    )


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    clock = make_clock(cfg)
    source = FrameSource.from_directory(args.input)
    detector = build_detector(cfg, clock)
    run_dir = make_run_dir(cfg)
    frames_dir = run_dir / "frames"
    frames_dir.mkdir()
    jsonl_path = run_dir / "predictions.jsonl"
    start = clock.now()
    with open(jsonl_path, "w", encoding="utf-8") as out:
        for frame_id, (stem, img) in enumerate(source.frames):
            meta = FrameMeta(
                frame_id=frame_id,
                timestamp=clock.now() - start,
                width=img.width,
                height=img.height,
            )
            ds = detector.detect(img, meta)
            write_png(annotate(img, ds.detections), frames_dir / f"{stem}.png")
            out.write(write_prediction_line(wire.DetectionMessage.from_detection_set(ds), stem))
            out.write("\n")
    print(f"processed {len(source)} frames -> {run_dir}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    clock = make_clock(cfg)
    source = FrameSource.from_directory(args.input)
    detector = build_detector(cfg, clock)
    broker = Broker()
    server = GatewayServer(
        broker, cfg.host, cfg.port,
        ingress=TOPIC_DETECTIONS, egress=TOPIC_BBOXES,
        queue_capacity=cfg.queue_capacity,
    ).start()
    bound_port = server.port
    skipper = FrameSkipper(cfg.skip_n)
    limiter = RateLimiter(cfg.rate_cap)
    published = 0
    try:
        if args.wait_peer:
            deadline = time.monotonic() + 30.0
            while server.connections < args.wait_peer:
                if time.monotonic() > deadline:
                    raise DetectorUnavailableError("no peer connected within 30s")
                time.sleep(0.01)
        interval = 1.0 / cfg.source_fps
        start = clock.now()
        frame_index = 0
        next_frame = start
        while cfg.duration is None or clock.now() - start < cfg.duration:
            stem, img = source.frames[frame_index % len(source)]
            clock.sleep(max(0.0, next_frame - clock.now()))
            next_frame += interval
            admitted = skipper.accept(frame_index) and limiter.allow(clock.now())
            if admitted:
                meta = FrameMeta(
                    frame_id=frame_index,
                    timestamp=clock.now() - start,
                    width=img.width,
                    height=img.height,
                )
                ds = detector.detect(img, meta)
                broker.publish(TOPIC_DETECTIONS, wire.DetectionMessage.from_detection_set(ds))
                published += 1
            frame_index += 1
        # let connected peers drain before tearing the socket down
        deadline = time.monotonic() + 10.0
        while time.monotonic() < deadline and broker.pending(TOPIC_DETECTIONS) > 0:
            time.sleep(0.01)
        time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    print(f"published {published} detection messages on port {bound_port}")
    return EXIT_OK


def cmd_listen(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    broker = Broker()
    broker.register(TOPIC_BBOXES)
    link = GatewayLink(cfg.endpoint)
    out_path = Path(args.out) if args.out else None
    received = 0
    out_file = open(out_path, "w", encoding="utf-8") if out_path else None
    stop_timer = None

    def on_message(msg: wire.DetectionMessage) -> None:
        nonlocal received
        received += 1
        if out_file is not None:
            out_file.write(wire.encode(msg).decode("utf-8"))
            out_file.write("\n")
            out_file.flush()
        if args.expect and received >= args.expect:
            link.stop()

    if cfg.duration is not None:
        stop_timer = threading.Timer(cfg.duration, link.stop)
        stop_timer.daemon = True
        stop_timer.start()
    try:
        listener_run(link, broker, egress=TOPIC_BBOXES, on_message=on_message)
    except KeyboardInterrupt:
        link.stop()
    finally:
        if stop_timer is not None:
            stop_timer.cancel()
        if out_file is not None:
            out_file.close()
    print(f"republished {received} messages to {TOPIC_BBOXES}")
    if args.expect and received < args.expect:
        return EXIT_RUNTIME
    return EXIT_OK


def _instances_from(preds_by_image, gts):
    registry = gts.by_id()
    return [
        (preds_by_image.get(im.image_id, []), registry[im.image_id].pixel_objects())
        for im in gts.images
    ]


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    gts = load_ground_truth(args.gt)
    preds = load_predictions(args.pred, gts)
    instances = _instances_from(preds, gts)
    precision, recall, tp, fp, fn = precision_recall(
        instances, iou_threshold=0.5, confidence_threshold=cfg.confidence
    )
    scores = map_scores(instances, gts.class_map)
    cm = confusion_matrix(
        instances, gts.class_map, iou_threshold=0.5, confidence_threshold=cfg.confidence
    )
    report = EvalReport(
        mode="eval",
        detector=Path(args.pred).stem,
        n_images=len(gts.images),
        n_ground_truth=gts.total_objects(),
        n_predictions=sum(len(v) for v in preds.values()),
        precision=precision,
        recall=recall,
        tp=tp,
        fp=fp,
        fn=fn,
        map=scores,
        confusion=cm,
    )
    print(report.render())
    run_dir = make_run_dir(cfg)
    (run_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    print(f"report written to {run_dir / 'report.json'}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    gts = load_ground_truth(args.gt)
    source = FrameSource.from_directory(args.gt)
    reports = []
    for name in (args.detector_a, args.detector_b):
        sub_cfg = replace(cfg, detector=name)
        sub_cfg.validate()
        clock = make_clock(sub_cfg)
        detector = build_detector(sub_cfg, clock)
        detector.probe()  # fail fast before any partial report
        reports.append(
            run_benchmark(
                detector, source, "static",
                clock=clock, ground_truth=gts,
                iou_threshold=0.5, confidence_threshold=cfg.confidence,
                with_map=True,
            )
        )
    a, b = reports
    print(render_comparison(a, b))
    run_dir = make_run_dir(cfg)
    payload = {"a": a.to_json_dict(), "b": b.to_json_dict()}
    (run_dir / "comparison.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    print(f"comparison written to {run_dir / 'comparison.json'}")
    return EXIT_OK


def _bench_image(width: int, height: int) -> Image:
    img = Image(width, height)
    px = img.pixels
    i = 0
    for y in range(height):
        for x in range(width):
            px[i] = (x * 7 + y * 3) & 0xFF
            px[i + 1] = (x * 2 + y * 5) & 0xFF
            px[i + 2] = (x + y) & 0xFF
            i += 3
    return img


def cmd_bench(args: argparse.Namespace) -> int:
    if args.size < 4:
        raise ConfigError(f"bench size must be >= 4, got {args.size}")
    img = _bench_image(args.size, args.size * 3 // 4)
    n = img.width * img.height
    ranges = (20.0, 60.0, 0.3, 1.0, 0.3, 1.0, 200.0, 260.0, 0.3, 1.0, 0.2, 0.9)
    backends = ["pure"]
    try:
        _kernels.get_backend("native")
        backends.append("native")
    except ImportError:
        pass
    print(f"active kernel backend: {_kernels.backend_name()}")
    rows = []
    timings: dict[str, dict[str, float]] = {}
    for name in backends:
        mod = _kernels.get_backend(name)
        mask = mod.hsv_mask_union(img.pixels, n, ranges)

        def run_resize():
            mod.resize_bilinear_rgb(img.pixels, img.width, img.height, 640, 640)

        def run_mask():
            mod.hsv_mask_union(img.pixels, n, ranges)

        def run_label():
            labels, count = mod.label_components8(mask, img.width, img.height)
            mod.region_stats(labels, img.width, img.height, count)

        for op, fn in (("resize_bilinear", run_resize), ("hsv_mask", run_mask),
                       ("label+stats", run_label)):
            best = min(_time_once(fn) for _ in range(args.repeat))
            timings.setdefault(op, {})[name] = best
    for op, per in timings.items():
        pure_ms = per["pure"] * 1000
        if "native" in per:
            native_ms = per["native"] * 1000
            speedup = per["pure"] / per["native"] if per["native"] > 0 else float("inf")
            rows.append(f"{op:<16} pure {pure_ms:9.2f} ms   native {native_ms:9.2f} ms   "
                        f"speedup {speedup:7.1f}x")
        else:
            rows.append(f"{op:<16} pure {pure_ms:9.2f} ms   native unavailable")
    print("\n".join(rows))
    return EXIT_OK


def _time_once(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run configuration file (key = value lines)")
    p.add_argument("--detector", choices=("geometric", "scripted", "external"))
    p.add_argument("--event", help="event profile: basketball, archery, marathon")
    p.add_argument("--profile", help="geometric profile file (overrides --event's built-in)")
    p.add_argument("--script", help="prediction JSONL replayed by the scripted detector")
    p.add_argument("--latency-ms", dest="latency_ms", type=float,
                   help="synthetic latency of the scripted detector")
    p.add_argument("--input-size", dest="input_size", type=int, help="model plane size (default 640)")
    p.add_argument("--skip-n", dest="skip_n", type=int, help="process every nth frame")
    p.add_argument("--rate-cap", dest="rate_cap", type=float, help="max detections per second")
    p.add_argument("--conf", dest="confidence", type=float, help="confidence threshold")
    p.add_argument("--iou", dest="iou", type=float, help="NMS IoU threshold")
    p.add_argument("--endpoint", help="gateway/inference WebSocket URL")
    p.add_argument("--host", help="bind host for serve")
    p.add_argument("--port", type=int, help="bind port for serve (default 8765)")
    p.add_argument("--out-dir", dest="out_dir", help="base directory for run outputs")
    p.add_argument("--sim-clock", dest="sim_clock", action="store_const", const=True,
                   help="drive everything with a simulated clock")
    p.add_argument("--source-fps", dest="source_fps", type=float, help="replay frame rate")
    p.add_argument("--duration", type=float, help="stop after this many (simulated) seconds")
    p.add_argument("--queue-capacity", dest="queue_capacity", type=int,
                   help="per-subscriber queue capacity (default 16)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldvision",
        description="CPU-only detection pipeline: detect, bridge, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run a detector over a frame directory")
    p.add_argument("input", help="directory of PNG/PPM frames")
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("serve", help="publish detections through the WebSocket gateway")
    p.add_argument("input", help="directory of PNG/PPM frames to replay")
    p.add_argument("--wait-peer", dest="wait_peer", type=int, default=0,
                   help="wait for this many connected peers before publishing")
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("listen", help="republish gateway messages onto /yolo/bboxes")
    p.add_argument("--out", help="also append received messages to this JSONL file")
    p.add_argument("--expect", type=int, default=0, help="stop after N messages")
    _add_common(p)
    p.set_defaults(func=cmd_listen)

    p = sub.add_parser("eval", help="score a prediction log against ground truth")
    p.add_argument("--pred", required=True, help="prediction JSONL")
    p.add_argument("--gt", required=True, help="ground-truth directory")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run two detectors over one annotated set")
    p.add_argument("detector_a", choices=("geometric", "scripted", "external"))
    p.add_argument("detector_b", choices=("geometric", "scripted", "external"))
    p.add_argument("--gt", required=True, help="annotated directory (images + labels)")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="compare pure and native kernel timings")
    p.add_argument("--repeat", type=int, default=3, help="repetitions per kernel")
    p.add_argument("--size", type=int, default=640, help="benchmark frame width")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
