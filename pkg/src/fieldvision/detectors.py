"""Uniform detector interface and its three backends.

`GeometricDetector` and `ScriptedDetector` work directly on the source
frame. Model-plane backends (the external inference adapter, or any raw
callable) are lifted to the same interface by `PipelineDetector`, which
owns the full deployment sequence: letterbox, inference, confidence
filter, NMS, box rescale back to source coordinates.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

from websockets.exceptions import ConnectionClosed, InvalidHandshake, InvalidURI
from websockets.sync.client import connect as ws_connect

from .boxes import ClassMap, Detection, DetectionSet, FrameMeta, PixelBox, norm_to_pixel
from .clock import Clock, SystemClock
from .errors import (
    DetectorTimeoutError,
    DetectorUnavailableError,
    GeometryError,
    WireParseError,
    WireValidationError,
)
from .geometric import (
    GeoProfile,
    SHAPE_ARROW,
    SHAPE_LINE,
    SHAPE_ROUND,
    detect_arrows,
    detect_line_blob,
    detect_round,
)
from .image import Image
from .letterbox import DEFAULT_FILL, DEFAULT_INPUT_SIZE, apply_letterbox, content_region, letterbox_params, unletterbox_box
from .postprocess import NmsConfig, confidence_filter, nms
from . import wire


@dataclass(frozen=True)
class DetectorDescriptor:
    """Static facts a backend reports about itself."""

    name: str
    class_map: ClassMap
    input_size: int | None = None  # None: operates on the source plane
    latency_ms: float | None = None


@runtime_checkable
class Detector(Protocol):
    """Source-plane detector: one frame in, one DetectionSet out."""

    def detect(self, img: Image, meta: FrameMeta) -> DetectionSet: ...

    def probe(self) -> DetectorDescriptor: ...


@dataclass(frozen=True)
class RawDetection:
    """Backend output before post-processing: model-plane box, class, score."""

    class_id: int
    confidence: float
    box: PixelBox


@runtime_checkable
class RawBackend(Protocol):
    """Model-plane backend to be wrapped by `PipelineDetector`."""

    def infer(self, img: Image, meta: FrameMeta) -> list[RawDetection]: ...

    def probe(self) -> DetectorDescriptor: ...


def _check_frame(img: Image, meta: FrameMeta) -> None:
    if img.width != meta.width or img.height != meta.height:
        raise ValueError(
            f"image is {img.width}x{img.height}, metadata says {meta.width}x{meta.height}"
        )


class GeometricDetector:
    """Classical baseline: color segmentation plus shape rules, per profile."""

    def __init__(self, profile: GeoProfile, name: str = "geometric"):
        self.profile = profile
        self.name = name

    def detect(self, img: Image, meta: FrameMeta) -> DetectionSet:
        _check_frame(img, meta)
        dets: list[Detection] = []
        profile = self.profile
        for rule in profile.rules_with_shape(SHAPE_ROUND):
            d = detect_round(img, profile, profile.class_map.id_for(rule.label), meta.frame_id)
            if d is not None:
                dets.append(d)
        if profile.rules_with_shape(SHAPE_ARROW):
            dets.extend(detect_arrows(img, profile, meta.frame_id))
        if profile.rules_with_shape(SHAPE_LINE):
            d = detect_line_blob(img, profile, meta.frame_id)
            if d is not None:
                dets.append(d)
        return DetectionSet(meta=meta, detections=tuple(dets))

    def probe(self) -> DetectorDescriptor:
        return DetectorDescriptor(name=self.name, class_map=self.profile.class_map)


class ScriptedDetector:
    """Replays a prediction log keyed by frame id; the deterministic stand-in
    for a live model. Unknown frames yield an empty set, never an error.

    Synthetic latency is taken on the injected clock, so replayed benchmarks
    are exactly reproducible under a manual clock.
    """

    def __init__(
        self,
        script: dict[int, list[wire.WireDetection]],
        class_map: ClassMap,
        latency: float = 0.0,
        clock: Clock | None = None,
        name: str = "scripted",
    ):
        if latency < 0:
            raise ValueError(f"negative latency {latency}")
        self.script = script
        self.class_map = class_map
        self.latency = latency
        self.clock = clock if clock is not None else SystemClock()
        self.name = name

    @classmethod
    def from_jsonl(
        cls,
        path,
        class_map: ClassMap,
        latency: float = 0.0,
        clock: Clock | None = None,
    ) -> ScriptedDetector:
        script: dict[int, list[wire.WireDetection]] = {}
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                msg = wire.decode(line)
                script[msg.frame_id] = list(msg.detections)
        return cls(script, class_map, latency=latency, clock=clock)

    def detect(self, img: Image, meta: FrameMeta) -> DetectionSet:
        _check_frame(img, meta)
        if self.latency > 0:
            self.clock.sleep(self.latency)
        entries = self.script.get(meta.frame_id, [])
        dets = []
        for wd in entries:
            dets.append(
                Detection(
                    class_id=wd.class_id,
                    label=wd.label,
                    confidence=wd.confidence,
                    box=norm_to_pixel(wd.bbox, meta.width, meta.height),
                    frame_id=meta.frame_id,
                )
            )
        return DetectionSet(meta=meta, detections=tuple(dets))

    def probe(self) -> DetectorDescriptor:
        return DetectorDescriptor(
            name=self.name,
            class_map=self.class_map,
            latency_ms=self.latency * 1000.0,
        )


class CallableBackend:
    """Adapts a plain function to the RawBackend protocol, chiefly for tests."""

    def __init__(self, fn: Callable[[Image, FrameMeta], list[RawDetection]],
                 class_map: ClassMap, input_size: int = DEFAULT_INPUT_SIZE,
                 name: str = "callable"):
        self._fn = fn
        self._descriptor = DetectorDescriptor(name=name, class_map=class_map, input_size=input_size)

    def infer(self, img: Image, meta: FrameMeta) -> list[RawDetection]:
        return self._fn(img, meta)

    def probe(self) -> DetectorDescriptor:
        return self._descriptor


class ExternalBackend:
    """Adapter to an out-of-process inference server speaking the wire protocol.

    One request in flight per connection; a request either returns a
    complete, validated response or raises a typed transport/timeout error.
    """

    def __init__(self, url: str, timeout: float = 2.0, name: str = "external"):
        self.url = url
        self.timeout = timeout
        self.name = name
        self._ws = None
        self._lock = threading.Lock()

    def _connection(self):
        if self._ws is None:
            try:
                # a base64 model-plane frame is a few MB; lift the frame cap
                self._ws = ws_connect(self.url, open_timeout=self.timeout, max_size=None)
            except (OSError, InvalidHandshake, InvalidURI, TimeoutError) as exc:
                raise DetectorUnavailableError(f"cannot reach {self.url}: {exc}") from exc
        return self._ws

    def _drop_connection(self) -> None:
        ws, self._ws = self._ws, None
        if ws is not None:
            try:
                ws.close()
            except Exception:
                pass

    def _roundtrip(self, request: bytes) -> str:
        with self._lock:
            ws = self._connection()
            try:
                ws.send(request.decode("utf-8"))
                return ws.recv(timeout=self.timeout)
            except TimeoutError as exc:
                self._drop_connection()
                raise DetectorTimeoutError(
                    f"no answer from {self.url} within {self.timeout}s"
                ) from exc
            except (ConnectionClosed, OSError) as exc:
                self._drop_connection()
                raise DetectorUnavailableError(f"lost connection to {self.url}: {exc}") from exc

    def infer(self, img: Image, meta: FrameMeta) -> list[RawDetection]:
        request = wire.encode_frame_request(
            img.width, img.height, bytes(img.pixels), meta.frame_id, meta.timestamp
        )
        raw = self._roundtrip(request)
        try:
            msg = wire.decode(raw)
        except (WireParseError, WireValidationError) as exc:
            raise DetectorUnavailableError(f"malformed response from {self.url}: {exc}") from exc
        out = []
        for wd in msg.detections:
            out.append(
                RawDetection(
                    class_id=wd.class_id,
                    confidence=wd.confidence,
                    box=norm_to_pixel(wd.bbox, msg.frame_w, msg.frame_h),
                )
            )
        return out

    def probe(self) -> DetectorDescriptor:
        raw = self._roundtrip(wire.encode_probe_request())
        try:
            desc = wire.decode_descriptor(raw)
        except (WireParseError, WireValidationError) as exc:
            raise DetectorUnavailableError(f"malformed descriptor from {self.url}: {exc}") from exc
        return DetectorDescriptor(
            name=desc["name"],
            class_map=ClassMap(tuple(desc["labels"])),
            input_size=desc["input_size"],
            latency_ms=desc.get("latency_ms"),
        )

    def close(self) -> None:
        self._drop_connection()


class PipelineDetector:
    """Deployment wrapper giving any model-plane backend the full sequence:
    letterbox -> infer -> confidence filter -> NMS -> rescale to source."""

    def __init__(
        self,
        backend: RawBackend,
        class_map: ClassMap,
        nms_config: NmsConfig | None = None,
        input_size: int = DEFAULT_INPUT_SIZE,
        fill: int = DEFAULT_FILL,
    ):
        self.backend = backend
        self.class_map = class_map
        self.nms_config = nms_config if nms_config is not None else NmsConfig()
        self.input_size = input_size
        self.fill = fill

    def detect(self, img: Image, meta: FrameMeta) -> DetectionSet:
        _check_frame(img, meta)
        params = letterbox_params(img.width, img.height, self.input_size)
        model_img = apply_letterbox(img, params, self.fill)
        raw = self.backend.infer(model_img, meta)

        plane = float(self.input_size)
        content = content_region(params)
        model_meta = FrameMeta(
            frame_id=meta.frame_id,
            timestamp=meta.timestamp,
            width=self.input_size,
            height=self.input_size,
        )
        model_dets = []
        for r in raw:
            if r.class_id >= len(self.class_map) or not 0.0 <= r.confidence <= 1.0:
                continue  # outside contract; never let junk past the boundary
            try:
                box = r.box.clamped(plane, plane)
                # only the content region maps back onto the source frame
                box = PixelBox(
                    max(box.x1, content.x1),
                    max(box.y1, content.y1),
                    min(box.x2, content.x2),
                    min(box.y2, content.y2),
                )
            except GeometryError:
                continue
            model_dets.append(
                Detection(
                    class_id=r.class_id,
                    label=self.class_map.label_for(r.class_id),
                    confidence=r.confidence,
                    box=box,
                    frame_id=meta.frame_id,
                )
            )
        model_set = DetectionSet(meta=model_meta, detections=tuple(model_dets))
        model_set = confidence_filter(model_set, self.nms_config.confidence_threshold)
        model_set = nms(model_set, self.nms_config)

        out = []
        for d in model_set.detections:
            try:
                box = unletterbox_box(d.box, params)
            except GeometryError:
                continue
            out.append(
                Detection(
                    class_id=d.class_id,
                    label=d.label,
                    confidence=d.confidence,
                    box=box,
                    frame_id=meta.frame_id,
                )
            )
        return DetectionSet(meta=meta, detections=tuple(out))

    def probe(self) -> DetectorDescriptor:
        inner = self.backend.probe()
        return DetectorDescriptor(
            name=inner.name,
            class_map=self.class_map,
            input_size=self.input_size,
            latency_ms=inner.latency_ms,
        )
