"""JSON wire schema exchanged between the detection and listener processes.

One UTF-8 JSON object per WebSocket text frame. Canonical field order is
(schema_version, frame_id, timestamp, frame_w, frame_h, detections[...]);
every float is written with at most six fractional digits. Decoding
tolerates unknown extra fields so the schema can grow without breaking
older listeners.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .boxes import ClassMap, Detection, DetectionSet, FrameMeta, NormBox, norm_to_pixel, pixel_to_norm
from .errors import GeometryError, WireParseError, WireValidationError

SCHEMA_VERSION = 1

# smallest box size representable at six fractional digits; quantization
# bumps sub-ppm sizes here instead of emitting an undecodable zero
_MIN_WIRE_SIZE = 1e-6


@dataclass(frozen=True)
class WireDetection:
    """One detection as carried on the wire: normalized box, class, score."""

    class_id: int
    label: str
    confidence: float
    bbox: NormBox

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"negative class id {self.class_id}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectionMessage:
    """The per-frame payload published by the detection process."""

    schema_version: int
    frame_id: int
    timestamp: float
    frame_w: int
    frame_h: int
    detections: tuple[WireDetection, ...] = ()

    def __post_init__(self):
        if self.schema_version < 1:
            raise ValueError(f"schema_version {self.schema_version} < 1")
        if self.frame_id < 0:
            raise ValueError(f"negative frame id {self.frame_id}")
        if not (math.isfinite(self.timestamp) and self.timestamp >= 0.0):
            raise ValueError(f"bad timestamp {self.timestamp}")
        if self.frame_w <= 0 or self.frame_h <= 0:
            raise ValueError(f"empty frame {self.frame_w}x{self.frame_h}")

    @classmethod
    def from_detection_set(cls, ds: DetectionSet) -> DetectionMessage:
        dets = []
        for d in ds.detections:
            dets.append(
                WireDetection(
                    class_id=d.class_id,
                    label=d.label,
                    confidence=d.confidence,
                    bbox=pixel_to_norm(d.box, ds.meta.width, ds.meta.height),
                )
            )
        return cls(
            schema_version=SCHEMA_VERSION,
            frame_id=ds.meta.frame_id,
            timestamp=ds.meta.timestamp,
            frame_w=ds.meta.width,
            frame_h=ds.meta.height,
            detections=tuple(dets),
        )

    def to_detection_set(self, class_map: ClassMap | None = None) -> DetectionSet:
        meta = FrameMeta(
            frame_id=self.frame_id,
            timestamp=self.timestamp,
            width=self.frame_w,
            height=self.frame_h,
        )
        dets = []
        for wd in self.detections:
            label = wd.label
            if class_map is not None:
                label = class_map.label_for(wd.class_id)
            dets.append(
                Detection(
                    class_id=wd.class_id,
                    label=label,
                    confidence=wd.confidence,
                    box=norm_to_pixel(wd.bbox, self.frame_w, self.frame_h),
                    frame_id=self.frame_id,
                )
            )
        return DetectionSet(meta=meta, detections=tuple(dets))

    def quantized(self) -> DetectionMessage:
        """The message as it survives the wire: floats at six fractional digits."""
        dets = tuple(
            WireDetection(
                class_id=d.class_id,
                label=d.label,
                confidence=_q(d.confidence),
                bbox=NormBox(
                    cx=_q(d.bbox.cx),
                    cy=_q(d.bbox.cy),
                    w=max(_q(d.bbox.w), _MIN_WIRE_SIZE),
                    h=max(_q(d.bbox.h), _MIN_WIRE_SIZE),
                ),
            )
            for d in self.detections
        )
        return DetectionMessage(
            schema_version=self.schema_version,
            frame_id=self.frame_id,
            timestamp=_q(self.timestamp),
            frame_w=self.frame_w,
            frame_h=self.frame_h,
            detections=dets,
        )


def _q(value: float) -> float:
    return round(value, 6)


def to_wire_dict(msg: DetectionMessage) -> dict:
    """Canonically ordered dict form of a quantized message."""
    q = msg.quantized()
    return {
        "schema_version": q.schema_version,
        "frame_id": q.frame_id,
        "timestamp": q.timestamp,
        "frame_w": q.frame_w,
        "frame_h": q.frame_h,
        "detections": [
            {
                "class_id": d.class_id,
                "label": d.label,
                "confidence": d.confidence,
                "bbox": {"cx": d.bbox.cx, "cy": d.bbox.cy, "w": d.bbox.w, "h": d.bbox.h},
            }
            for d in q.detections
        ],
    }


def encode(msg: DetectionMessage) -> bytes:
    return json.dumps(to_wire_dict(msg), separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _expect_int(obj, path: str, minimum: int | None = None) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise WireValidationError(path, f"expected integer, got {type(obj).__name__}")
    if minimum is not None and obj < minimum:
        raise WireValidationError(path, f"value {obj} below minimum {minimum}")
    return obj


def _expect_num(obj, path: str, lo: float | None = None, hi: float | None = None) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise WireValidationError(path, f"expected number, got {type(obj).__name__}")
    value = float(obj)
    if not math.isfinite(value):
        raise WireValidationError(path, f"non-finite value {obj!r}")
    if lo is not None and value < lo:
        raise WireValidationError(path, f"value {value} below {lo}")
    if hi is not None and value > hi:
        raise WireValidationError(path, f"value {value} above {hi}")
    return value


def _expect_key(obj: dict, key: str, path: str):
    if key not in obj:
        raise WireValidationError(f"{path}{key}", "missing field")
    return obj[key]


def decode(data: bytes | str) -> DetectionMessage:
    """Parse and validate a wire frame.

    Raises WireParseError for malformed JSON and WireValidationError (with
    the offending field path) for schema violations. Unknown extra fields
    are ignored.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireParseError(f"invalid UTF-8: {exc}") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise WireParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise WireParseError(f"expected JSON object, got {type(obj).__name__}")

    version = _expect_int(_expect_key(obj, "schema_version", ""), "schema_version", minimum=1)
    frame_id = _expect_int(_expect_key(obj, "frame_id", ""), "frame_id", minimum=0)
    timestamp = _expect_num(_expect_key(obj, "timestamp", ""), "timestamp", lo=0.0)
    frame_w = _expect_int(_expect_key(obj, "frame_w", ""), "frame_w", minimum=1)
    frame_h = _expect_int(_expect_key(obj, "frame_h", ""), "frame_h", minimum=1)
    raw_dets = _expect_key(obj, "detections", "")
    if not isinstance(raw_dets, list):
        raise WireValidationError("detections", "expected array")

    dets = []
    for i, rd in enumerate(raw_dets):
        path = f"detections[{i}]"
        if not isinstance(rd, dict):
            raise WireValidationError(path, "expected object")
        class_id = _expect_int(_expect_key(rd, "class_id", path + "."), f"{path}.class_id", minimum=0)
        label = _expect_key(rd, "label", path + ".")
        if not isinstance(label, str):
            raise WireValidationError(f"{path}.label", "expected string")
        confidence = _expect_num(
            _expect_key(rd, "confidence", path + "."), f"{path}.confidence", lo=0.0, hi=1.0
        )
        bbox = _expect_key(rd, "bbox", path + ".")
        if not isinstance(bbox, dict):
            raise WireValidationError(f"{path}.bbox", "expected object")
        vals = {}
        for k in ("cx", "cy", "w", "h"):
            vals[k] = _expect_num(
                _expect_key(bbox, k, f"{path}.bbox."), f"{path}.bbox.{k}", lo=0.0, hi=1.0
            )
        try:
            nb = NormBox(cx=vals["cx"], cy=vals["cy"], w=vals["w"], h=vals["h"])
        except GeometryError as exc:
            raise WireValidationError(f"{path}.bbox", str(exc)) from exc
        dets.append(WireDetection(class_id=class_id, label=label, confidence=confidence, bbox=nb))

    return DetectionMessage(
        schema_version=version,
        frame_id=frame_id,
        timestamp=timestamp,
        frame_w=frame_w,
        frame_h=frame_h,
        detections=tuple(dets),
    )


# --- inference request protocol (external detector adapter) -----------------
#
# The adapter sends one JSON text frame per request over the same WebSocket
# transport and expects a DetectionMessage (for "frame") or a descriptor
# object (for "probe") back. The frame request carries the letterboxed
# model-plane image as base64 raw RGB bytes.

import base64


def encode_probe_request() -> bytes:
    return json.dumps(
        {"schema_version": SCHEMA_VERSION, "kind": "probe"}, separators=(",", ":")
    ).encode("utf-8")


def encode_frame_request(width: int, height: int, pixels: bytes, frame_id: int, timestamp: float) -> bytes:
    return json.dumps(
        {
            "schema_version": SCHEMA_VERSION,
            "kind": "frame",
            "frame_id": frame_id,
            "timestamp": _q(timestamp),
            "frame_w": width,
            "frame_h": height,
            "encoding": "rgb8;base64",
            "pixels": base64.b64encode(pixels).decode("ascii"),
        },
        separators=(",", ":"),
    ).encode("utf-8")


def decode_request(data: bytes | str) -> dict:
    """Server-side parse of a request frame; returns the raw dict.

    For "frame" requests the "pixels" entry is replaced by decoded bytes.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise WireParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "kind" not in obj:
        raise WireParseError("request must be an object with a 'kind'")
    if obj["kind"] == "frame":
        try:
            obj["pixels"] = base64.b64decode(obj["pixels"])
        except (KeyError, ValueError) as exc:
            raise WireValidationError("pixels", f"bad base64 payload: {exc}") from exc
    return obj


def encode_descriptor(name: str, labels, input_size: int, latency_ms: float | None = None) -> bytes:
    obj = {
        "schema_version": SCHEMA_VERSION,
        "kind": "descriptor",
        "name": name,
        "labels": list(labels),
        "input_size": input_size,
    }
    if latency_ms is not None:
        obj["latency_ms"] = latency_ms
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


def decode_descriptor(data: bytes | str) -> dict:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise WireParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("kind") != "descriptor":
        raise WireValidationError("kind", "expected a descriptor object")
    for key, kind in (("name", str), ("labels", list), ("input_size", int)):
        if key not in obj or not isinstance(obj[key], kind):
            raise WireValidationError(key, f"missing or not a {kind.__name__}")
    return obj
