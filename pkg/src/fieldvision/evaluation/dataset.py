"""Ground-truth and prediction ingestion.

Ground truth is the familiar per-image text layout: one "class_id cx cy w h"
line per object, coordinates normalized, plus a classes.txt naming labels by
id. Predictions are JSONL with one wire DetectionMessage per line; lines may
carry an extra "image" key naming the image stem (extra keys pass through the
wire decoder untouched), otherwise frame ids index the sorted image list.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .. import wire
from ..boxes import ClassMap, Detection, NormBox, PixelBox, norm_to_pixel
from ..errors import DatasetError, GeometryError, WireParseError, WireValidationError
from ..image_io import IMAGE_EXTENSIONS, read_image_size


@dataclass(frozen=True)
class GroundTruthObject:
    class_id: int
    box: NormBox


@dataclass(frozen=True)
class GroundTruthImage:
    image_id: str
    width: int
    height: int
    objects: tuple[GroundTruthObject, ...]

    def pixel_objects(self) -> list[tuple[int, PixelBox]]:
        return [(o.class_id, norm_to_pixel(o.box, self.width, self.height)) for o in self.objects]


@dataclass(frozen=True)
class GroundTruthSet:
    class_map: ClassMap
    images: tuple[GroundTruthImage, ...]  # sorted by image_id

    def by_id(self) -> dict[str, GroundTruthImage]:
        return {im.image_id: im for im in self.images}

    def total_objects(self) -> int:
        return sum(len(im.objects) for im in self.images)


def _find_image(directory: Path, stem: str) -> Path | None:
    for ext in IMAGE_EXTENSIONS:
        candidate = directory / (stem + ext)
        if candidate.exists():
            return candidate
    return None


def load_class_map(directory: str | os.PathLike) -> ClassMap:
    path = Path(directory) / "classes.txt"
    if not path.exists():
        raise DatasetError("classes.txt not found", path=path)
    labels = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not labels:
        raise DatasetError("classes.txt is empty", path=path)
    try:
        return ClassMap(tuple(labels))
    except ValueError as exc:
        raise DatasetError(str(exc), path=path) from exc


def load_ground_truth(directory: str | os.PathLike) -> GroundTruthSet:
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError("ground-truth directory not found", path=directory)
    class_map = load_class_map(directory)

    images: list[GroundTruthImage] = []
    image_files = {
        p.stem: p for p in sorted(directory.iterdir()) if p.suffix.lower() in IMAGE_EXTENSIONS
    }
    label_files = {
        p.stem: p for p in sorted(directory.iterdir())
        if p.suffix == ".txt" and p.name != "classes.txt"
    }
    for stem, label_path in label_files.items():
        if stem not in image_files:
            raise DatasetError("label file has no matching image", path=label_path)
    for stem, image_path in sorted(image_files.items()):
        try:
            width, height = read_image_size(image_path)
        except (OSError, ValueError) as exc:
            raise DatasetError(f"unreadable image: {exc}", path=image_path) from exc
        objects: list[GroundTruthObject] = []
        label_path = label_files.get(stem)
        if label_path is not None:
            objects = _parse_label_file(label_path, class_map)
        images.append(
            GroundTruthImage(image_id=stem, width=width, height=height, objects=tuple(objects))
        )
    if not images:
        raise DatasetError("no images in ground-truth directory", path=directory)
    return GroundTruthSet(class_map=class_map, images=tuple(images))


def _parse_label_file(path: Path, class_map: ClassMap) -> list[GroundTruthObject]:
    objects = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise DatasetError(
                f"expected 'class_id cx cy w h', got {len(fields)} fields",
                path=path, line=lineno,
            )
        try:
            class_id = int(fields[0])
            cx, cy, w, h = (float(f) for f in fields[1:])
        except ValueError as exc:
            raise DatasetError(f"unparseable number: {exc}", path=path, line=lineno) from exc
        if not 0 <= class_id < len(class_map):
            raise DatasetError(f"class id {class_id} not in class map", path=path, line=lineno)
        try:
            box = NormBox(cx=cx, cy=cy, w=w, h=h)
        except GeometryError as exc:
            raise DatasetError(str(exc), path=path, line=lineno) from exc
        objects.append(GroundTruthObject(class_id=class_id, box=box))
    return objects


def write_prediction_line(msg: wire.DetectionMessage, image_id: str | None = None) -> str:
    """One JSONL line: the canonical wire dict plus an optional image key."""
    obj = wire.to_wire_dict(msg)
    if image_id is not None:
        obj["image"] = image_id
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def load_predictions(
    path: str | os.PathLike, gts: GroundTruthSet
) -> dict[str, list[Detection]]:
    """Predictions per image id, resolved against the ground-truth registry."""
    path = Path(path)
    if not path.exists():
        raise DatasetError("prediction file not found", path=path)
    registry = gts.by_id()
    order = [im.image_id for im in gts.images]
    preds: dict[str, list[Detection]] = {im: [] for im in order}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                msg = wire.decode(line)
            except (WireParseError, WireValidationError) as exc:
                raise DatasetError(f"bad prediction line: {exc}", path=path, line=lineno) from exc
            image_id = None
            try:
                extra = json.loads(line)
                image_id = extra.get("image")
            except json.JSONDecodeError:  # unreachable after decode(), kept for safety
                pass
            if image_id is None:
                if msg.frame_id >= len(order):
                    raise DatasetError(
                        f"frame id {msg.frame_id} outside dataset of {len(order)} images",
                        path=path, line=lineno,
                    )
                image_id = order[msg.frame_id]
            if image_id not in registry:
                raise DatasetError(f"unknown image {image_id!r}", path=path, line=lineno)
            gt_img = registry[image_id]
            for wd in msg.detections:
                if wd.class_id >= len(gts.class_map):
                    raise DatasetError(
                        f"class id {wd.class_id} not in class map", path=path, line=lineno
                    )
                expected = gts.class_map.label_for(wd.class_id)
                if wd.label != expected:
                    raise DatasetError(
                        f"label {wd.label!r} does not match class {wd.class_id} ({expected!r})",
                        path=path, line=lineno,
                    )
                preds[image_id].append(
                    Detection(
                        class_id=wd.class_id,
                        label=wd.label,
                        confidence=wd.confidence,
                        box=norm_to_pixel(wd.bbox, gt_img.width, gt_img.height),
                        frame_id=msg.frame_id,
                    )
                )
    return preds
