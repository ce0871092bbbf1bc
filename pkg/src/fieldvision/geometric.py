"""Classical color-segmentation detector.

Hue ranges per class (dual ranges supported, so bright and dim halves of an
unevenly lit object can be unioned), 8-connected contour extraction, and
rule-based shape classification: circularity for round targets, a principal
axis plus tip-side area asymmetry for direction arrows, mask centroid for
the guide line. Detection confidence is the shape-quality score, so this
detector's output is directly comparable with learned backends.

Thresholds live in profile files, not code; calibrating them per venue is
the known cost of this approach.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from . import _kernels
from .boxes import ClassMap, Detection, EVENT_CLASS_MAPS, PixelBox
from .errors import AmbiguousShapeError, ConfigError
from .image import Image
from .textconf import parse_sections

ISOTROPY_LIMIT = 0.95  # eigenvalue ratio above which a shape has no usable axis

SHAPE_ROUND = "round"
SHAPE_ARROW = "arrow"
SHAPE_LINE = "line"

ARROW_LABELS = {"left": "left_arrow", "right": "right_arrow", "forward": "forward_arrow"}


def rgb_to_hsv(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Hexcone conversion: hue in degrees [0, 360), s and v in [0, 1].

    Black and grays report hue 0 by convention.
    """
    mx = max(r, g, b)
    mn = min(r, g, b)
    v = mx / 255.0
    c = mx - mn
    s = 0.0 if mx == 0 else c / mx
    if c == 0:
        h = 0.0
    elif mx == r:
        h = 60.0 * (g - b) / c
        if h < 0.0:
            h += 360.0
    elif mx == g:
        h = 60.0 * (b - r) / c + 120.0
    else:
        h = 60.0 * (r - g) / c + 240.0
    return h, s, v


@dataclass(frozen=True)
class HsvRange:
    """Closed HSV interval; the hue interval may wrap through 0 (h_lo > h_hi)."""

    h_lo: float
    h_hi: float
    s_lo: float = 0.0
    s_hi: float = 1.0
    v_lo: float = 0.0
    v_hi: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.h_lo < 360.0 and 0.0 <= self.h_hi < 360.0):
            raise ValueError(f"hue bounds ({self.h_lo}, {self.h_hi}) outside [0, 360)")
        for lo, hi, name in ((self.s_lo, self.s_hi, "s"), (self.v_lo, self.v_hi, "v")):
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"{name} bounds ({lo}, {hi}) invalid")

    def contains(self, h: float, s: float, v: float) -> bool:
        if not (self.s_lo <= s <= self.s_hi and self.v_lo <= v <= self.v_hi):
            return False
        if self.h_lo <= self.h_hi:
            return self.h_lo <= h <= self.h_hi
        return h >= self.h_lo or h <= self.h_hi

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.h_lo, self.h_hi, self.s_lo, self.s_hi, self.v_lo, self.v_hi)


class Mask:
    """Binary per-pixel mask matching a source image's dimensions."""

    __slots__ = ("width", "height", "bits")

    def __init__(self, width: int, height: int, bits: bytearray | bytes | None = None):
        if width <= 0 or height <= 0:
            raise ValueError(f"empty mask {width}x{height}")
        n = width * height
        if bits is None:
            bits = bytearray(n)
        else:
            bits = bytearray(bits)
            if len(bits) != n:
                raise ValueError(f"mask buffer holds {len(bits)} bytes, expected {n}")
        self.width = width
        self.height = height
        self.bits = bits

    def count(self) -> int:
        return sum(self.bits)

    def get(self, x: int, y: int) -> bool:
        return self.bits[y * self.width + x] != 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Mask)
            and self.width == other.width
            and self.height == other.height
            and self.bits == other.bits
        )


def segment(img: Image, ranges) -> Mask:
    """Pixels whose HSV falls within any of the given ranges (union)."""
    ranges = list(ranges)
    if not ranges:
        raise ValueError("segment needs at least one range")
    flat: list[float] = []
    for r in ranges:
        flat.extend(r.as_tuple())
    bits = _kernels.hsv_mask_union(img.pixels, img.width * img.height, flat)
    return Mask(img.width, img.height, bits)


@dataclass(frozen=True)
class Contour:
    """One 8-connected foreground component.

    `boundary` is the ordered outer boundary in pixel-index coordinates;
    `centroid` and `bbox` are in continuous pixel coordinates (a pixel's
    center is at index + 0.5). Central second moments are shift-invariant
    and feed the arrow classifier.
    """

    boundary: tuple[tuple[int, int], ...]
    area: int
    perimeter: float
    centroid: tuple[float, float]
    bbox: PixelBox
    mu20: float
    mu02: float
    mu11: float

    def mirrored(self, width: int) -> Contour:
        """The contour as seen in a horizontally flipped image of `width` px."""
        pts = tuple((width - 1 - x, y) for x, y in reversed(self.boundary))
        cx, cy = self.centroid
        return Contour(
            boundary=pts,
            area=self.area,
            perimeter=self.perimeter,
            centroid=(width - cx, cy),
            bbox=PixelBox(width - self.bbox.x2, self.bbox.y1, width - self.bbox.x1, self.bbox.y2),
            mu20=self.mu20,
            mu02=self.mu02,
            mu11=-self.mu11,
        )


_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_MOORE_INDEX = {off: i for i, off in enumerate(_MOORE)}


def _trace_boundary(labels, w: int, h: int, target: int, sx: int, sy: int):
    """Moore-neighbor boundary trace, clockwise, starting at the component's
    first row-major pixel (whose west neighbor is guaranteed background)."""

    def fg(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and labels[y * w + x] == target

    if not any(fg(sx + dx, sy + dy) for dx, dy in _MOORE):
        return [(sx, sy)]

    boundary = [(sx, sy)]
    cx, cy = sx, sy
    bdir = 4  # direction from current to its backtrack point; start: west
    initial = None
    limit = 4 * w * h
    while limit > 0:
        limit -= 1
        for k in range(1, 9):
            d = (bdir + k) % 8
            nx, ny = cx + _MOORE[d][0], cy + _MOORE[d][1]
            if fg(nx, ny):
                break
        prev_d = (bdir + k - 1) % 8
        px, py = cx + _MOORE[prev_d][0], cy + _MOORE[prev_d][1]
        if initial is None:
            initial = (nx, ny, px, py)
        elif (cx, cy) == (sx, sy) and (nx, ny, px, py) == initial:
            break
        cx, cy = nx, ny
        bdir = _MOORE_INDEX[(px - cx, py - cy)]
        if (cx, cy) == (sx, sy):
            continue  # passing through start; termination checked above
        boundary.append((cx, cy))
    return boundary


def _chain_length(points) -> float:
    if len(points) < 2:
        return 0.0
    total = 0.0
    for i in range(len(points)):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % len(points)]
        total += math.hypot(x2 - x1, y2 - y1)
    return total


def find_contours(mask: Mask) -> list[Contour]:
    """All 8-connected components with area, perimeter, centroid, and moments."""
    w, h = mask.width, mask.height
    labels, count = _kernels.label_components8(mask.bits, w, h)
    if count == 0:
        return []
    stats = _kernels.region_stats(labels, w, h, count)
    # first row-major pixel per component, for trace starts
    starts: dict[int, tuple[int, int]] = {}
    i = 0
    for y in range(h):
        if len(starts) == count:
            break
        for x in range(w):
            lab = labels[i]
            i += 1
            if lab != 0 and lab not in starts:
                starts[lab] = (x, y)
    contours = []
    for lab in range(1, count + 1):
        area, min_x, min_y, max_x, max_y, sx, sy, sxx, syy, sxy = stats[lab - 1]
        boundary = _trace_boundary(labels, w, h, lab, *starts[lab])
        mean_x = sx / area
        mean_y = sy / area
        contours.append(
            Contour(
                boundary=tuple(boundary),
                area=area,
                perimeter=_chain_length(boundary),
                centroid=(mean_x + 0.5, mean_y + 0.5),
                bbox=PixelBox(min_x, min_y, max_x + 1, max_y + 1),
                mu20=sxx / area - mean_x * mean_x,
                mu02=syy / area - mean_y * mean_y,
                mu11=sxy / area - mean_x * mean_y,
            )
        )
    return contours


def circularity(c: Contour) -> float:
    """4*pi*A / P^2: 1.0 for an ideal disk, lower for anything less round."""
    if c.perimeter <= 0:
        return 0.0
    return 4.0 * math.pi * c.area / (c.perimeter * c.perimeter)


def _clip_halfplane(poly, origin, normal):
    """Sutherland-Hodgman clip keeping points with (p - origin) . normal >= 0."""
    out = []
    n = len(poly)
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        dp = (p[0] - origin[0]) * normal[0] + (p[1] - origin[1]) * normal[1]
        dq = (q[0] - origin[0]) * normal[0] + (q[1] - origin[1]) * normal[1]
        if dp >= 0.0:
            out.append(p)
            if dq < 0.0:
                t = dp / (dp - dq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        elif dq >= 0.0:
            t = dp / (dp - dq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _shoelace(poly) -> float:
    total = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2.0


def arrow_axis(c: Contour) -> tuple[float, float]:
    """Unit vector along the contour's principal axis.

    Raises AmbiguousShapeError for nearly isotropic shapes, which have no
    meaningful orientation.
    """
    diff = c.mu20 - c.mu02
    common = math.hypot(diff, 2.0 * c.mu11)
    lam_max = (c.mu20 + c.mu02 + common) / 2.0
    lam_min = (c.mu20 + c.mu02 - common) / 2.0
    if lam_max <= 0.0 or lam_min / lam_max > ISOTROPY_LIMIT:
        raise AmbiguousShapeError("contour is nearly isotropic; no principal axis")
    theta = 0.5 * math.atan2(2.0 * c.mu11, diff)
    return math.cos(theta), math.sin(theta)


def tip_direction(c: Contour) -> tuple[float, float]:
    """Signed principal-axis direction pointing at the arrow tip.

    The contour is split at its centroid perpendicular to the principal
    axis; the half with less area is the pointed end.
    """
    ux, uy = arrow_axis(c)
    if len(c.boundary) < 3:
        raise AmbiguousShapeError("boundary too small to orient")
    poly = [(x + 0.5, y + 0.5) for x, y in c.boundary]
    total = abs(_shoelace(poly))
    if total <= 0.0:
        raise AmbiguousShapeError("degenerate boundary polygon")
    ahead = abs(_shoelace(_clip_halfplane(poly, c.centroid, (ux, uy))))
    behind = max(total - ahead, 0.0)
    if ahead < behind:
        return ux, uy
    return -ux, -uy


def arrow_asymmetry(c: Contour) -> float:
    """Share of boundary-polygon area on the heavier side of the centroid split.

    0.5 means perfectly symmetric along the axis; used as the confidence of
    arrow detections.
    """
    ux, uy = arrow_axis(c)
    poly = [(x + 0.5, y + 0.5) for x, y in c.boundary]
    total = abs(_shoelace(poly))
    if total <= 0.0:
        return 0.0
    ahead = abs(_shoelace(_clip_halfplane(poly, c.centroid, (ux, uy))))
    behind = max(total - ahead, 0.0)
    return min(1.0, max(ahead, behind) / total)


def classify_arrow(c: Contour) -> str:
    """"left", "right", or "forward" (tip up) from contour geometry alone.

    Screen coordinates: y grows downward, so a tip pointing up has a
    negative y component.
    """
    tx, ty = tip_direction(c)
    if abs(ty) >= abs(tx) and ty < 0.0:
        return "forward"
    return "right" if tx > 0.0 else "left"


@dataclass(frozen=True)
class ClassRule:
    """Segmentation ranges and shape gate for one class (or the arrow group)."""

    label: str
    shape: str
    ranges: tuple[HsvRange, ...]
    min_area: float
    circularity: tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        if self.shape not in (SHAPE_ROUND, SHAPE_ARROW, SHAPE_LINE):
            raise ConfigError(f"unknown shape {self.shape!r} for {self.label!r}")
        if not self.ranges:
            raise ConfigError(f"rule {self.label!r} has no HSV ranges")
        if self.min_area <= 0:
            raise ConfigError(f"rule {self.label!r} needs min_area > 0")


@dataclass(frozen=True)
class GeoProfile:
    """Per-event calibration: class map plus one rule per detected shape."""

    event: str
    class_map: ClassMap
    rules: tuple[ClassRule, ...] = field(default_factory=tuple)

    def rule_for(self, label: str) -> ClassRule | None:
        for r in self.rules:
            if r.label == label:
                return r
        return None

    def rules_with_shape(self, shape: str) -> list[ClassRule]:
        return [r for r in self.rules if r.shape == shape]


def _parse_ranges(text: str, source: str) -> tuple[HsvRange, ...]:
    ranges = []
    for part in text.split("|"):
        fields = part.split()
        if len(fields) != 3:
            raise ConfigError(f"{source}: range needs 'h s v' triples, got {part.strip()!r}")
        lohi = []
        for f in fields:
            bounds = f.split(":")
            if len(bounds) != 2:
                raise ConfigError(f"{source}: bound must be 'lo:hi', got {f!r}")
            lohi.append((float(bounds[0]), float(bounds[1])))
        try:
            ranges.append(
                HsvRange(
                    h_lo=lohi[0][0], h_hi=lohi[0][1],
                    s_lo=lohi[1][0], s_hi=lohi[1][1],
                    v_lo=lohi[2][0], v_hi=lohi[2][1],
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{source}: {exc}") from exc
    return tuple(ranges)


def parse_profile(text: str, source: str = "<string>") -> GeoProfile:
    sections = parse_sections(text, source=source)
    preamble = sections.pop("")
    event = preamble.get("event", "custom")
    if "classes" in preamble:
        class_map = ClassMap(tuple(preamble["classes"].split()))
    elif event in EVENT_CLASS_MAPS:
        class_map = EVENT_CLASS_MAPS[event]
    else:
        raise ConfigError(f"{source}: unknown event {event!r} and no 'classes' key")

    rules = []
    for name, keys in sections.items():
        shape = keys.get("shape")
        if shape is None:
            raise ConfigError(f"{source}: [{name}] is missing 'shape'")
        if "ranges" not in keys:
            raise ConfigError(f"{source}: [{name}] is missing 'ranges'")
        circ = (0.0, math.inf)
        if "circularity" in keys:
            lo, _, hi = keys["circularity"].partition(":")
            circ = (float(lo), float(hi))
        rule = ClassRule(
            label=name,
            shape=shape,
            ranges=_parse_ranges(keys["ranges"], source),
            min_area=float(keys.get("min_area", "100")),
            circularity=circ,
        )
        if shape == SHAPE_ARROW:
            missing = [l for l in ARROW_LABELS.values() if l not in class_map]
            if missing:
                raise ConfigError(f"{source}: class map lacks arrow labels {missing}")
        elif name not in class_map:
            raise ConfigError(f"{source}: [{name}] is not a class of event {event!r}")
        rules.append(rule)
    return GeoProfile(event=event, class_map=class_map, rules=tuple(rules))


def load_profile(path: str | os.PathLike) -> GeoProfile:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from exc
    return parse_profile(text, source=os.fspath(path))


def builtin_profile_path(event: str) -> str:
    path = os.path.join(os.path.dirname(__file__), "profiles", f"{event}.profile")
    if not os.path.exists(path):
        raise ConfigError(f"no built-in profile for event {event!r}")
    return path


def load_builtin_profile(event: str) -> GeoProfile:
    return load_profile(builtin_profile_path(event))


def detect_round(img: Image, profile: GeoProfile, class_id: int, frame_id: int = 0) -> Detection | None:
    """Largest sufficiently round blob in the class's color ranges, if any."""
    label = profile.class_map.label_for(class_id)
    rule = profile.rule_for(label)
    if rule is None:
        raise ConfigError(f"profile has no rule for class {label!r}")
    mask = segment(img, rule.ranges)
    best: tuple[Contour, float] | None = None
    for c in find_contours(mask):
        if c.area < rule.min_area:
            continue
        circ = circularity(c)
        if not rule.circularity[0] <= circ <= rule.circularity[1]:
            continue
        if best is None or c.area > best[0].area:
            best = (c, circ)
    if best is None:
        return None
    c, circ = best
    return Detection(
        class_id=class_id,
        label=label,
        confidence=min(1.0, circ),
        box=c.bbox,
        frame_id=frame_id,
    )


def detect_arrows(img: Image, profile: GeoProfile, frame_id: int = 0) -> list[Detection]:
    """All classifiable arrow contours, labeled left/right/forward."""
    rules = profile.rules_with_shape(SHAPE_ARROW)
    if not rules:
        return []
    out = []
    for rule in rules:
        mask = segment(img, rule.ranges)
        for c in find_contours(mask):
            if c.area < rule.min_area:
                continue
            try:
                direction = classify_arrow(c)
            except AmbiguousShapeError:
                continue
            label = ARROW_LABELS[direction]
            out.append(
                Detection(
                    class_id=profile.class_map.id_for(label),
                    label=label,
                    confidence=arrow_asymmetry(c),
                    box=c.bbox,
                    frame_id=frame_id,
                )
            )
    return out


def _line_mask_stats(img: Image, rule: ClassRule):
    """Segment the frame's lower third; returns (total_area, centroid_x, bbox)."""
    y0 = img.height - img.height // 3
    crop = img.crop(0, y0, img.width, img.height)
    mask = segment(crop, rule.ranges)
    labels, count = _kernels.label_components8(mask.bits, mask.width, mask.height)
    if count == 0:
        return 0, 0.0, None
    stats = _kernels.region_stats(labels, mask.width, mask.height, count)
    total = sum(s[0] for s in stats)
    sum_x = sum(s[5] for s in stats)
    largest = max(stats, key=lambda s: s[0])
    bbox = PixelBox(largest[1], y0 + largest[2], largest[3] + 1, y0 + largest[4] + 1)
    return total, sum_x / total + 0.5, bbox


def detect_line(img: Image, profile: GeoProfile) -> float | None:
    """Lateral offset of the guide line in [-1, 1], or None if not visible.

    Offset is the line mask's centroid in the frame's lower third relative
    to frame center: -1 full left, +1 full right.
    """
    rules = profile.rules_with_shape(SHAPE_LINE)
    if not rules:
        raise ConfigError("profile has no line rule")
    rule = rules[0]
    total, centroid_x, _ = _line_mask_stats(img, rule)
    if total < rule.min_area:
        return None
    half = img.width / 2.0
    return max(-1.0, min(1.0, (centroid_x - half) / half))


def detect_line_blob(img: Image, profile: GeoProfile, frame_id: int = 0) -> Detection | None:
    """Box-producing variant of `detect_line` for the detector interface.

    Confidence is the largest blob's fill fraction of its own bounding box.
    """
    rules = profile.rules_with_shape(SHAPE_LINE)
    if not rules:
        return None
    rule = rules[0]
    total, _, bbox = _line_mask_stats(img, rule)
    if total < rule.min_area or bbox is None:
        return None
    label = rule.label
    solidity = min(1.0, total / bbox.area)
    return Detection(
        class_id=profile.class_map.id_for(label),
        label=label,
        confidence=solidity,
        box=bbox,
        frame_id=frame_id,
    )
