"""Evaluation report: container, console table, and machine-readable JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .metrics import ConfusionMatrix, MapScores


@dataclass(frozen=True)
class FpsStats:
    mean: float
    p50: float
    p95: float

    @classmethod
    def from_latencies(cls, latencies: list[float], elapsed: float, frames: int) -> FpsStats | None:
        if not latencies or elapsed <= 0:
            return None
        ordered = sorted(latencies)

        def pct(q: float) -> float:
            idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
            return ordered[idx]

        return cls(mean=frames / elapsed, p50=pct(0.50), p95=pct(0.95))


@dataclass(frozen=True)
class EvalReport:
    """Everything one benchmark or evaluation run measured."""

    mode: str
    detector: str = ""
    n_images: int = 0
    n_ground_truth: int = 0
    n_predictions: int = 0
    precision: float | None = None
    recall: float | None = None
    tp: int = 0
    fp: int = 0
    fn: int = 0
    map: MapScores | None = None
    confusion: ConfusionMatrix | None = None
    fps: FpsStats | None = None
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out: dict = {
            "mode": self.mode,
            "detector": self.detector,
            "n_images": self.n_images,
            "n_ground_truth": self.n_ground_truth,
            "n_predictions": self.n_predictions,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }
        if self.precision is not None:
            out["precision"] = self.precision
            out["recall"] = self.recall
        if self.map is not None:
            out["map50"] = self.map.map50
            out["map50_95"] = self.map.map50_95
            out["ap_per_class"] = {
                label: {f"{t:.2f}": ap for t, ap in aps.items()}
                for label, aps in self.map.per_class.items()
            }
        if self.confusion is not None:
            out["confusion"] = {
                "labels": list(self.confusion.labels) + ["background"],
                "rows": [list(row) for row in self.confusion.cells],
            }
        if self.fps is not None:
            out["fps"] = {"mean": self.fps.mean, "p50_s": self.fps.p50, "p95_s": self.fps.p95}
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def render(self) -> str:
        lines = [f"=== {self.mode} evaluation: {self.detector or 'n/a'} ==="]
        lines.append(
            f"images: {self.n_images}   ground truth: {self.n_ground_truth}   "
            f"predictions: {self.n_predictions}"
        )
        if self.fps is not None:
            lines.append(
                f"FPS: {self.fps.mean:.2f}   latency p50: {self.fps.p50 * 1000:.1f} ms   "
                f"p95: {self.fps.p95 * 1000:.1f} ms"
            )
        if self.precision is not None:
            lines.append(
                f"precision: {self.precision:.4f}   recall: {self.recall:.4f}   "
                f"(TP {self.tp} / FP {self.fp} / FN {self.fn})"
            )
        if self.map is not None:
            lines.append(f"mAP50: {self.map.map50:.4f}   mAP50-95: {self.map.map50_95:.4f}")
            for label, aps in sorted(self.map.per_class.items()):
                ap50 = aps.get(0.5)
                mean_ap = sum(aps.values()) / len(aps)
                lines.append(f"  AP[{label}]: @0.50 {ap50:.4f}   @0.50:0.95 {mean_ap:.4f}")
        if self.confusion is not None:
            lines.append(_render_confusion(self.confusion))
        return "\n".join(lines)


def _render_confusion(cm: ConfusionMatrix) -> str:
    names = list(cm.labels) + ["background"]
    width = max(len(n) for n in names) + 2
    header = " " * width + "".join(n.rjust(width) for n in names)
    rows = [header]
    for name, row in zip(names, cm.cells):
        rows.append(name.rjust(width) + "".join(str(v).rjust(width) for v in row))
    return "confusion matrix (rows: truth, columns: predicted):\n" + "\n".join(rows)


def render_comparison(a: EvalReport, b: EvalReport) -> str:
    """Side-by-side table with deltas, one row per detector."""

    def fps_of(r: EvalReport) -> float | None:
        return r.fps.mean if r.fps else None

    def fmt(v, suffix="") -> str:
        return "-" if v is None else f"{v:.2f}{suffix}"

    rows = [
        ("module", a.detector or "A", b.detector or "B"),
        ("speed (FPS)", fmt(fps_of(a)), fmt(fps_of(b))),
        ("precision", fmt(None if a.precision is None else a.precision * 100, "%"),
         fmt(None if b.precision is None else b.precision * 100, "%")),
    ]
    widths = [max(len(str(r[i])) for r in rows) for i in range(3)]
    lines = []
    for r in rows:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    deltas = []
    if a.fps and b.fps:
        deltas.append(f"dFPS (B-A): {b.fps.mean - a.fps.mean:+.2f}")
    if a.precision is not None and b.precision is not None:
        deltas.append(f"dPrecision (B-A): {(b.precision - a.precision) * 100:+.2f}%")
    if deltas:
        lines.append("  ".join(deltas))
    return "\n".join(lines)
