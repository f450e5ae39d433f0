"""Evaluation against simulator ground truth: mask IoU, distance error and decision accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Category, Mask, mask_iou
from .errors import AlignmentError, ParameterError
from .monitor import MonitorConfig, evaluate_frame
from .sim import GroundTruthFrame

VIEW_LETTERS = {"f": "front", "s": "side", "t": "top"}
DEFAULT_SUBSETS = ("f", "s", "t", "f+s", "f+t", "s+t", "f+s+t")

Pair = tuple[Category, Category]


@dataclass
class IoUReport:
    per_category: dict[tuple[str, Category], float] = field(default_factory=dict)
    frames: dict[tuple[str, Category], int] = field(default_factory=dict)
    miou: dict[str, float] = field(default_factory=dict)
    cameras: list[str] = field(default_factory=list)
    categories: list[Category] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            cam: {
                **{c.name: self.per_category.get((cam, c)) for c in self.categories},
                "mIoU": self.miou.get(cam),
            }
            for cam in self.cameras
        }


def iou_report(pred: Iterable[tuple[int, str, Mapping[Category, Mask]]],
               gt: Iterable[tuple[int, str, Mapping[Category, Mask]]]) -> IoUReport:
    """Average per-frame IoU for every (camera, category) that ground truth shows.

    Frames where ground truth lacks a category are skipped for that category;
    a missing prediction scores 0.
    """
    pred, gt = list(pred), list(gt)
    if [(f, c) for f, c, _ in pred] != [(f, c) for f, c, _ in gt]:
        raise AlignmentError("prediction and ground-truth mask streams are not aligned")
    sums: dict[tuple[str, Category], float] = {}
    counts: dict[tuple[str, Category], int] = {}
    cams, cats = [], set()
    for (_, cam, pm), (_, _, gm) in zip(pred, gt):
        if cam not in cams:
            cams.append(cam)
        for cat, gmask in gm.items():
            if gmask is None or gmask.is_empty:
                continue
            pmask = pm.get(cat)
            if pmask is None:
                pmask = Mask.empty(gmask.resolution)
            key = (cam, cat)
            sums[key] = sums.get(key, 0.0) + mask_iou(pmask, gmask)
            counts[key] = counts.get(key, 0) + 1
            cats.add(cat)
    report = IoUReport(cameras=cams, categories=sorted(cats))
    for key, total in sums.items():
        report.per_category[key] = total / counts[key]
        report.frames[key] = counts[key]
    for cam in cams:
        vals = [v for (c, _), v in report.per_category.items() if c == cam]
        if vals:
            report.miou[cam] = float(np.mean(vals))
    return report


@dataclass
class ErrorCell:
    mae: float
    std: float
    n: int


@dataclass
class DistanceErrorReport:
    cells: dict[tuple[str, Pair], ErrorCell | None] = field(default_factory=dict)
    cameras: list[str] = field(default_factory=list)
    pairs: list[Pair] = field(default_factory=list)

    def worst_cell(self) -> ErrorCell | None:
        defined = [c for c in self.cells.values() if c is not None]
        if not defined:
            return None
        return max(defined, key=lambda c: (c.mae, c.std))

    def to_json(self) -> dict:
        from .streams import pair_code

        out = {}
        for cam in self.cameras:
            row = {}
            for p in self.pairs:
                cell = self.cells.get((cam, p))
                row[pair_code(p)] = None if cell is None else {"mae": cell.mae, "std": cell.std, "n": cell.n}
            out[cam] = row
        return out


def distance_error_report(measured: Iterable[tuple[int, Pair, Mapping[str, float | None]]],
                          gt_frames: Sequence[GroundTruthFrame]) -> DistanceErrorReport:
    """MAE and population STD of absolute errors per (camera, pair) over frames where both are defined."""
    by_frame = {g.frame_index: g for g in gt_frames}
    errors: dict[tuple[str, Pair], list[float]] = {}
    cams: list[str] = []
    pairs: set[Pair] = set()
    seen_frames = set()
    for frame, pair, per_view in measured:
        g = by_frame.get(frame)
        if g is None:
            raise AlignmentError(f"frame {frame} has no ground truth")
        seen_frames.add(frame)
        pairs.add(pair)
        truth = g.distances.get(pair, {})
        for cam, d in per_view.items():
            if cam not in cams:
                cams.append(cam)
            errors.setdefault((cam, pair), [])
            t = truth.get(cam)
            if d is None or t is None:
                continue
            errors[(cam, pair)].append(abs(d - t))
    if seen_frames != set(by_frame):
        raise AlignmentError("measured stream and ground truth cover different frames")
    report = DistanceErrorReport(cameras=cams, pairs=sorted(pairs, key=lambda p: (p[0].id, p[1].id)))
    for key, errs in errors.items():
        if errs:
            arr = np.asarray(errs)
            report.cells[key] = ErrorCell(float(arr.mean()), float(arr.std()), len(errs))
        else:
            report.cells[key] = None
    return report


@dataclass
class AccuracyReport:
    accuracy: dict[str, float] = field(default_factory=dict)  # subset label -> accuracy
    units: int = 0
    subsets: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def overall(self) -> float:
        return self.accuracy[list(self.accuracy)[-1]]

    def to_json(self) -> dict:
        return {"units": self.units,
                "accuracy": dict(self.accuracy),
                "subsets": {k: list(v) for k, v in self.subsets.items()}}


def resolve_subset(label: str, views: Mapping[str, str]) -> tuple[str, ...]:
    """Map 'f+s' style labels (or camera names) to camera names. ``views`` is camera -> view type."""
    cams = []
    for token in label.split("+"):
        token = token.strip()
        if token in VIEW_LETTERS:
            hits = [c for c, v in views.items() if v == VIEW_LETTERS[token]]
        elif token in views:
            hits = [token]
        else:
            hits = []
        if not hits:
            raise ParameterError(f"unknown view {token!r} in subset {label!r}")
        cams.extend(h for h in hits if h not in cams)
    return tuple(cams)


def accuracy(decisions: Sequence[bool], truths: Sequence[bool]) -> float:
    if len(decisions) != len(truths):
        raise AlignmentError("decision and ground-truth sequences differ in length")
    if not decisions:
        return math.nan
    return sum(d == t for d, t in zip(decisions, truths)) / len(decisions)


def accuracy_report(units: Sequence[tuple[int, Pair, Mapping[str, float | None], bool]],
                    view_subsets: Sequence[str], views: Mapping[str, str],
                    cfg: MonitorConfig | None = None) -> AccuracyReport:
    """Re-decide every (frame, pair) unit using only the views of each subset.

    Subsets are reported in the given order except that the one using the
    most cameras (full fusion) is moved last.
    """
    cfg = cfg or MonitorConfig()
    resolved = {label: resolve_subset(label, views) for label in view_subsets}
    order = sorted(resolved, key=lambda k: (len(resolved[k]) == max(map(len, resolved.values())),))
    report = AccuracyReport(units=len(units), subsets={k: resolved[k] for k in order})
    truths = [u[3] for u in units]
    for label in order:
        cams = resolved[label]
        decisions = [evaluate_frame({c: per_view.get(c) for c in cams}, cfg)[0] for _, _, per_view, _ in units]
        report.accuracy[label] = accuracy(decisions, truths)
    return report


# -- text tables --------------------------------------------------------------

def _pct(v):
    return "-" if v is None else f"{100 * v:.1f}"


def format_iou_table(report: IoUReport, categories: Sequence[Category] | None = None,
                     views: Mapping[str, str] | None = None) -> str:
    cats = list(categories or report.categories)
    head = ["", *[c.name.capitalize() for c in cats], "mIoU"]
    rows = []
    for cam in report.cameras:
        label = f"View-{views[cam]}" if views and views.get(cam) else cam
        rows.append([label, *[_pct(report.per_category.get((cam, c))) for c in cats], _pct(report.miou.get(cam))])
    return _table(head, rows)


def format_distance_table(report: DistanceErrorReport, views: Mapping[str, str] | None = None) -> str:
    from .streams import pair_code

    head = ["", *[pair_code(p) for p in report.pairs]]
    rows = []
    for cam in report.cameras:
        label = f"View-{views[cam]}" if views and views.get(cam) else cam
        cells = []
        for p in report.pairs:
            c = report.cells.get((cam, p))
            cells.append("-" if c is None else f"{c.mae:.1f} / {c.std:.1f}")
        rows.append([label, *cells])
    return _table(head, rows)


def format_accuracy_table(report: AccuracyReport) -> str:
    head = ["View Combination", *report.accuracy]
    return _table(head, [["Accuracy (%)", *[_pct(v) for v in report.accuracy.values()]]])


def _table(head, rows) -> str:
    widths = [max(len(str(r[i])) for r in [head, *rows]) for i in range(len(head))]
    lines = [" | ".join(str(v).rjust(w) for v, w in zip(r, widths)) for r in [head, *rows]]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)
