"""All-view collision fusion, consecutive-frame confirmation and reliability arithmetic."""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import Category
from .errors import ParameterError

SECONDS_PER_YEAR = 31_557_600.0  # Julian year
ABSENT_POLICIES = ("exclude", "treat_as_far")


@dataclass(frozen=True)
class MonitorConfig:
    delta_px: float = 10.0
    consecutive_k: int = 1
    replicas_r: int = 1
    absent_view_policy: str = "exclude"

    def __post_init__(self):
        if not self.delta_px > 0:
            raise ParameterError("delta_px must be > 0")
        if self.consecutive_k < 1:
            raise ParameterError("consecutive_k must be >= 1")
        if self.replicas_r < 1:
            raise ParameterError("replicas_r must be >= 1")
        if self.absent_view_policy not in ABSENT_POLICIES:
            raise ParameterError(f"absent_view_policy must be one of {ABSENT_POLICIES}")


@dataclass
class WarningEvent:
    frame_index: int
    pair: tuple[Category, Category]
    raw: bool
    confirmed: bool
    status: str  # "ok" or "unknown" (pair not visible in any view)
    views_used: tuple[str, ...]
    min_distances_px: dict[str, float | None] = field(default_factory=dict)
    replica_raw: tuple[bool, ...] = ()


def evaluate_frame(distances: Mapping[str, float | None], cfg: MonitorConfig) -> tuple[bool, str, tuple[str, ...]]:
    """Apply the all-view rule to one pair at one frame.

    Returns ``(raw, status, views_used)``; ``status`` is ``"unknown"`` when no
    view defines a distance, in which case ``raw`` is False.
    """
    used = tuple(sorted(v for v, d in distances.items() if d is not None))
    if not used:
        return False, "unknown", ()
    if cfg.absent_view_policy == "treat_as_far" and len(used) < len(distances):
        return False, "ok", used
    raw = all(distances[v] <= cfg.delta_px for v in used)
    return raw, "ok", used


def confirm(history: Sequence[bool], k: int) -> bool:
    """True iff the last ``k`` raw flags are all set."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if len(history) < k:
        return False
    return all(list(history)[-k:])


def fuse_replicas(decisions: Sequence[bool]) -> bool:
    """Unanimous value wins; any disagreement resolves to a warning."""
    if not decisions:
        raise ParameterError("need at least one replica decision")
    return any(decisions)


def calibrate_threshold(mae_max: float, std_max: float) -> int:
    """Smallest integer pixel threshold covering MAE + 2 STD."""
    if mae_max < 0 or std_max < 0:
        raise ParameterError("MAE and STD must be non-negative")
    # rounding first keeps 2.0 + 2*1.0 at 4 rather than ceil(4.000000001)
    delta = math.ceil(round(mae_max + 2.0 * std_max, 9))
    if delta == 0:
        warnings.warn("calibrated threshold is 0 px (no measurement error observed)", stacklevel=2)
    return delta


@dataclass(frozen=True)
class ReliabilityModel:
    per_frame_error_p: float
    replicas_r: int = 1
    consecutive_k: int = 1
    fps: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.per_frame_error_p <= 1.0:
            raise ParameterError("per-frame error probability must lie in [0, 1]")
        if self.replicas_r < 1 or self.consecutive_k < 1:
            raise ParameterError("replicas and consecutive_k must be >= 1")
        if not self.fps > 0:
            raise ParameterError("fps must be > 0")


def combined_error(model: ReliabilityModel) -> float:
    """Per-frame error after r independent replicas and k consecutive confirmations."""
    return model.per_frame_error_p ** (model.replicas_r * model.consecutive_k)


def mean_time_between_errors(model: ReliabilityModel) -> tuple[float, float]:
    """``(seconds, years)``; both infinite when the combined error is zero."""
    p = combined_error(model)
    if p == 0.0:
        return math.inf, math.inf
    seconds = 1.0 / (p * model.fps)
    return seconds, seconds / SECONDS_PER_YEAR


class Monitor:
    """Sequential per-pair decision state. Feed frames in increasing order."""

    def __init__(self, cfg: MonitorConfig):
        self.cfg = cfg
        self._history: dict[tuple[Category, Category], deque] = {}
        self._last_frame = -1

    def step(self, frame_index: int,
             per_replica: Sequence[Mapping[tuple[Category, Category], Mapping[str, float | None]]]) -> list[WarningEvent]:
        """One frame of distances per replica -> one event per pair (canonical order)."""
        if frame_index <= self._last_frame:
            raise ParameterError(f"frame {frame_index} is not after {self._last_frame}")
        self._last_frame = frame_index
        events = []
        for pair in sorted(per_replica[0], key=lambda p: (p[0].id, p[1].id)):
            flags, status, used = [], "unknown", ()
            for rep in per_replica:
                raw_r, st, u = evaluate_frame(rep.get(pair, {}), self.cfg)
                flags.append(raw_r)
                if st == "ok":
                    status = "ok"
                    used = tuple(sorted(set(used) | set(u)))
            raw = fuse_replicas(flags)
            hist = self._history.setdefault(pair, deque(maxlen=self.cfg.consecutive_k))
            hist.append(raw)
            events.append(WarningEvent(
                frame_index=frame_index, pair=pair, raw=raw,
                confirmed=confirm(hist, self.cfg.consecutive_k), status=status,
                views_used=used, min_distances_px=dict(per_replica[0].get(pair, {})),
                replica_raw=tuple(flags) if len(flags) > 1 else (),
            ))
        return events
