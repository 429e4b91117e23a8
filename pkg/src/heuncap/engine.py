"""
Set-oriented proof that a box of initial conditions is captured by the sink.

A cloud of boxes is pushed through the interval Heun map. Each step applies,
to every image box and in this order: absorption (boxes near the period-4
orbit are dropped), snap-to-axis (boxes hugging the invariant x2-axis are
flattened onto it), and bisection down to the width thresholds. Pieces are
deduplicated by their exact endpoints. The proof succeeds when the cloud is
empty.

Two absorption tests are offered. ``paper_faithful`` compares the lower x1
endpoint and the x2 midpoint against the sink points, which is how the
reference table was produced; it is not a containment test. The default,
``strict_containment``, drops a box only if all of it lies in an open
sup-norm ball around a sink point.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from .dynamics import VectorFieldParams, heun_map_boxes
from .interval import (
    Box,
    BoxKey,
    Interval,
    IntervalError,
    add_lohi,
    box_widths,
    split_boxes,
    sub_down,
    sub_up,
)

__all__ = [
    "SINK_POINTS",
    "AbsorptionMode",
    "EngineConfig",
    "Cloud",
    "StepStats",
    "ProofResult",
    "absorb_check",
    "absorb_mask",
    "snap_to_axis",
    "step_cloud",
    "prove_absorption",
    "sink_neighborhood_box",
    "run_sink_invariance",
    "trajectory_box",
    "tiny_box",
    "run_trajectory_proof",
    "ShadowReport",
    "sample_box",
    "shadow_check",
    "ExplosionError",
]

log = logging.getLogger(__name__)

SINK_POINTS = (4.613677692731402, 7.214907799688287,
               3.9654987245283035, 6.9704245174643379)

# positive root of the axis map; sink points must lie below it
_AXIS_ROOT = 8.31177


class AbsorptionMode(str, enum.Enum):
    PAPER_FAITHFUL = "paper_faithful"
    STRICT_CONTAINMENT = "strict_containment"


@dataclass(frozen=True)
class EngineConfig:
    h: float = 0.1
    x1_diam_threshold: float = 0.1
    x2_diam_threshold: float = 0.1
    snap_threshold: float = 0.4
    sink_epsilon: float = 1.3
    sink_points: tuple[float, ...] = SINK_POINTS
    max_steps: int = 250
    absorption_mode: AbsorptionMode = AbsorptionMode.STRICT_CONTAINMENT
    snap_enabled: bool = True
    max_boxes: int = 1_000_000
    lambda_stiff: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "absorption_mode", AbsorptionMode(self.absorption_mode))
        object.__setattr__(self, "sink_points", tuple(float(s) for s in self.sink_points))
        for name in ("h", "x1_diam_threshold", "x2_diam_threshold",
                     "snap_threshold", "sink_epsilon", "lambda_stiff"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if not self.sink_points:
            raise ValueError("at least one sink point is required")
        for s in self.sink_points:
            if not 0 < s < _AXIS_ROOT:
                raise ValueError(f"sink point {s!r} outside (0, {_AXIS_ROOT})")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.max_boxes < 1:
            raise ValueError("max_boxes must be at least 1")

    @property
    def params(self) -> VectorFieldParams:
        return VectorFieldParams(self.lambda_stiff, self.h)

    def replace(self, **changes) -> EngineConfig:
        return replace(self, **changes)


class Cloud:
    """Deduplicated set of boxes stored as a sorted ``(N, 4)`` array.

    Rows are unique by exact endpoints and kept in lexicographic order, so
    a cloud's contents never depend on the order boxes were produced in.
    """

    __slots__ = ("boxes",)

    def __init__(self, boxes=None):
        if boxes is None:
            arr = np.empty((0, 4))
        elif isinstance(boxes, np.ndarray):
            arr = boxes.reshape(-1, 4)
        else:
            rows = [b.to_row() if isinstance(b, Box) else np.asarray(b, float) for b in boxes]
            arr = np.array(rows, dtype=float).reshape(-1, 4)
        if len(arr):
            arr = np.unique(arr + 0.0, axis=0)
        self.boxes = arr

    def __len__(self):
        return len(self.boxes)

    def __iter__(self) -> Iterator[Box]:
        return (Box.from_row(r) for r in self.boxes)

    def __eq__(self, other):
        return isinstance(other, Cloud) and np.array_equal(self.boxes, other.boxes)

    def keys(self) -> list[BoxKey]:
        return [BoxKey(*map(float, r)) for r in self.boxes]

    def contains_points(self, pts) -> np.ndarray:
        """Mask of points (rows of ``pts``) lying in at least one box."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        inside = np.zeros(len(pts), dtype=bool)
        b = self.boxes
        for start in range(0, len(b), 4096):
            c = b[start:start + 4096]
            hit = (
                (pts[:, None, 0] >= c[None, :, 0]) & (pts[:, None, 0] <= c[None, :, 1])
                & (pts[:, None, 1] >= c[None, :, 2]) & (pts[:, None, 1] <= c[None, :, 3])
            )
            inside |= hit.any(axis=1)
        return inside

    def hull(self) -> Box | None:
        if not len(self):
            return None
        b = self.boxes
        return Box.from_bounds(b[:, 0].min(), b[:, 1].max(), b[:, 2].min(), b[:, 3].max())


@dataclass(frozen=True)
class StepStats:
    step: int
    active: int
    absorbed: int
    snapped: int
    images: int = 0  # boxes mapped this step
    pieces: int = 0  # pieces after splitting, before deduplication


@dataclass
class ProofResult:
    success: bool
    history: list[StepStats] = field(default_factory=list)
    peak_active: int = 0
    label: str = ""
    reason: str = ""

    @property
    def steps(self) -> int:
        return len(self.history)


# ---------------------------------------------------------------------------
# Per-box pipeline
# ---------------------------------------------------------------------------


def absorb_mask(boxes: np.ndarray, cfg: EngineConfig) -> np.ndarray:
    eps = cfg.sink_epsilon
    hit = np.zeros(len(boxes), dtype=bool)
    if cfg.absorption_mode is AbsorptionMode.PAPER_FAITHFUL:
        x1 = np.abs(boxes[:, 0])
        x2 = boxes[:, 2] + 0.5 * (boxes[:, 3] - boxes[:, 2])
        for s in cfg.sink_points:
            hit |= np.maximum(x1, np.abs(x2 - s)) < eps
        return hit
    # whole box inside the open ball; offsets rounded outward so a box that
    # touches the sphere is never reported inside
    inside_x1 = (boxes[:, 0] > -eps) & (boxes[:, 1] < eps)
    for s in cfg.sink_points:
        hit |= (sub_down(boxes[:, 2], s) > -eps) & (sub_up(boxes[:, 3], s) < eps)
    return hit & inside_x1


def absorb_check(b: Box, cfg: EngineConfig) -> bool:
    return bool(absorb_mask(b.to_row()[None, :], cfg)[0])


def _snap_mask(boxes: np.ndarray, cfg: EngineConfig) -> np.ndarray:
    near = (boxes[:, 1] > 0) & (boxes[:, 1] < cfg.snap_threshold)
    straddle = near & (boxes[:, 0] < 0)
    if straddle.any():
        log.debug("%d boxes straddle x1 = 0 below the snap threshold; not snapped",
                  int(straddle.sum()))
    return near & ~straddle


def snap_to_axis(b: Box, cfg: EngineConfig) -> tuple[Box, bool]:
    if _snap_mask(b.to_row()[None, :], cfg)[0]:
        return Box(Interval(0.0, 0.0), b.x2), True
    return b, False


def _pieces_estimate(boxes: np.ndarray, cfg: EngineConfig) -> float:
    w1, w2 = box_widths(boxes)
    k1 = np.ceil(np.log2(np.maximum(w1 / cfg.x1_diam_threshold, 1.0)))
    k2 = np.ceil(np.log2(np.maximum(w2 / cfg.x2_diam_threshold, 1.0)))
    return float(np.sum(np.exp2(k1 + k2)))


class ExplosionError(RuntimeError):
    """The cloud outgrew ``max_boxes``."""


def _process_chunk(boxes: np.ndarray, cfg: EngineConfig):
    images = heun_map_boxes(boxes, cfg.params)
    absorbed = absorb_mask(images, cfg)
    kept = images[~absorbed]
    snapped = 0
    absorbed = images[absorbed]
    if cfg.snap_enabled and len(kept):
        mask = _snap_mask(kept, cfg)
        snapped = int(mask.sum())
        kept[mask, 0:2] = 0.0
    if _pieces_estimate(kept, cfg) > 8 * cfg.max_boxes:
        raise ExplosionError("splitting would exceed the box budget")
    pieces = split_boxes(kept, cfg.x1_diam_threshold, cfg.x2_diam_threshold)
    return pieces, absorbed, snapped


def _step(cloud: Cloud, cfg: EngineConfig, step: int, threads: int):
    boxes = cloud.boxes
    n = len(boxes)
    if threads > 1 and n > 1:
        chunks = np.array_split(boxes, min(threads, n))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _process_chunk(c, cfg), chunks))
    else:
        parts = [_process_chunk(boxes, cfg)]
    pieces = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, 4))
    absorbed = np.concatenate([p[1] for p in parts]) if parts else np.empty((0, 4))
    snapped = sum(p[2] for p in parts)
    new = Cloud(pieces)
    stats = StepStats(step=step, active=len(new), absorbed=len(absorbed), snapped=snapped,
                      images=n, pieces=len(pieces))
    return new, stats, absorbed


def step_cloud(cloud: Cloud, cfg: EngineConfig, step: int = 0,
               threads: int = 1) -> tuple[Cloud, StepStats]:
    """Advance the cloud by one map application.

    With ``threads > 1`` the boxes are processed in contiguous chunks on a
    thread pool; the merged result is identical for any thread count.
    """
    new, stats, _ = _step(cloud, cfg, step, threads)
    return new, stats


def prove_absorption(b0: Box, cfg: EngineConfig, label: str = "", *,
                     threads: int = 1,
                     on_step: Callable[[int, Cloud, StepStats, np.ndarray], None] | None = None,
                     ) -> ProofResult:
    """Iterate the cloud from ``b0`` until it empties or ``max_steps`` runs out.

    ``on_step(step, cloud, stats, absorbed)`` is called after every step with
    the new cloud and the array of image boxes absorbed during that step.

    A failed proof is returned, never raised: overflow, an exploding cloud
    and exhausting the step budget all give ``success=False`` with a reason.
    """
    cloud = Cloud([b0])
    result = ProofResult(success=False, label=label)
    for step in range(1, cfg.max_steps + 1):
        try:
            cloud, stats, absorbed = _step(cloud, cfg, step, threads)
        except IntervalError as exc:
            result.reason = f"overflow at step {step}: {exc}"
            log.warning("%s: %s", label or "proof", result.reason)
            return result
        except ExplosionError as exc:
            result.reason = f"combinatorial explosion at step {step}: {exc}"
            log.warning("%s: %s", label or "proof", result.reason)
            return result
        result.history.append(stats)
        result.peak_active = max(result.peak_active, stats.active)
        if on_step is not None:
            on_step(step, cloud, stats, absorbed)
        if stats.active > cfg.max_boxes:
            result.reason = f"combinatorial explosion at step {step}: {stats.active} boxes"
            log.warning("%s: %s", label or "proof", result.reason)
            return result
        if stats.active == 0:
            result.success = True
            result.reason = f"cloud absorbed after {step} steps"
            return result
    result.reason = f"{len(cloud)} boxes still active after {cfg.max_steps} steps"
    return result


# ---------------------------------------------------------------------------
# The two reference runs
# ---------------------------------------------------------------------------


def sink_neighborhood_box(s: float, eps: float) -> Box:
    """``(0, s) + [0, eps] x [-eps, eps]`` with outward rounding."""
    x2 = add_lohi(s, s, -eps, eps)
    return Box(Interval(0.0, eps), Interval(float(x2[0]), float(x2[1])))


def run_sink_invariance(cfg: EngineConfig, *, threads: int = 1) -> list[ProofResult]:
    """Prove each sink neighborhood is eventually absorbed; one result per sink."""
    results = []
    for i, s in enumerate(cfg.sink_points):
        b0 = sink_neighborhood_box(s, cfg.sink_epsilon)
        results.append(prove_absorption(b0, cfg, label=f"Sink Point {i + 1}", threads=threads))
    return results


def trajectory_box(lo: str = "0.78", hi: str = "1.22") -> Box:
    """Square ``[lo, hi]^2`` from decimal literals, rounded outward."""
    a = Interval.from_decimal(lo).lo
    b = Interval.from_decimal(hi).hi
    return Box(Interval(a, b), Interval(a, b))


def tiny_box(center: Sequence[float] = (1.0, 1.0), width: float = 1e-6) -> Box:
    r = width / 2
    return Box.from_bounds(center[0] - r, center[0] + r, center[1] - r, center[1] + r)


def run_trajectory_proof(cfg: EngineConfig, b0: Box | None = None, *,
                         label: str = "Box around $(1,1)$", threads: int = 1) -> ProofResult:
    if b0 is None:
        b0 = trajectory_box()
    return prove_absorption(b0, cfg, label=label, threads=threads)


# ---------------------------------------------------------------------------
# Shadowing: sampled orbits must stay inside the cloud
# ---------------------------------------------------------------------------


@dataclass
class ShadowReport:
    result: ProofResult
    samples: int
    violations: int = 0
    retired: int = 0  # orbits that left the cloud through an absorbed box
    first_violation: tuple[int, float, float] | None = None


def sample_box(b: Box, n: int, seed: int = 0) -> np.ndarray:
    """``n`` uniform points in ``b`` as an ``(n, 2)`` array."""
    rng = np.random.default_rng(seed)
    lo = np.array([b.x1.lo, b.x2.lo])
    hi = np.array([b.x1.hi, b.x2.hi])
    return np.clip(lo + rng.random((n, 2)) * (hi - lo), lo, hi)


def shadow_check(b0: Box, cfg: EngineConfig, points: np.ndarray, label: str = "", *,
                 threads: int = 1) -> ShadowReport:
    """Run a proof from ``b0`` and follow sample orbits alongside it.

    After each step every live orbit point must lie in the new cloud, in a box
    absorbed during that step, or in one of the sink balls. Points that leave
    the cloud by the latter two routes are retired. Anything else is a
    violation. Only meaningful with snapping disabled, since snapping
    deliberately moves boxes off the true orbit.
    """
    from .dynamics import heun_step

    pts = np.array(points, dtype=float).reshape(-1, 2)
    report = ShadowReport(result=ProofResult(False), samples=len(pts))
    live = Cloud([b0]).contains_points(pts)
    report.violations += int((~live).sum())
    sinks = np.array(cfg.sink_points)

    def on_step(step, cloud, stats, absorbed):
        nonlocal pts, live
        pts = pts.copy()
        pts[live, 0], pts[live, 1] = heun_step(pts[live, 0], pts[live, 1], cfg.lambda_stiff, cfg.h)
        idx = np.flatnonzero(live)
        p = pts[idx]
        in_cloud = cloud.contains_points(p)
        out = ~in_cloud
        if not out.any():
            return
        q = p[out]
        in_abs = Cloud(absorbed).contains_points(q) if len(absorbed) else np.zeros(len(q), bool)
        in_ball = (np.abs(q[:, 0]) < cfg.sink_epsilon) & (
            np.min(np.abs(q[:, 1:2] - sinks[None, :]), axis=1) < cfg.sink_epsilon)
        ok = in_abs | in_ball
        bad = idx[out][~ok]
        if len(bad) and report.first_violation is None:
            report.first_violation = (step, float(pts[bad[0], 0]), float(pts[bad[0], 1]))
        report.violations += len(bad)
        report.retired += int(ok.sum())
        live[idx[out]] = False

    report.result = prove_absorption(b0, cfg, label, threads=threads, on_step=on_step)
    return report
