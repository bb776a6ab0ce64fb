"""Walkable-area computation: subtract obstacle features from a boundary.

Obstacles are buffered/collected, unioned in id-ordered batches fanned out
over a thread pool, merged pairwise in a fixed tree order, and subtracted
from the boundary in one final difference. The batch partition and merge
tree depend only on the obstacle list and batch size, never on executor
count or scheduling, so results are bit-identical for any thread count.

Unioning first and differencing once is algebraically identical to the
iterated per-feature difference but numerically more stable and
embarrassingly parallel in the union phase.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from shapely.geometry import MultiPolygon, Polygon

from . import geometry
from .classify import (
    VERDICT_OBSTACLE,
    VERDICT_WALKABLE_OVERRIDE,
    ComputeOptions,
    TagTable,
    classify,
    default_table,
)
from .osm import AssembledFeature

DEFAULT_BATCH_SIZE = 32

# Fixed share of overall progress per pipeline phase. The fetch phase is
# owned by whoever loads the data (service/CLI); compute_walkable reports
# from 0.2 upward and delivers 1.0 exactly once when the result is ready.
PHASE_WEIGHTS = {"fetch": 0.2, "classify": 0.1, "subtract": 0.6, "merge": 0.1}
PHASE_STARTS = {"fetch": 0.0, "classify": 0.2, "subtract": 0.3, "merge": 0.9}

ProgressSink = Callable[[float, str], None]


class PipelineProgress:
    """Aggregates per-phase fractions into one monotone overall sequence.

    Executors may report from any thread; delivery to the sink is serialized
    and clamped so the observed sequence never decreases and 1.0 is emitted
    exactly once.
    """

    def __init__(self, sink: ProgressSink | None):
        self._sink = sink
        self._lock = threading.Lock()
        self._last = 0.0
        self._finished = False

    def report(self, phase: str, fraction: float) -> None:
        if self._sink is None:
            return
        fraction = min(max(fraction, 0.0), 1.0)
        overall = PHASE_STARTS[phase] + PHASE_WEIGHTS[phase] * fraction
        with self._lock:
            if self._finished:
                return
            if overall >= 1.0:
                self._finished = True
                self._last = 1.0
                self._sink(1.0, phase)
                return
            if overall < self._last:
                return
            self._last = overall
            self._sink(overall, phase)


@dataclass
class WalkableResult:
    """Pedestrian spaces plus the statistics derived from them."""

    pedestrian_spaces: MultiPolygon
    total_area_m2: float
    walkable_area_m2: float
    walkable_percent: float
    diagnostics: dict[str, int] = field(default_factory=dict)

    def to_geojson(self, frame: geometry.LocalFrame | None = None) -> dict:
        """FeatureCollection of pedestrian spaces with per-feature areas."""
        if frame is None and not self.pedestrian_spaces.is_empty:
            frame = geometry.make_local_frame(self.pedestrian_spaces)
        features = []
        for poly in self.pedestrian_spaces.geoms:
            features.append({
                "type": "Feature",
                "geometry": geometry.geometry_to_geojson(poly),
                "properties": {"area_m2": round(geometry.area_m2(poly, frame), 6)},
            })
        return {
            "type": "FeatureCollection",
            "features": features,
            "summary": {
                "total_area_m2": round(self.total_area_m2, 6),
                "walkable_area_m2": round(self.walkable_area_m2, 6),
                "walkable_percent": round(self.walkable_percent, 6),
                "diagnostics": dict(sorted(self.diagnostics.items())),
            },
        }

    def to_json_bytes(self) -> bytes:
        """Canonical serialization used for determinism comparisons."""
        return json.dumps(self.to_geojson(), sort_keys=True,
                          separators=(",", ":")).encode()


def plan_batches(obstacles: Sequence, batch_size: int) -> list[list]:
    """Stable partition into consecutive chunks; callers pass id-ordered input."""
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    return [list(obstacles[i:i + batch_size])
            for i in range(0, len(obstacles), batch_size)]


def _obstacle_geometry(feature: AssembledFeature, verdict, options: ComputeOptions,
                       frame: geometry.LocalFrame):
    if feature.geometry_kind == "polygon":
        shape = feature.geometry
        if verdict.category == "building" and options.remove_building_inner_areas:
            shape = MultiPolygon([Polygon(p.exterior) for p in shape.geoms])
        return shape
    return geometry.buffer(feature.geometry, verdict.buffer_radius_m, frame)


def compute_walkable(boundary, features: Sequence[AssembledFeature],
                     options: ComputeOptions | None = None,
                     progress: ProgressSink | None = None,
                     *,
                     batch_size: int = DEFAULT_BATCH_SIZE,
                     max_workers: int | None = None,
                     table: TagTable | None = None,
                     extra_diagnostics: dict[str, int] | None = None) -> WalkableResult:
    """Subtract all obstacle features from the boundary and measure the rest.

    features must be assembled (see osm.assemble); options default to the
    standard toggles. max_workers controls the union-phase thread pool and
    has no effect on the result.
    """
    boundary = geometry.validate_boundary(boundary)
    options = options or ComputeOptions()
    table = table or default_table()
    tracker = PipelineProgress(progress)
    frame = geometry.make_local_frame(boundary)

    diagnostics = {"obstacles": 0, "walkable_overrides": 0, "irrelevant": 0,
                   "unusable_geometry": 0}
    if extra_diagnostics:
        for key, count in extra_diagnostics.items():
            diagnostics[key] = diagnostics.get(key, 0) + count

    obstacles: list[tuple[int, MultiPolygon]] = []
    step = max(1, len(features) // 50)
    for index, feature in enumerate(features):
        verdict = classify(feature.tags, feature.geometry_kind, options, table)
        if verdict.verdict == VERDICT_OBSTACLE:
            shape = _obstacle_geometry(feature, verdict, options, frame)
            if shape.is_empty:
                diagnostics["unusable_geometry"] += 1
            else:
                obstacles.append((feature.element_id, shape))
                diagnostics["obstacles"] += 1
        elif verdict.verdict == VERDICT_WALKABLE_OVERRIDE:
            diagnostics["walkable_overrides"] += 1
        else:
            diagnostics["irrelevant"] += 1
        if index % step == 0 or index + 1 == len(features):
            tracker.report("classify", (index + 1) / max(len(features), 1))
    tracker.report("classify", 1.0)

    obstacles.sort(key=lambda pair: pair[0])
    batches = plan_batches([shape for _, shape in obstacles], batch_size)

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        merged = _union_batches(batches, executor, tracker)
        walkable = geometry.difference(boundary, merged)

    merge_total = max(len(batches) - 1, 0) + 2  # pairwise merges + difference + stats
    tracker.report("merge", (merge_total - 1) / merge_total)

    total = geometry.area_m2(boundary, frame)
    area = geometry.area_m2(walkable, frame)
    percent = 100.0 * area / total if total > 0 else 0.0
    result = WalkableResult(
        pedestrian_spaces=walkable,
        total_area_m2=total,
        walkable_area_m2=area,
        walkable_percent=percent,
        diagnostics=diagnostics,
    )
    tracker.report("merge", 1.0)
    return result


def _union_batches(batches: list[list], executor: ThreadPoolExecutor,
                   tracker: PipelineProgress) -> MultiPolygon:
    """Union each batch in parallel, then merge pairwise in fixed tree order."""
    if not batches:
        tracker.report("subtract", 1.0)
        return MultiPolygon([])

    done = 0
    done_lock = threading.Lock()
    total = len(batches)

    def union_batch(batch):
        nonlocal done
        merged = geometry.union_all(batch)
        with done_lock:
            done += 1
            tracker.report("subtract", done / total)
        return merged

    futures = [executor.submit(union_batch, batch) for batch in batches]
    level = [future.result() for future in futures]  # fixed batch order

    merge_total = max(len(batches) - 1, 0) + 2
    merges_done = 0
    while len(level) > 1:
        carry = [level[-1]] if len(level) % 2 else []
        pair_futures = [
            executor.submit(geometry.union_all, [level[i], level[i + 1]])
            for i in range(0, len(level) - 1, 2)
        ]
        level = [future.result() for future in pair_futures] + carry
        merges_done += len(pair_futures)
        tracker.report("merge", merges_done / merge_total)
    return level[0]
