"""Engine tests: subtraction scenes, batching, determinism, progress."""

import math

import numpy as np
import pytest
from shapely.geometry import LineString, MultiPolygon, Point

from walkcap import engine, geometry
from walkcap.classify import ComputeOptions
from walkcap.engine import PipelineProgress, WalkableResult, compute_walkable, plan_batches
from walkcap.osm import AssembledFeature

from conftest import holed_rect_m, line_m, meters_frame, point_m, rect_m
from raster_oracle import walkable_area_oracle
from scenes import make_scene


def boundary_100(frame):
    return rect_m(frame, 0, 0, 100, 100)


def building(frame, element_id, x0, y0, x1, y1):
    return AssembledFeature(element_id, "polygon", rect_m(frame, x0, y0, x1, y1),
                            {"building": "yes"})


class TestScenes:
    def test_no_features_everything_walkable(self, eq_frame):
        result = compute_walkable(boundary_100(eq_frame), [])
        assert result.walkable_area_m2 == pytest.approx(10000, rel=1e-4)
        assert result.walkable_percent == pytest.approx(100.0, rel=1e-6)
        assert result.pedestrian_spaces.equals(
            geometry.normalize(boundary_100(eq_frame)))

    def test_full_cover_nothing_walkable(self, eq_frame):
        result = compute_walkable(
            boundary_100(eq_frame),
            [building(eq_frame, 1, -10, -10, 110, 110)])
        assert result.walkable_area_m2 == 0.0
        assert result.walkable_percent == 0.0
        assert result.pedestrian_spaces.is_empty

    def test_single_building(self, eq_frame):
        result = compute_walkable(boundary_100(eq_frame),
                                  [building(eq_frame, 1, 10, 60, 30, 80)])
        assert result.walkable_area_m2 == pytest.approx(9600, rel=1e-4)
        assert result.walkable_percent == pytest.approx(96.0, rel=1e-4)

    def test_building_plus_road_vs_oracle(self, eq_frame):
        road = AssembledFeature(
            2, "polyline", line_m(eq_frame, [(-10, 20), (110, 20)]),
            {"highway": "residential"})  # class width 6 -> radius 3
        result = compute_walkable(
            boundary_100(eq_frame),
            [building(eq_frame, 1, 10, 60, 30, 80), road])
        # exact arithmetic: strip does not overlap the building
        assert result.walkable_area_m2 == pytest.approx(9000, rel=1e-4)
        oracle = walkable_area_oracle(
            [[(0, 0), (100, 0), (100, 100), (0, 100)]],
            [{"kind": "polygon", "rings": [[(10, 60), (30, 60), (30, 80), (10, 80)]]},
             {"kind": "capsule", "p0": (-10, 20), "p1": (110, 20), "half_width": 3.0}])
        assert result.walkable_area_m2 == pytest.approx(oracle, rel=0.01)

    def test_roads_walkable_restores_road_area(self, eq_frame):
        road = AssembledFeature(
            2, "polyline", line_m(eq_frame, [(-10, 20), (110, 20)]),
            {"highway": "residential"})
        result = compute_walkable(
            boundary_100(eq_frame),
            [building(eq_frame, 1, 10, 60, 30, 80), road],
            ComputeOptions(roads_walkable=True))
        assert result.walkable_area_m2 == pytest.approx(9600, rel=1e-4)
        assert result.diagnostics["walkable_overrides"] == 1

    def test_courtyard_hole_options(self, eq_frame):
        courtyard_building = AssembledFeature(
            1, "polygon", holed_rect_m(eq_frame, 10, 60, 30, 80, 15, 65, 25, 75),
            {"building": "yes"})
        removed = compute_walkable(boundary_100(eq_frame), [courtyard_building])
        kept = compute_walkable(boundary_100(eq_frame), [courtyard_building],
                                ComputeOptions(remove_building_inner_areas=False))
        assert removed.walkable_area_m2 == pytest.approx(9600, rel=1e-4)
        assert kept.walkable_area_m2 == pytest.approx(9700, rel=1e-4)

    def test_tree_point_subtracts_disc(self, eq_frame):
        tree = AssembledFeature(1, "point", point_m(eq_frame, 50, 50),
                                {"natural": "tree"})
        result = compute_walkable(boundary_100(eq_frame), [tree])
        disc = 32 * 9 * math.sin(2 * math.pi / 64)  # inscribed 64-gon, r=3
        assert result.walkable_area_m2 == pytest.approx(10000 - disc, rel=1e-3)

    def test_obstacles_outside_boundary_ignored(self, eq_frame):
        result = compute_walkable(boundary_100(eq_frame),
                                  [building(eq_frame, 1, 500, 500, 600, 600)])
        assert result.walkable_percent == pytest.approx(100.0, rel=1e-6)

    def test_invalid_boundary_rejected(self):
        with pytest.raises(geometry.GeometryError):
            compute_walkable(MultiPolygon([]), [])


class TestPlanBatches:
    def test_partition_sizes(self):
        batches = plan_batches(list(range(10)), 4)
        assert [len(b) for b in batches] == [4, 4, 2]
        assert batches[0] == [0, 1, 2, 3]

    def test_empty(self):
        assert plan_batches([], 4) == []

    def test_bad_batch_size(self):
        with pytest.raises(ValueError):
            plan_batches([1], 0)


class TestDeterminism:
    def test_executor_counts_bit_identical(self):
        boundary, features, _, _ = make_scene(seed=5, n_obstacles=60)
        outputs = {
            workers: compute_walkable(boundary, features,
                                      max_workers=workers).to_json_bytes()
            for workers in (1, 2, 8)
        }
        assert outputs[1] == outputs[2] == outputs[8]

    def test_iterated_difference_equivalence(self, eq_frame):
        # union-then-subtract equals per-feature iterated subtraction
        features = [
            building(eq_frame, 1, 5, 5, 25, 30),
            building(eq_frame, 2, 20, 20, 60, 45),
            AssembledFeature(3, "point", point_m(eq_frame, 70, 70),
                             {"natural": "tree"}),
        ]
        unioned = compute_walkable(boundary_100(eq_frame), features)
        iterated = geometry.normalize(boundary_100(eq_frame))
        frame = geometry.make_local_frame(iterated)
        for feature in features:
            if feature.geometry_kind == "polygon":
                obstacle = feature.geometry
            else:
                obstacle = geometry.buffer(feature.geometry, 3.0, frame)
            iterated = geometry.difference(iterated, obstacle)
        assert unioned.pedestrian_spaces.equals(iterated) or \
            geometry.difference(unioned.pedestrian_spaces, iterated).area < 1e-15


class TestInvariants:
    def test_obstacle_monotonicity(self):
        rng = np.random.default_rng(31)
        boundary, features, _, _ = make_scene(seed=8, n_obstacles=30)
        previous = compute_walkable(boundary, []).walkable_area_m2
        order = list(range(len(features)))
        rng.shuffle(order)
        subset = []
        for index in order[:12]:
            subset.append(features[index])
            current = compute_walkable(boundary, subset).walkable_area_m2
            assert current <= previous + 1e-6
            previous = current

    def test_area_conservation(self):
        boundary, features, _, _ = make_scene(seed=9, n_obstacles=40)
        result = compute_walkable(boundary, features)
        frame = geometry.make_local_frame(boundary)
        blocked = geometry.difference(boundary, result.pedestrian_spaces)
        total = result.walkable_area_m2 + geometry.area_m2(blocked, frame)
        assert total == pytest.approx(result.total_area_m2, rel=1e-3)

    def test_result_within_boundary(self):
        boundary, features, _, _ = make_scene(seed=10, n_obstacles=30)
        result = compute_walkable(boundary, features)
        outside = geometry.difference(result.pedestrian_spaces, boundary)
        assert outside.area <= 1e-15

    def test_percent_formula_and_bounds(self):
        boundary, features, _, _ = make_scene(seed=11, n_obstacles=20)
        result = compute_walkable(boundary, features)
        assert 0 <= result.walkable_area_m2 <= result.total_area_m2
        assert result.walkable_percent == pytest.approx(
            100 * result.walkable_area_m2 / result.total_area_m2, rel=1e-9)


class TestProgress:
    def test_monotone_and_final_once(self, eq_frame):
        events = []
        boundary, features, _, _ = make_scene(seed=12, n_obstacles=50)
        compute_walkable(boundary, features, batch_size=4,
                         progress=lambda f, p: events.append((f, p)))
        fractions = [f for f, _ in events]
        assert all(b >= a for a, b in zip(fractions, fractions[1:]))
        assert fractions[-1] == 1.0
        assert fractions.count(1.0) == 1
        phases = {p for _, p in events}
        assert phases <= {"fetch", "classify", "subtract", "merge"}
        assert {"classify", "subtract", "merge"} <= phases

    def test_per_phase_monotone(self):
        events = []
        boundary, features, _, _ = make_scene(seed=13, n_obstacles=50)
        compute_walkable(boundary, features, batch_size=4,
                         progress=lambda f, p: events.append((f, p)))
        for phase in ("classify", "subtract", "merge"):
            series = [f for f, p in events if p == phase]
            assert all(b >= a for a, b in zip(series, series[1:]))

    def test_aggregator_clamps_and_orders(self):
        events = []
        tracker = PipelineProgress(lambda f, p: events.append(f))
        tracker.report("fetch", 0.5)
        tracker.report("fetch", 0.2)   # late lower report is dropped
        tracker.report("classify", 0.0)
        tracker.report("merge", 1.0)
        tracker.report("merge", 1.0)   # second final is suppressed
        assert events == [0.1, 0.2, 1.0]

    def test_none_sink_is_noop(self, eq_frame):
        compute_walkable(boundary_100(eq_frame), [], progress=None)


class TestResultSerialization:
    def test_geojson_structure(self, eq_frame):
        result = compute_walkable(boundary_100(eq_frame),
                                  [building(eq_frame, 1, 10, 60, 30, 80)])
        doc = result.to_geojson()
        assert doc["type"] == "FeatureCollection"
        assert doc["summary"]["walkable_percent"] == pytest.approx(96.0, rel=1e-4)
        assert len(doc["features"]) >= 1
        feature_area = sum(f["properties"]["area_m2"] for f in doc["features"])
        assert feature_area == pytest.approx(result.walkable_area_m2, rel=1e-6)

    def test_diagnostics_merged(self, eq_frame):
        result = compute_walkable(boundary_100(eq_frame), [],
                                  extra_diagnostics={"assembly_skipped": 3})
        assert result.diagnostics["assembly_skipped"] == 3
