"""Classify OSM features as pedestrian obstacles, walkable, or irrelevant.

The tag -> category mapping lives in a versioned YAML table
(data/tag_table.yaml) so new feature types can be added without code
changes. Classification is a pure function of (tags, geometry kind,
options, table): identical inputs give identical verdicts on any executor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import yaml

VERDICT_IRRELEVANT = "irrelevant"
VERDICT_OBSTACLE = "obstacle"
VERDICT_WALKABLE_OVERRIDE = "walkable-override"

KIND_POINT = "point"
KIND_POLYLINE = "polyline"
KIND_POLYGON = "polygon"

_WIDTH_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)")


@dataclass(frozen=True)
class ComputeOptions:
    """The three computation toggles offered before a calculation.

    remove_building_inner_areas: courtyard holes inside buildings count as
      not walkable (holes are filled before subtraction).
    roads_walkable: road features are kept walkable, for events that close
      streets to traffic.
    grass_not_walkable: grass polygons are subtracted, for vegetation that
      must not be stepped on.
    """

    remove_building_inner_areas: bool = True
    roads_walkable: bool = False
    grass_not_walkable: bool = False


@dataclass(frozen=True)
class ObstacleClassification:
    """Verdict for one feature.

    buffer_radius_m is 0 for polygonal obstacles (subtracted directly) and
    positive for point/line obstacles (buffered to polygons first).
    """

    verdict: str
    category: str | None = None
    buffer_radius_m: float = 0.0


@dataclass(frozen=True)
class _Rule:
    key: str
    values: frozenset[str] | None = None
    exclude_values: frozenset[str] | None = None

    def matches(self, tags: dict[str, str]) -> bool:
        value = tags.get(self.key)
        if value is None:
            return False
        if self.values is not None and value not in self.values:
            return False
        if self.exclude_values is not None and value in self.exclude_values:
            return False
        return True


@dataclass(frozen=True)
class _Category:
    name: str
    rules: tuple[_Rule, ...]
    reject: tuple[_Rule, ...] = ()

    def matches(self, tags: dict[str, str]) -> bool:
        if any(rule.matches(tags) for rule in self.reject):
            return False
        return any(rule.matches(tags) for rule in self.rules)


class TagTable:
    """Parsed classification table: precedence-ordered categories + buffers."""

    def __init__(self, raw: dict):
        self.version = int(raw["version"])
        self.categories = tuple(
            _Category(
                name=cat["name"],
                rules=tuple(self._parse_rule(r) for r in cat["rules"]),
                reject=tuple(self._parse_rule(r) for r in cat.get("reject", ())),
            )
            for cat in raw["categories"]
        )
        buffers = raw["buffers"]
        road = buffers["road"]
        self.road_width_keys = tuple(road["width_keys"])
        self.road_lane_width_m = float(road["lane_width_m"])
        self.road_class_widths_m = {k: float(v) for k, v in road["class_widths_m"].items()}
        self.line_widths_m = {k: float(v) for k, v in buffers["line_widths_m"].items()}
        self.point_radii_m = {k: float(v) for k, v in buffers["point_radii_m"].items()}

    @staticmethod
    def _parse_rule(raw: dict) -> _Rule:
        return _Rule(
            key=raw["key"],
            values=frozenset(raw["values"]) if "values" in raw else None,
            exclude_values=frozenset(raw["exclude_values"]) if "exclude_values" in raw else None,
        )

    def match_category(self, tags: dict[str, str]) -> str | None:
        for category in self.categories:
            if category.matches(tags):
                return category.name
        return None

    def max_buffer_radius_m(self) -> float:
        """Largest radius the default tables can produce; pads fetch bboxes."""
        candidates = [w / 2.0 for w in self.road_class_widths_m.values()]
        candidates += [w / 2.0 for w in self.line_widths_m.values()]
        candidates += list(self.point_radii_m.values())
        return max(candidates)


def load_tag_table(path: str | Path | None = None) -> TagTable:
    """Load a classification table from a YAML file (None = packaged default)."""
    if path is None:
        text = resources.files("walkcap.data").joinpath("tag_table.yaml").read_text()
    else:
        text = Path(path).read_text()
    return TagTable(yaml.safe_load(text))


@lru_cache(maxsize=1)
def default_table() -> TagTable:
    return load_tag_table(None)


def default_buffer_radius(category: str, tags: dict[str, str],
                          table: TagTable | None = None) -> float:
    """Buffer radius in meters for a line/point obstacle category.

    Roads: an explicit width tag wins, then lanes * lane width, then the
    per-class default; all carriageway widths, halved to a radius. Other
    line categories likewise; point categories are radii already.
    """
    table = table or default_table()
    if category == "road":
        for key in table.road_width_keys:
            parsed = _parse_meters(tags.get(key))
            if parsed is not None:
                return parsed / 2.0
        lanes = _parse_meters(tags.get("lanes"))
        if lanes is not None:
            return lanes * table.road_lane_width_m / 2.0
        widths = table.road_class_widths_m
        return widths.get(tags.get("highway", ""), widths["default"]) / 2.0
    if category in table.line_widths_m:
        return table.line_widths_m[category] / 2.0
    if category in table.point_radii_m:
        return table.point_radii_m[category]
    raise ValueError(f"{category!r} is not a line/point obstacle category")


def _parse_meters(value: str | None) -> float | None:
    if value is None:
        return None
    match = _WIDTH_RE.match(value)
    return float(match.group(1)) if match else None


def classify(tags: dict[str, str], geometry_kind: str, options: ComputeOptions,
             table: TagTable | None = None) -> ObstacleClassification:
    """Deterministic, total verdict for one feature.

    Polygons of any obstacle category are subtracted directly; lines and
    points become obstacles only when the table defines a buffer size for
    their category. Grass is opt-in via grass_not_walkable; roads flip to
    walkable-override when roads_walkable is set.
    """
    table = table or default_table()
    category = table.match_category(tags)
    if category is None:
        return ObstacleClassification(VERDICT_IRRELEVANT)

    if category == "road" and options.roads_walkable:
        return ObstacleClassification(VERDICT_WALKABLE_OVERRIDE, category)

    if category == "grass":
        if geometry_kind == KIND_POLYGON and options.grass_not_walkable:
            return ObstacleClassification(VERDICT_OBSTACLE, category, 0.0)
        return ObstacleClassification(VERDICT_IRRELEVANT, category)

    if geometry_kind == KIND_POLYGON:
        return ObstacleClassification(VERDICT_OBSTACLE, category, 0.0)

    if geometry_kind == KIND_POLYLINE:
        if category == "road" or category in table.line_widths_m:
            radius = default_buffer_radius(category, tags, table)
            return ObstacleClassification(VERDICT_OBSTACLE, category, radius)
        return ObstacleClassification(VERDICT_IRRELEVANT, category)

    # points: categories with a point radius, plus thin barriers (a bollard
    # or gate post blocks about as much as the barrier line width)
    if category in table.point_radii_m or category in table.line_widths_m:
        radius = default_buffer_radius(category, tags, table)
        return ObstacleClassification(VERDICT_OBSTACLE, category, radius)
    return ObstacleClassification(VERDICT_IRRELEVANT, category)
