"""Shared helpers: metric scene construction and OSM XML fixture building."""

from __future__ import annotations

import math

import pytest
from shapely.geometry import LineString, MultiPolygon, Point, Polygon

from walkcap import geometry


def meters_frame(lon0: float = 0.0, lat0: float = 0.0) -> geometry.LocalFrame:
    """Frame anchored at an explicit point, for building scenes in meters."""
    m_lat = geometry.METERS_PER_DEGREE_LAT
    return geometry.LocalFrame(lon0, lat0, m_lat * math.cos(math.radians(lat0)), m_lat)


def rect_m(frame: geometry.LocalFrame, x0, y0, x1, y1) -> MultiPolygon:
    """Axis-aligned rectangle given in frame meters, returned in degrees."""
    poly = Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    return geometry.repair_geometry(frame.to_degrees(poly))


def holed_rect_m(frame, x0, y0, x1, y1, hx0, hy0, hx1, hy1) -> MultiPolygon:
    outer = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    hole = [(hx0, hy0), (hx1, hy0), (hx1, hy1), (hx0, hy1)]
    poly = Polygon(outer, [hole])
    return geometry.repair_geometry(frame.to_degrees(poly))


def line_m(frame, coords_m) -> LineString:
    return frame.to_degrees(LineString(coords_m))


def point_m(frame, x, y) -> Point:
    return frame.to_degrees(Point(x, y))


@pytest.fixture
def eq_frame() -> geometry.LocalFrame:
    return meters_frame()


def rotated_rect_m(cx, cy, w, h, angle) -> list[tuple[float, float]]:
    c, s = math.cos(angle), math.sin(angle)
    return [(cx + dx * c - dy * s, cy + dx * s + dy * c)
            for dx, dy in ((-w / 2, -h / 2), (w / 2, -h / 2),
                           (w / 2, h / 2), (-w / 2, h / 2))]


def random_multipolygon(rng, frame: geometry.LocalFrame,
                        extent: float = 1000.0) -> MultiPolygon:
    """Union of 1-3 random (possibly rotated) rectangles, in degrees."""
    parts = []
    for _ in range(int(rng.integers(1, 4))):
        cx, cy = rng.uniform(100, extent - 100, 2)
        w, h = rng.uniform(20, 300, 2)
        angle = float(rng.uniform(0, math.pi))
        ring = rotated_rect_m(cx, cy, w, h, angle)
        parts.append(geometry.repair_geometry(frame.to_degrees(Polygon(ring))))
    return geometry.union_all(parts)


# ---------------------------------------------------------------------------
# OSM XML fixture construction


def osm_xml(nodes: dict[int, tuple[float, float]],
            ways: list[tuple[int, list[int], dict[str, str]]],
            relations: list[tuple[int, list[tuple[str, int, str]], dict[str, str]]] = ()) -> bytes:
    """Render a minimal OSM XML document (lon/lat node coords)."""
    parts = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
    for nid, (lon, lat) in nodes.items():
        parts.append(f'  <node id="{nid}" lat="{lat:.9f}" lon="{lon:.9f}"/>')
    for wid, refs, tags in ways:
        parts.append(f'  <way id="{wid}">')
        for ref in refs:
            parts.append(f'    <nd ref="{ref}"/>')
        for k, v in tags.items():
            parts.append(f'    <tag k="{k}" v="{v}"/>')
        parts.append("  </way>")
    for rid, members, tags in relations:
        parts.append(f'  <relation id="{rid}">')
        for kind, ref, role in members:
            parts.append(f'    <member type="{kind}" ref="{ref}" role="{role}"/>')
        for k, v in tags.items():
            parts.append(f'    <tag k="{k}" v="{v}"/>')
        parts.append("  </relation>")
    parts.append("</osm>")
    return "\n".join(parts).encode()


class XmlSceneBuilder:
    """Accumulates nodes/ways/relations placed in frame meters."""

    def __init__(self, frame: geometry.LocalFrame):
        self.frame = frame
        self.nodes: dict[int, tuple[float, float]] = {}
        self.node_tags: dict[int, dict[str, str]] = {}
        self.ways: list[tuple[int, list[int], dict[str, str]]] = []
        self.relations: list[tuple[int, list[tuple[str, int, str]], dict[str, str]]] = []
        self._next_id = 1

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def add_node(self, x_m, y_m, tags=None) -> int:
        nid = self.new_id()
        lon = x_m / self.frame.meters_per_deg_lon + self.frame.origin_lon
        lat = y_m / self.frame.meters_per_deg_lat + self.frame.origin_lat
        self.nodes[nid] = (lon, lat)
        if tags:
            self.node_tags[nid] = dict(tags)
        return nid

    def add_way(self, coords_m, tags, closed=False) -> int:
        refs = [self.add_node(x, y) for x, y in coords_m]
        if closed:
            refs.append(refs[0])
        wid = self.new_id()
        self.ways.append((wid, refs, dict(tags)))
        return wid

    def add_relation(self, members, tags) -> int:
        rid = self.new_id()
        self.relations.append((rid, list(members), dict(tags)))
        return rid

    def to_xml(self) -> bytes:
        parts = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
        for nid, (lon, lat) in self.nodes.items():
            tags = self.node_tags.get(nid)
            if tags:
                parts.append(f'  <node id="{nid}" lat="{lat:.9f}" lon="{lon:.9f}">')
                for k, v in tags.items():
                    parts.append(f'    <tag k="{k}" v="{v}"/>')
                parts.append("  </node>")
            else:
                parts.append(f'  <node id="{nid}" lat="{lat:.9f}" lon="{lon:.9f}"/>')
        for wid, refs, tags in self.ways:
            parts.append(f'  <way id="{wid}">')
            for ref in refs:
                parts.append(f'    <nd ref="{ref}"/>')
            for k, v in tags.items():
                parts.append(f'    <tag k="{k}" v="{v}"/>')
            parts.append("  </way>")
        for rid, members, tags in self.relations:
            parts.append(f'  <relation id="{rid}">')
            for kind, ref, role in members:
                parts.append(f'    <member type="{kind}" ref="{ref}" role="{role}"/>')
            for k, v in tags.items():
                parts.append(f'    <tag k="{k}" v="{v}"/>')
            parts.append("  </relation>")
        parts.append("</osm>")
        return "\n".join(parts).encode()


def option_scene_xml(frame: geometry.LocalFrame) -> bytes:
    """The option-semantics fixture: courtyard building, road, grass patch.

    Boundary is the [0,100]x[0,100] m square (provided separately). Hand
    areas: building outer 400 (courtyard 100), road strip 600 inside the
    boundary, grass 900; none overlap.
    """
    builder = XmlSceneBuilder(frame)
    outer = builder.add_way([(10, 60), (30, 60), (30, 80), (10, 80)],
                            {}, closed=True)
    inner = builder.add_way([(15, 65), (25, 65), (25, 75), (15, 75)],
                            {}, closed=True)
    builder.add_relation(
        [("way", outer, "outer"), ("way", inner, "inner")],
        {"type": "multipolygon", "building": "yes"})
    builder.add_way([(-10, 20), (110, 20)], {"highway": "residential"})
    builder.add_way([(60, 30), (90, 30), (90, 60), (60, 60)],
                    {"landuse": "grass"}, closed=True)
    return builder.to_xml()
