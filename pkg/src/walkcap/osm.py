"""OSM element parsing and geometry assembly.

Two wire formats are supported and produce identical element sets for
equivalent content: Overpass-interpreter JSON (plain `out body` with
recursed nodes, or `out geom` with inline geometry) and plain OSM XML
exports. Assembly turns elements into features: tagged nodes become
points, open ways polylines, closed ways with area semantics polygons,
and type=multipolygon relations holed multipolygons.

OSM data in the wild is routinely clipped or broken, so assembly never
fails: elements whose geometry cannot be resolved are skipped and counted.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field

from shapely.geometry import LineString, MultiPolygon, Point

from . import geometry

NODE = "node"
WAY = "way"
RELATION = "relation"

MIN_WAY_REFS = 2
MAX_WAY_REFS = 2000

# Closed ways are polygons unless their tags mark a linear feature
# (a closed highway is a loop road, not a plaza, unless area=yes).
_LINEAR_KEYS = {"highway", "railway", "barrier", "waterway"}


class OsmParseError(ValueError):
    """Raised for malformed OSM documents."""


@dataclass(frozen=True)
class RelationMember:
    ref: int
    kind: str
    role: str
    geometry: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class OsmElement:
    """One raw OSM element; only the fields its kind uses are populated."""

    id: int
    kind: str
    tags: dict[str, str] = field(default_factory=dict)
    lon: float | None = None
    lat: float | None = None
    node_refs: tuple[int, ...] = ()
    members: tuple[RelationMember, ...] = ()
    geometry: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class AssembledFeature:
    """An element with resolved shapely geometry, ready for classification."""

    element_id: int
    geometry_kind: str  # point | polyline | polygon
    geometry: Point | LineString | MultiPolygon
    tags: dict[str, str]


@dataclass
class AssemblyResult:
    features: list[AssembledFeature]
    skipped: int = 0
    reasons: Counter = field(default_factory=Counter)

    def skip(self, reason: str) -> None:
        self.skipped += 1
        self.reasons[reason] += 1


# ---------------------------------------------------------------------------
# Parsers


def parse_overpass_json(data: bytes | str) -> list[OsmElement]:
    """Parse an Overpass-interpreter JSON document into elements."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise OsmParseError(f"invalid JSON at byte {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "elements" not in doc:
        raise OsmParseError('document has no "elements" array')
    elements = []
    for entry in doc["elements"]:
        kind = entry.get("type")
        if kind not in (NODE, WAY, RELATION):
            continue  # count/area pseudo-elements from some output modes
        if "id" not in entry:
            raise OsmParseError(f"{kind} element without id")
        eid = int(entry["id"])
        tags = {str(k): str(v) for k, v in entry.get("tags", {}).items()}
        if kind == NODE:
            elements.append(OsmElement(
                id=eid, kind=NODE, tags=tags,
                lon=float(entry["lon"]), lat=float(entry["lat"]),
            ))
        elif kind == WAY:
            inline = entry.get("geometry")
            elements.append(OsmElement(
                id=eid, kind=WAY, tags=tags,
                node_refs=tuple(int(r) for r in entry.get("nodes", ())),
                geometry=tuple((float(p["lon"]), float(p["lat"])) for p in inline)
                if inline else None,
            ))
        else:
            members = []
            for m in entry.get("members", ()):
                inline = m.get("geometry")
                members.append(RelationMember(
                    ref=int(m["ref"]), kind=str(m["type"]), role=str(m.get("role", "")),
                    geometry=tuple((float(p["lon"]), float(p["lat"])) for p in inline)
                    if inline else None,
                ))
            elements.append(OsmElement(id=eid, kind=RELATION, tags=tags,
                                       members=tuple(members)))
    return elements


def parse_osm_bytes(data: bytes) -> list[OsmElement]:
    """Parse an OSM document of either supported format, sniffed by content."""
    head = data.lstrip()[:1]
    if head == b"<":
        return parse_osm_xml(data)
    return parse_overpass_json(data)


def parse_osm_xml(data: bytes | str) -> list[OsmElement]:
    """Parse an OSM XML export into the same element set as the JSON parser."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise OsmParseError(f"malformed XML: {exc}") from exc
    elements = []
    for child in root:
        if child.tag not in (NODE, WAY, RELATION):
            continue
        raw_id = child.get("id")
        if raw_id is None:
            raise OsmParseError(f"{child.tag} element without id")
        eid = int(raw_id)
        tags = {t.get("k"): t.get("v") for t in child.findall("tag")}
        if child.tag == NODE:
            elements.append(OsmElement(
                id=eid, kind=NODE, tags=tags,
                lon=float(child.get("lon")), lat=float(child.get("lat")),
            ))
        elif child.tag == WAY:
            refs = tuple(int(nd.get("ref")) for nd in child.findall("nd"))
            elements.append(OsmElement(id=eid, kind=WAY, tags=tags, node_refs=refs))
        else:
            members = tuple(
                RelationMember(ref=int(m.get("ref")), kind=m.get("type"),
                               role=m.get("role", ""))
                for m in child.findall("member")
            )
            elements.append(OsmElement(id=eid, kind=RELATION, tags=tags,
                                       members=members))
    return elements


# ---------------------------------------------------------------------------
# Assembly


def _closed_way_is_area(tags: dict[str, str]) -> bool:
    if tags.get("area") == "yes":
        return True
    return not any(key in tags for key in _LINEAR_KEYS)


def _way_coords(way: OsmElement, nodes: dict[int, OsmElement]) -> list[tuple[float, float]] | None:
    """Coordinates of a way from resolved refs or inline geometry; None if broken."""
    if way.node_refs and not (MIN_WAY_REFS <= len(way.node_refs) <= MAX_WAY_REFS):
        return None
    if way.node_refs:
        coords = []
        for ref in way.node_refs:
            node = nodes.get(ref)
            if node is None:
                return None
            coords.append((node.lon, node.lat))
        return coords
    if way.geometry and len(way.geometry) >= MIN_WAY_REFS:
        return list(way.geometry)
    return None


def _stitch_rings(segments: list[list[tuple[float, float]]]) -> list[list[tuple[float, float]]]:
    """Join way fragments end-to-end into closed rings; drop open leftovers."""
    rings = []
    pool = [list(s) for s in segments if len(s) >= 2]
    while pool:
        chain = pool.pop()
        while chain[0] != chain[-1]:
            for i, seg in enumerate(pool):
                if seg[0] == chain[-1]:
                    chain.extend(seg[1:])
                elif seg[-1] == chain[-1]:
                    chain.extend(reversed(seg[:-1]))
                elif seg[-1] == chain[0]:
                    chain[:0] = seg[:-1]
                elif seg[0] == chain[0]:
                    chain[:0] = reversed(seg[1:])
                else:
                    continue
                pool.pop(i)
                break
            else:
                break  # open chain, no continuation exists
        if chain[0] == chain[-1] and len(chain) >= 4:
            rings.append(chain)
    return rings


def _assemble_multipolygon(rel: OsmElement, ways: dict[int, OsmElement],
                           nodes: dict[int, OsmElement]) -> MultiPolygon | None:
    outer_segs, inner_segs = [], []
    for member in rel.members:
        if member.kind != WAY or member.role not in ("outer", "inner", ""):
            continue
        coords = None
        way = ways.get(member.ref)
        if way is not None:
            coords = _way_coords(way, nodes)
        if coords is None and member.geometry:
            coords = list(member.geometry)
        if coords is None:
            continue
        # empty role is treated as outer, the historic OSM convention
        (inner_segs if member.role == "inner" else outer_segs).append(coords)
    outer_rings = _stitch_rings(outer_segs)
    if not outer_rings:
        return None
    inner_rings = _stitch_rings(inner_segs)

    outers = [geometry.repair([ring]) for ring in outer_rings]
    outers = [mp for mp in outers if not mp.is_empty]
    if not outers:
        return None
    inners = [geometry.repair([ring]) for ring in inner_rings]
    holes = geometry.union_all([mp for mp in inners if not mp.is_empty])
    shell = geometry.union_all(outers)
    if holes.is_empty:
        return shell
    return geometry.difference(shell, holes)


def assemble(elements: list[OsmElement]) -> AssemblyResult:
    """Resolve element geometry into features; never fails, counts skips."""
    nodes = {e.id: e for e in elements if e.kind == NODE}
    ways = {e.id: e for e in elements if e.kind == WAY}
    result = AssemblyResult(features=[])

    for element in elements:
        if element.kind == NODE:
            if not element.tags:
                continue  # untagged nodes only carry way geometry
            result.features.append(AssembledFeature(
                element.id, "point", Point(element.lon, element.lat), element.tags))
        elif element.kind == WAY:
            if not element.tags:
                continue  # untagged ways are relation members or stubs
            coords = _way_coords(element, nodes)
            if coords is None:
                result.skip("way-unresolvable")
                continue
            closed = coords[0] == coords[-1] and len(coords) >= 4
            if closed and _closed_way_is_area(element.tags):
                polygon = geometry.repair([coords])
                if polygon.is_empty:
                    result.skip("way-degenerate-area")
                    continue
                result.features.append(AssembledFeature(
                    element.id, "polygon", polygon, element.tags))
            else:
                result.features.append(AssembledFeature(
                    element.id, "polyline", LineString(coords), element.tags))
        else:
            if element.tags.get("type") != "multipolygon":
                continue  # routes, boundaries etc. are not subtractable areas
            if not element.members:
                result.skip("relation-empty")
                continue
            polygon = _assemble_multipolygon(element, ways, nodes)
            if polygon is None or polygon.is_empty:
                result.skip("relation-unresolvable")
                continue
            result.features.append(AssembledFeature(
                element.id, "polygon", polygon, element.tags))
    return result


def feature_to_geojson(feature: AssembledFeature) -> dict:
    """Serialize a feature to GeoJSON for round-tripping and export."""
    return {
        "type": "Feature",
        "id": feature.element_id,
        "geometry": geometry.geometry_to_geojson(feature.geometry),
        "properties": {"tags": dict(feature.tags)},
    }
