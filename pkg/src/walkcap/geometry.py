"""Planar geometry kernel for city-scale walkability math.

All geometry is carried as shapely objects in lon/lat degrees (GeoJSON axis
order). Metric measurements and buffering go through a :class:`LocalFrame`,
an equirectangular approximation about a reference point: one degree of
latitude maps to 2*pi*R/360 meters (spherical Earth, R = 6,371,000 m) and one
degree of longitude to the same scaled by cos(latitude). The error of this
model is below 0.1% for extents under ~10 km, which covers the
neighborhood-to-parish areas this tool targets.

Boolean operations run directly on degree coordinates (an axis scaling
preserves intersections and containment), so their results are identical to
metric-frame results up to the affine map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import shapely
from shapely.geometry import (
    GeometryCollection,
    LineString,
    MultiPolygon,
    Point,
    Polygon,
    mapping,
    shape,
)
from shapely.geometry.polygon import orient

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEGREE_LAT = 2.0 * math.pi * EARTH_RADIUS_M / 360.0

# Buffers approximate circles with this many segments per full turn.
CIRCLE_SEGMENTS = 64

# Boolean ops on OSM data produce near-zero-area artifacts; parts below this
# area are dropped from results.
SLIVER_AREA_M2 = 1e-4

# Input coordinates are snapped to this grid before boolean ops so that
# parallel and sequential pipelines produce bit-identical geometry.
SNAP_GRID_DEG = 1e-9

# GeoJSON output precision, matching the snap grid.
GEOJSON_DECIMALS = 9


class GeometryError(ValueError):
    """Raised for invalid geometric inputs or unusable geometry."""


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular metric workspace anchored at a reference point.

    Valid for extents up to a few tens of km from the origin.
    """

    origin_lon: float
    origin_lat: float
    meters_per_deg_lon: float
    meters_per_deg_lat: float

    def to_meters(self, geom):
        """Map a lon/lat geometry into frame coordinates (meters)."""
        return shapely.transform(geom, self._deg_to_m)

    def to_degrees(self, geom):
        """Map a frame-coordinate geometry back to lon/lat degrees."""
        return shapely.transform(geom, self._m_to_deg)

    def point_to_meters(self, lon: float, lat: float) -> tuple[float, float]:
        return (
            (lon - self.origin_lon) * self.meters_per_deg_lon,
            (lat - self.origin_lat) * self.meters_per_deg_lat,
        )

    def _deg_to_m(self, coords):
        out = coords.copy()
        out[:, 0] = (coords[:, 0] - self.origin_lon) * self.meters_per_deg_lon
        out[:, 1] = (coords[:, 1] - self.origin_lat) * self.meters_per_deg_lat
        return out

    def _m_to_deg(self, coords):
        out = coords.copy()
        out[:, 0] = coords[:, 0] / self.meters_per_deg_lon + self.origin_lon
        out[:, 1] = coords[:, 1] / self.meters_per_deg_lat + self.origin_lat
        return out


def make_local_frame(boundary) -> LocalFrame:
    """Build the metric frame for a boundary, anchored at its bbox centroid."""
    if boundary is None or boundary.is_empty:
        raise GeometryError("cannot build a local frame for an empty boundary")
    minx, miny, maxx, maxy = boundary.bounds
    lon0 = (minx + maxx) / 2.0
    lat0 = (miny + maxy) / 2.0
    m_lat = METERS_PER_DEGREE_LAT
    m_lon = m_lat * math.cos(math.radians(lat0))
    if m_lon <= 0:
        raise GeometryError("boundary too close to a pole for the local frame")
    return LocalFrame(lon0, lat0, m_lon, m_lat)


def frame_for(geom) -> LocalFrame:
    """Convenience: frame centered on an arbitrary nonempty geometry."""
    return make_local_frame(geom)


def area_m2(shape_geom, frame: LocalFrame) -> float:
    """Area of a (multi)polygon in square meters; holes subtract.

    The frame is an axis scaling, so planar area in deg^2 converts by the
    product of the two scale factors.
    """
    if shape_geom is None or shape_geom.is_empty:
        return 0.0
    return shape_geom.area * frame.meters_per_deg_lon * frame.meters_per_deg_lat


def snap(geom):
    """Snap coordinates to the 1e-9 degree grid used before boolean ops."""
    if geom is None or geom.is_empty:
        return geom
    return shapely.set_precision(geom, SNAP_GRID_DEG)


def as_multipolygon(geom) -> MultiPolygon:
    """Collect the polygonal parts of any geometry into a MultiPolygon."""
    if geom is None or geom.is_empty:
        return MultiPolygon([])
    if isinstance(geom, Polygon):
        return MultiPolygon([geom])
    if isinstance(geom, MultiPolygon):
        return geom
    if isinstance(geom, GeometryCollection):
        polys = []
        for part in geom.geoms:
            polys.extend(as_multipolygon(part).geoms)
        return MultiPolygon(polys)
    return MultiPolygon([])


def normalize(geom) -> MultiPolygon:
    """Canonical multipolygon: outer rings CCW, holes CW, parts sorted.

    Sorting by bounds makes serialized output independent of the internal
    order GEOS happens to emit parts in.
    """
    mp = as_multipolygon(geom)
    polys = [orient(p, 1.0) for p in mp.geoms if not p.is_empty and p.area > 0]
    polys.sort(key=lambda p: p.bounds)
    return MultiPolygon(polys)


def _drop_slivers(mp: MultiPolygon, min_area_m2: float = SLIVER_AREA_M2) -> MultiPolygon:
    if mp.is_empty:
        return mp
    frame = make_local_frame(mp)
    deg2_per_m2 = frame.meters_per_deg_lon * frame.meters_per_deg_lat
    kept = [p for p in mp.geoms if p.area * deg2_per_m2 >= min_area_m2]
    if len(kept) == len(mp.geoms):
        return mp
    return MultiPolygon(kept)


def buffer(geom, radius_m: float, frame: LocalFrame) -> MultiPolygon:
    """Minkowski sum of a geometry with a disc, 64 segments per circle.

    Accepts points, polylines, and (multi)polygons in lon/lat degrees;
    buffering happens in the metric frame.
    """
    if radius_m <= 0:
        raise GeometryError(f"buffer radius must be positive, got {radius_m}")
    if geom is None or geom.is_empty:
        return MultiPolygon([])
    metric = frame.to_meters(geom)
    buffered = metric.buffer(radius_m, quad_segs=CIRCLE_SEGMENTS // 4)
    return normalize(frame.to_degrees(buffered))


def difference(subject, clip) -> MultiPolygon:
    """closure(interior(subject) minus clip); slivers below 1e-4 m2 dropped."""
    subject_mp = as_multipolygon(subject)
    if subject_mp.is_empty:
        return MultiPolygon([])
    clip_mp = as_multipolygon(clip)
    if clip_mp.is_empty:
        return normalize(subject_mp)
    result = as_multipolygon(subject_mp.difference(clip_mp))
    return normalize(_drop_slivers(result))


def union_all(shapes: Iterable) -> MultiPolygon:
    """Union of a collection of (multi)polygons."""
    geoms = [g for g in shapes if g is not None and not g.is_empty]
    if not geoms:
        return MultiPolygon([])
    merged = as_multipolygon(shapely.union_all(geoms))
    return normalize(_drop_slivers(merged))


def repair(rings: Sequence[Sequence[tuple[float, float]]]) -> MultiPolygon:
    """Build a valid multipolygon from raw rings (first outer, rest holes).

    Total: closes open rings, resolves self-intersections by even-odd
    decomposition, drops degenerate rings and slivers. Unrepairable input
    yields an empty multipolygon rather than an error.
    """
    cleaned = []
    for ring in rings:
        pts = [(round(float(x), GEOJSON_DECIMALS), round(float(y), GEOJSON_DECIMALS)) for x, y in ring]
        if pts and pts[0] != pts[-1]:
            pts.append(pts[0])
        # need at least a closed triangle
        if len(set(pts)) >= 3 and len(pts) >= 4:
            cleaned.append(pts)
    if not cleaned:
        return MultiPolygon([])
    try:
        raw = Polygon(cleaned[0], cleaned[1:])
    except Exception:
        return MultiPolygon([])
    # validity first: grid snapping rejects self-intersecting input
    fixed = snap(shapely.make_valid(raw))
    mp = as_multipolygon(fixed)
    if mp.is_empty:
        return MultiPolygon([])
    return normalize(_drop_slivers(mp))


def repair_geometry(geom) -> MultiPolygon:
    """Repair an already-built shapely geometry into a valid multipolygon."""
    if geom is None or geom.is_empty:
        return MultiPolygon([])
    if not geom.is_valid:
        geom = shapely.make_valid(geom)
    mp = as_multipolygon(snap(geom))
    if mp.is_empty:
        return MultiPolygon([])
    return normalize(_drop_slivers(mp))


def circle_to_polygon(center_lon: float, center_lat: float, radius_m: float,
                      segments: int, frame: LocalFrame) -> Polygon:
    """Regular polygon inscribed in a circle of radius_m around a point.

    segments must be a positive multiple of 4 (quarter-circle symmetry), so
    an inscribed square (4) and the standard 64-gon are both representable.
    """
    if radius_m <= 0:
        raise GeometryError(f"circle radius must be positive, got {radius_m}")
    if segments < 4 or segments % 4 != 0:
        raise GeometryError(f"segments must be a positive multiple of 4, got {segments}")
    cx, cy = frame.point_to_meters(center_lon, center_lat)
    pts = []
    for i in range(segments):
        theta = 2.0 * math.pi * i / segments
        pts.append((cx + radius_m * math.cos(theta), cy + radius_m * math.sin(theta)))
    pts.append(pts[0])
    metric = Polygon(pts)
    return orient(frame.to_degrees(metric), 1.0)


# ---------------------------------------------------------------------------
# GeoJSON (RFC 7946) serialization


def _round_coords(obj):
    if isinstance(obj, (list, tuple)):
        if obj and isinstance(obj[0], (int, float)):
            return [round(float(v), GEOJSON_DECIMALS) for v in obj]
        return [_round_coords(v) for v in obj]
    return obj


def geometry_to_geojson(geom) -> dict:
    """Shapely geometry -> GeoJSON geometry dict with 9-decimal coordinates."""
    gj = mapping(geom)
    return {"type": gj["type"], "coordinates": _round_coords(gj["coordinates"])}


def geometry_from_geojson(obj) -> MultiPolygon:
    """Parse GeoJSON (geometry, Feature, or FeatureCollection) to a multipolygon.

    Non-polygonal members are ignored; overlapping members are merged so the
    result's parts are interior-disjoint. Raises GeometryError when no usable
    polygon is present or the document is malformed.
    """
    if not isinstance(obj, dict) or "type" not in obj:
        raise GeometryError("not a GeoJSON object: missing 'type'")
    gtype = obj["type"]
    try:
        if gtype == "FeatureCollection":
            parts = [geometry_from_geojson(f) for f in obj.get("features", [])
                     if isinstance(f, dict)]
            polys = [p for mp in parts for p in mp.geoms]
            if not polys:
                raise GeometryError("FeatureCollection contains no polygonal features")
            return union_all([MultiPolygon(polys)])
        if gtype == "Feature":
            geom_obj = obj.get("geometry")
            if not isinstance(geom_obj, dict):
                raise GeometryError("Feature without geometry")
            return geometry_from_geojson(geom_obj)
        geom = shape(obj)
    except GeometryError:
        raise
    except Exception as exc:
        raise GeometryError(f"malformed GeoJSON geometry: {exc}") from exc
    mp = repair_geometry(geom)
    if mp.is_empty:
        raise GeometryError(f"GeoJSON {gtype} contains no usable polygon")
    return mp


def validate_boundary(geom) -> MultiPolygon:
    """Check a boundary multipolygon for use as a computation subject."""
    mp = as_multipolygon(geom)
    if mp.is_empty:
        raise GeometryError("boundary is empty")
    if not mp.is_valid:
        raise GeometryError("boundary geometry is invalid")
    return mp
