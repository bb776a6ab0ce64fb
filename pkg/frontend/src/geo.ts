/** Client-side GeoJSON handling: paste validation, shape tools, area. */

export type LonLat = [number, number];

export interface PolygonGeometry {
  type: "Polygon";
  coordinates: LonLat[][];
}

export const EARTH_RADIUS_M = 6_371_000;
export const METERS_PER_DEG_LAT = (2 * Math.PI * EARTH_RADIUS_M) / 360;

/** Segments used when the circle tool is normalized to a polygon. */
export const CIRCLE_SEGMENTS = 64;

export interface PasteResult {
  polygons: PolygonGeometry[];
  error: string | null;
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function validateRing(ring: unknown, where: string): string | null {
  if (!Array.isArray(ring) || ring.length < 4) {
    return `${where}: a ring needs at least 4 positions`;
  }
  for (const pos of ring) {
    if (!Array.isArray(pos) || pos.length < 2 ||
        !isFiniteNumber(pos[0]) || !isFiniteNumber(pos[1])) {
      return `${where}: positions must be [lon, lat] numbers`;
    }
    const [lon, lat] = pos;
    if (lon < -180 || lon > 180 || lat < -90 || lat > 90) {
      return `${where}: position (${lon}, ${lat}) out of lon/lat range`;
    }
  }
  const first = ring[0] as number[];
  const last = ring[ring.length - 1] as number[];
  if (first[0] !== last[0] || first[1] !== last[1]) {
    return `${where}: ring is not closed`;
  }
  return null;
}

function collectPolygons(node: unknown, out: PolygonGeometry[],
                         errors: string[], where: string): void {
  if (node === null || typeof node !== "object") {
    errors.push(`${where}: not a GeoJSON object`);
    return;
  }
  const obj = node as Record<string, unknown>;
  switch (obj.type) {
    case "FeatureCollection": {
      const features = obj.features;
      if (!Array.isArray(features)) {
        errors.push(`${where}: FeatureCollection without features array`);
        return;
      }
      features.forEach((f, i) =>
        collectPolygons(f, out, errors, `${where}.features[${i}]`));
      return;
    }
    case "Feature":
      if (obj.geometry == null) {
        errors.push(`${where}: Feature without geometry`);
        return;
      }
      collectPolygons(obj.geometry, out, errors, `${where}.geometry`);
      return;
    case "Polygon": {
      const rings = obj.coordinates;
      if (!Array.isArray(rings) || rings.length === 0) {
        errors.push(`${where}: Polygon without coordinates`);
        return;
      }
      for (let i = 0; i < rings.length; i++) {
        const problem = validateRing(rings[i], `${where}.coordinates[${i}]`);
        if (problem) {
          errors.push(problem);
          return;
        }
      }
      out.push({ type: "Polygon", coordinates: rings as LonLat[][] });
      return;
    }
    case "MultiPolygon": {
      const polys = obj.coordinates;
      if (!Array.isArray(polys)) {
        errors.push(`${where}: MultiPolygon without coordinates`);
        return;
      }
      polys.forEach((rings, i) => collectPolygons(
        { type: "Polygon", coordinates: rings }, out, errors,
        `${where}[${i}]`));
      return;
    }
    case "GeometryCollection": {
      const geoms = obj.geometries;
      if (Array.isArray(geoms)) {
        geoms.forEach((g, i) =>
          collectPolygons(g, out, errors, `${where}.geometries[${i}]`));
      }
      return;
    }
    default:
      // points, lines etc. are simply not selectable boundaries
      return;
  }
}

/** Parse pasted text; every polygon becomes individually selectable. */
export function parsePastedGeoJSON(text: string): PasteResult {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    return { polygons: [], error: `not valid JSON: ${(exc as Error).message}` };
  }
  const polygons: PolygonGeometry[] = [];
  const errors: string[] = [];
  collectPolygons(doc, polygons, errors, "$");
  if (errors.length > 0) {
    return { polygons: [], error: errors[0] };
  }
  if (polygons.length === 0) {
    return { polygons: [], error: "no polygonal geometry found" };
  }
  return { polygons, error: null };
}

/** Inscribed regular polygon for the circle tool (server API is polygon-only). */
export function circleToPolygon(center: LonLat, radiusM: number,
                                segments: number = CIRCLE_SEGMENTS): PolygonGeometry {
  const [lon, lat] = center;
  const mLat = METERS_PER_DEG_LAT;
  const mLon = mLat * Math.cos((lat * Math.PI) / 180);
  const ring: LonLat[] = [];
  for (let i = 0; i < segments; i++) {
    const theta = (2 * Math.PI * i) / segments;
    ring.push([
      lon + (radiusM * Math.cos(theta)) / mLon,
      lat + (radiusM * Math.sin(theta)) / mLat,
    ]);
  }
  ring.push([...ring[0]] as LonLat);
  return { type: "Polygon", coordinates: [ring] };
}

export function rectangleToPolygon(a: LonLat, b: LonLat): PolygonGeometry {
  const [x0, y0] = a;
  const [x1, y1] = b;
  return {
    type: "Polygon",
    coordinates: [[
      [Math.min(x0, x1), Math.min(y0, y1)],
      [Math.max(x0, x1), Math.min(y0, y1)],
      [Math.max(x0, x1), Math.max(y0, y1)],
      [Math.min(x0, x1), Math.max(y0, y1)],
      [Math.min(x0, x1), Math.min(y0, y1)],
    ]],
  };
}

export function closeRing(points: LonLat[]): PolygonGeometry | null {
  if (points.length < 3) {
    return null;
  }
  const ring = [...points, [...points[0]] as LonLat];
  return { type: "Polygon", coordinates: [ring] };
}

/** Equirectangular shoelace area, for display and client-side size hints. */
export function approxAreaM2(polygon: PolygonGeometry): number {
  let total = 0;
  for (const [index, ring] of polygon.coordinates.entries()) {
    const lat0 = ring[0][1];
    const mLat = METERS_PER_DEG_LAT;
    const mLon = mLat * Math.cos((lat0 * Math.PI) / 180);
    let doubled = 0;
    for (let i = 0; i < ring.length - 1; i++) {
      const [ax, ay] = ring[i];
      const [bx, by] = ring[i + 1];
      doubled += ax * mLon * (by * mLat) - bx * mLon * (ay * mLat);
    }
    const area = Math.abs(doubled) / 2;
    total += index === 0 ? area : -area;
  }
  return Math.max(total, 0);
}

export function boundsOf(polygon: PolygonGeometry): [number, number, number, number] {
  let minLon = Infinity, minLat = Infinity, maxLon = -Infinity, maxLat = -Infinity;
  for (const ring of polygon.coordinates) {
    for (const [lon, lat] of ring) {
      minLon = Math.min(minLon, lon);
      minLat = Math.min(minLat, lat);
      maxLon = Math.max(maxLon, lon);
      maxLat = Math.max(maxLat, lat);
    }
  }
  return [minLon, minLat, maxLon, maxLat];
}
