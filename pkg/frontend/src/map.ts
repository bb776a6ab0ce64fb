/** Minimal canvas slippy map: raster tiles, pan/zoom, polygon overlays. */

import type { PolygonGeometry, LonLat } from "./geo.js";
import type { WalkableFeatureCollection } from "./api.js";
import type { MapAdapter, WalkableStyle } from "./state.js";

const TILE_SIZE = 256;
const DEFAULT_TILE_URL = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";

/** lon/lat to Web Mercator world coordinates in [0, 1). */
export function lonLatToWorld(lon: number, lat: number): [number, number] {
  const x = (lon + 180) / 360;
  const s = Math.sin((lat * Math.PI) / 180);
  const y = 0.5 - Math.log((1 + s) / (1 - s)) / (4 * Math.PI);
  return [x, y];
}

export function worldToLonLat(x: number, y: number): LonLat {
  const lon = x * 360 - 180;
  const n = Math.PI * (1 - 2 * y);
  const lat = (180 / Math.PI) * Math.atan(Math.sinh(n));
  return [lon, lat];
}

interface Overlay {
  rings: LonLat[][];
  fill: string | null;
  fillOpacity: number;
  stroke: string;
  strokeWidth: number;
  dashed?: boolean;
}

export class TileMap implements MapAdapter {
  private ctx: CanvasRenderingContext2D;
  private centerX: number;
  private centerY: number;
  private zoom = 16;
  private tiles = new Map<string, HTMLImageElement>();
  private boundaryOverlay: Overlay | null = null;
  private walkableOverlays: Overlay[] = [];
  private sketchOverlay: Overlay | null = null;
  private dragging = false;
  private lastPointer: [number, number] = [0, 0];
  private moved = false;

  onClick: ((pos: LonLat) => void) | null = null;
  onDoubleClick: ((pos: LonLat) => void) | null = null;
  onHover: ((pos: LonLat) => void) | null = null;

  constructor(private canvas: HTMLCanvasElement,
              center: LonLat = [-9.1365, 38.7098],
              private tileUrl: string = DEFAULT_TILE_URL) {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("canvas 2d context unavailable");
    }
    this.ctx = ctx;
    [this.centerX, this.centerY] = lonLatToWorld(center[0], center[1]);
    this.bindEvents();
    this.resize();
  }

  resize(): void {
    const rect = this.canvas.getBoundingClientRect();
    this.canvas.width = Math.max(rect.width, 1) * devicePixelRatio;
    this.canvas.height = Math.max(rect.height, 1) * devicePixelRatio;
    this.render();
  }

  private bindEvents(): void {
    this.canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.moved = false;
      this.lastPointer = [e.clientX, e.clientY];
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (this.dragging) {
        const scale = this.worldScale();
        this.centerX -= ((e.clientX - this.lastPointer[0]) * devicePixelRatio) / scale;
        this.centerY -= ((e.clientY - this.lastPointer[1]) * devicePixelRatio) / scale;
        this.lastPointer = [e.clientX, e.clientY];
        if (Math.abs(e.movementX) + Math.abs(e.movementY) > 1) {
          this.moved = true;
        }
        this.render();
      }
      this.onHover?.(this.eventLonLat(e));
    });
    this.canvas.addEventListener("pointerup", (e) => {
      this.dragging = false;
      if (!this.moved) {
        this.onClick?.(this.eventLonLat(e));
      }
    });
    this.canvas.addEventListener("dblclick", (e) => {
      this.onDoubleClick?.(this.eventLonLat(e));
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const before = this.eventWorld(e);
      this.zoom = Math.min(19, Math.max(3, this.zoom - Math.sign(e.deltaY)));
      const after = this.eventWorld(e);
      this.centerX += before[0] - after[0];
      this.centerY += before[1] - after[1];
      this.render();
    }, { passive: false });
    window.addEventListener("resize", () => this.resize());
  }

  private worldScale(): number {
    return TILE_SIZE * Math.pow(2, this.zoom);
  }

  private eventWorld(e: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const px = (e.clientX - rect.left) * devicePixelRatio;
    const py = (e.clientY - rect.top) * devicePixelRatio;
    const scale = this.worldScale();
    return [
      this.centerX + (px - this.canvas.width / 2) / scale,
      this.centerY + (py - this.canvas.height / 2) / scale,
    ];
  }

  private eventLonLat(e: MouseEvent): LonLat {
    const [wx, wy] = this.eventWorld(e);
    return worldToLonLat(wx, wy);
  }

  private toScreen(lon: number, lat: number): [number, number] {
    const [wx, wy] = lonLatToWorld(lon, lat);
    const scale = this.worldScale();
    return [
      this.canvas.width / 2 + (wx - this.centerX) * scale,
      this.canvas.height / 2 + (wy - this.centerY) * scale,
    ];
  }

  fitBounds(minLon: number, minLat: number, maxLon: number, maxLat: number): void {
    const [x0, y0] = lonLatToWorld(minLon, maxLat);
    const [x1, y1] = lonLatToWorld(maxLon, minLat);
    this.centerX = (x0 + x1) / 2;
    this.centerY = (y0 + y1) / 2;
    const spanX = Math.max(x1 - x0, 1e-9);
    const spanY = Math.max(y1 - y0, 1e-9);
    const zoomX = Math.log2(this.canvas.width / (TILE_SIZE * spanX));
    const zoomY = Math.log2(this.canvas.height / (TILE_SIZE * spanY));
    this.zoom = Math.min(19, Math.max(3, Math.floor(Math.min(zoomX, zoomY)) - 0));
    this.render();
  }

  private tileImage(z: number, x: number, y: number): HTMLImageElement | null {
    const max = Math.pow(2, z);
    const wrappedX = ((x % max) + max) % max;
    if (y < 0 || y >= max) {
      return null;
    }
    const key = `${z}/${wrappedX}/${y}`;
    let img = this.tiles.get(key);
    if (!img) {
      img = new Image();
      img.crossOrigin = "anonymous";
      img.src = this.tileUrl
        .replace("{z}", String(z)).replace("{x}", String(wrappedX))
        .replace("{y}", String(y));
      img.onload = () => this.render();
      this.tiles.set(key, img);
    }
    return img.complete && img.naturalWidth > 0 ? img : null;
  }

  render(): void {
    const { ctx, canvas } = this;
    ctx.fillStyle = "#dde8f0";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const scale = this.worldScale();
    const topLeftX = this.centerX - canvas.width / 2 / scale;
    const topLeftY = this.centerY - canvas.height / 2 / scale;
    const firstTileX = Math.floor(topLeftX * Math.pow(2, this.zoom));
    const firstTileY = Math.floor(topLeftY * Math.pow(2, this.zoom));
    const tilesAcross = Math.ceil(canvas.width / TILE_SIZE) + 1;
    const tilesDown = Math.ceil(canvas.height / TILE_SIZE) + 1;
    for (let dx = 0; dx <= tilesAcross; dx++) {
      for (let dy = 0; dy <= tilesDown; dy++) {
        const tx = firstTileX + dx;
        const ty = firstTileY + dy;
        const img = this.tileImage(this.zoom, tx, ty);
        const sx = (tx / Math.pow(2, this.zoom) - topLeftX) * scale;
        const sy = (ty / Math.pow(2, this.zoom) - topLeftY) * scale;
        if (img) {
          ctx.drawImage(img, sx, sy, TILE_SIZE + 1, TILE_SIZE + 1);
        }
      }
    }
    for (const overlay of this.walkableOverlays) {
      this.drawOverlay(overlay);
    }
    if (this.boundaryOverlay) {
      this.drawOverlay(this.boundaryOverlay);
    }
    if (this.sketchOverlay) {
      this.drawOverlay(this.sketchOverlay);
    }
  }

  private drawOverlay(overlay: Overlay): void {
    const { ctx } = this;
    ctx.save();
    ctx.beginPath();
    for (const ring of overlay.rings) {
      ring.forEach(([lon, lat], i) => {
        const [sx, sy] = this.toScreen(lon, lat);
        if (i === 0) {
          ctx.moveTo(sx, sy);
        } else {
          ctx.lineTo(sx, sy);
        }
      });
      ctx.closePath();
    }
    if (overlay.fill) {
      ctx.globalAlpha = overlay.fillOpacity;
      ctx.fillStyle = overlay.fill;
      ctx.fill("evenodd");
      ctx.globalAlpha = 1;
    }
    ctx.strokeStyle = overlay.stroke;
    ctx.lineWidth = overlay.strokeWidth * devicePixelRatio;
    if (overlay.dashed) {
      ctx.setLineDash([6, 4]);
    }
    ctx.stroke();
    ctx.restore();
  }

  // MapAdapter ------------------------------------------------------------

  showBoundary(polygon: PolygonGeometry | null): void {
    this.boundaryOverlay = polygon === null ? null : {
      rings: polygon.coordinates,
      fill: "#2266cc",
      fillOpacity: 0.08,
      stroke: "#2266cc",
      strokeWidth: 1.5,
    };
    this.render();
  }

  showWalkable(result: WalkableFeatureCollection | null,
               style: WalkableStyle): void {
    if (result === null) {
      this.walkableOverlays = [];
    } else {
      this.walkableOverlays = result.features.map((feature) => ({
        rings: ringsOf(feature.geometry),
        fill: style.fillColor,
        fillOpacity: style.fillOpacity,
        stroke: style.borderColor,
        strokeWidth: style.borderWidth,
      }));
    }
    this.render();
  }

  showSketch(points: LonLat[] | null): void {
    this.sketchOverlay = points === null || points.length === 0 ? null : {
      rings: [points],
      fill: null,
      fillOpacity: 0,
      stroke: "#cc3322",
      strokeWidth: 1.5,
      dashed: true,
    };
    this.render();
  }
}

function ringsOf(geometry: { type: string; coordinates: unknown }): LonLat[][] {
  if (geometry.type === "Polygon") {
    return geometry.coordinates as LonLat[][];
  }
  if (geometry.type === "MultiPolygon") {
    return (geometry.coordinates as LonLat[][][]).flat();
  }
  return [];
}
