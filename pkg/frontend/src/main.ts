/** Application bootstrap: map, draw tools, paste panel, wiring. */

import { ApiClient } from "./api.js";
import { TileMap } from "./map.js";
import { Panel } from "./panel.js";
import { SelectionFlow } from "./state.js";
import {
  LonLat,
  METERS_PER_DEG_LAT,
  PolygonGeometry,
  boundsOf,
  circleToPolygon,
  closeRing,
  parsePastedGeoJSON,
  rectangleToPolygon,
} from "./geo.js";

type Tool = "pan" | "circle" | "rectangle" | "polygon";

function distanceM(a: LonLat, b: LonLat): number {
  const mLat = METERS_PER_DEG_LAT;
  const mLon = mLat * Math.cos((a[1] * Math.PI) / 180);
  const dx = (b[0] - a[0]) * mLon;
  const dy = (b[1] - a[1]) * mLat;
  return Math.hypot(dx, dy);
}

function setup(): void {
  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const panelRoot = document.getElementById("panel") as HTMLElement;
  const toolbar = document.getElementById("toolbar") as HTMLElement;
  const pasteArea = document.getElementById("paste-area") as HTMLTextAreaElement;
  const pasteButton = document.getElementById("paste-use") as HTMLButtonElement;
  const pasteError = document.getElementById("paste-error") as HTMLElement;
  const pasteList = document.getElementById("paste-list") as HTMLElement;

  const config = (window as unknown as { WALKCAP?: { tileUrl?: string } }).WALKCAP;
  const map = new TileMap(canvas, undefined, config?.tileUrl ?? undefined);
  const api = new ApiClient("");
  const flow = new SelectionFlow(api, map);
  const panel = new Panel(api, flow.options, () => { void flow.calculate(); },
                          panelRoot);
  flow.events = {
    onPhase: (phase) => {
      if (phase === "running") {
        panel.clearError();
      }
      if (phase === "done" && flow.result) {
        const summary = flow.result.summary;
        panel.showStats(summary.walkable_area_m2, summary.walkable_percent);
      }
    },
    onProgress: (fraction, label) => panel.setProgress(fraction, label),
    onError: (message) => panel.showError(message),
  };

  let tool: Tool = "pan";
  let sketch: LonLat[] = [];

  const select = (polygon: PolygonGeometry) => {
    flow.selectBoundary(polygon);
    sketch = [];
    map.showSketch(null);
  };

  map.onClick = (pos) => {
    if (tool === "pan") {
      return;
    }
    sketch.push(pos);
    if (tool === "circle" && sketch.length === 2) {
      const radius = Math.max(distanceM(sketch[0], sketch[1]), 1);
      select(circleToPolygon(sketch[0], radius));
    } else if (tool === "rectangle" && sketch.length === 2) {
      select(rectangleToPolygon(sketch[0], sketch[1]));
    } else {
      map.showSketch(sketch);
    }
  };

  map.onDoubleClick = () => {
    if (tool === "polygon") {
      const polygon = closeRing(sketch.slice(0, -1));
      if (polygon) {
        select(polygon);
      }
    }
  };

  for (const button of Array.from(toolbar.querySelectorAll("button[data-tool]"))) {
    button.addEventListener("click", () => {
      tool = (button as HTMLElement).dataset.tool as Tool;
      sketch = [];
      map.showSketch(null);
      toolbar.querySelectorAll("button").forEach(
        (b) => b.classList.toggle("active", b === button));
    });
  }

  pasteButton.addEventListener("click", () => {
    const parsed = parsePastedGeoJSON(pasteArea.value);
    pasteList.replaceChildren();
    if (parsed.error !== null) {
      pasteError.textContent = parsed.error;
      return;
    }
    pasteError.textContent = "";
    if (parsed.polygons.length === 1) {
      select(parsed.polygons[0]);
      map.fitBounds(...boundsOf(parsed.polygons[0]));
      return;
    }
    parsed.polygons.forEach((polygon, index) => {
      const item = document.createElement("button");
      item.className = "paste-item";
      item.textContent = `Polygon ${index + 1}`;
      item.addEventListener("click", () => {
        select(polygon);
        map.fitBounds(...boundsOf(polygon));
      });
      pasteList.append(item);
    });
  });
}

document.addEventListener("DOMContentLoaded", setup);
