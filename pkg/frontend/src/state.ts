/** Selection/computation flow, kept free of DOM so tests can drive it. */

import { ApiClient, ComputeOptions, DEFAULT_OPTIONS, JobStatus,
         WalkableFeatureCollection } from "./api.js";
import type { PolygonGeometry } from "./geo.js";

/** Walkable rendering: brown fill at 60% with a solid 1 px border. */
export const WALKABLE_STYLE = {
  fillColor: "#7B3F00",
  fillOpacity: 0.6,
  borderColor: "#4A2600",
  borderWidth: 1,
} as const;

export type WalkableStyle = typeof WALKABLE_STYLE;

export interface MapAdapter {
  showBoundary(polygon: PolygonGeometry | null): void;
  showWalkable(result: WalkableFeatureCollection | null,
               style: WalkableStyle): void;
}

export type FlowPhase = "idle" | "selected" | "running" | "done" | "failed";

export interface FlowEvents {
  onPhase?(phase: FlowPhase): void;
  onProgress?(fraction: number, label: string | null): void;
  onError?(message: string): void;
}

export class SelectionFlow {
  phase: FlowPhase = "idle";
  boundary: PolygonGeometry | null = null;
  options: ComputeOptions = { ...DEFAULT_OPTIONS };
  result: WalkableFeatureCollection | null = null;
  progress = 0;
  events: FlowEvents;

  constructor(private api: ApiClient, private map: MapAdapter,
              events: FlowEvents = {}) {
    this.events = events;
  }

  private setPhase(phase: FlowPhase): void {
    this.phase = phase;
    this.events.onPhase?.(phase);
  }

  selectBoundary(polygon: PolygonGeometry): void {
    if (this.phase === "running") {
      return; // one computation at a time; selection resumes afterwards
    }
    this.boundary = polygon;
    this.result = null;
    this.map.showWalkable(null, WALKABLE_STYLE);
    this.map.showBoundary(polygon);
    this.setPhase("selected");
  }

  clear(): void {
    if (this.phase === "running") {
      return;
    }
    this.boundary = null;
    this.result = null;
    this.map.showBoundary(null);
    this.map.showWalkable(null, WALKABLE_STYLE);
    this.setPhase("idle");
  }

  /** Submit the selected boundary and poll to completion, rendering on done. */
  async calculate(): Promise<JobStatus | null> {
    if (this.phase === "running" || this.boundary === null) {
      return null;
    }
    this.setPhase("running");
    this.progress = 0;
    this.events.onProgress?.(0, null);
    try {
      const jobId = await this.api.submitWalkable(this.boundary, this.options);
      const status = await this.api.pollUntilDone(jobId, (fraction, label) => {
        // the bar never moves backwards within one submission
        this.progress = Math.max(this.progress, fraction);
        this.events.onProgress?.(this.progress, label);
      });
      this.result = status.result ?? null;
      this.map.showWalkable(this.result, WALKABLE_STYLE);
      this.setPhase("done");
      return status;
    } catch (exc) {
      this.setPhase("failed");
      this.events.onError?.((exc as Error).message);
      return null;
    }
  }
}
