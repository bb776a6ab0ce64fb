/** REST client for the walkable-area and capacity endpoints. */

import type { PolygonGeometry } from "./geo.js";
import type { CapacityReport, CapacityRequestBody } from "./params.js";

export interface ComputeOptions {
  remove_building_inner_areas: boolean;
  roads_walkable: boolean;
  grass_not_walkable: boolean;
}

export const DEFAULT_OPTIONS: ComputeOptions = {
  remove_building_inner_areas: true,
  roads_walkable: false,
  grass_not_walkable: false,
};

export interface ResultSummary {
  total_area_m2: number;
  walkable_area_m2: number;
  walkable_percent: number;
  diagnostics: Record<string, number>;
}

export interface WalkableFeatureCollection {
  type: "FeatureCollection";
  features: Array<{
    type: "Feature";
    geometry: { type: string; coordinates: unknown };
    properties: { area_m2: number };
  }>;
  summary: ResultSummary;
}

export interface JobStatus {
  id: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  phase: string | null;
  result?: WalkableFeatureCollection;
  error?: string;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

const defaultSleep = (ms: number) => new Promise<void>(r => setTimeout(r, ms));

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
    public pollIntervalMs: number = 500,
    private sleep: (ms: number) => Promise<void> = defaultSleep,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON error bodies fall through to the generic message
    }
    if (!response.ok) {
      const detail = body && typeof body === "object" && "detail" in body
        ? JSON.stringify((body as { detail: unknown }).detail)
        : `HTTP ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return body;
  }

  async submitWalkable(boundary: PolygonGeometry, options: ComputeOptions,
                       source?: Record<string, unknown>): Promise<string> {
    const payload: Record<string, unknown> = { boundary, options };
    if (source) {
      payload.source = source;
    }
    const doc = await this.request("/api/v1/walkable", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    }) as { id: string };
    return doc.id;
  }

  async getStatus(jobId: string): Promise<JobStatus> {
    return await this.request(`/api/v1/walkable/${jobId}`) as JobStatus;
  }

  /** Poll at the configured cadence until the job reaches a terminal state. */
  async pollUntilDone(jobId: string,
                      onProgress: (fraction: number, phase: string | null) => void,
                      ): Promise<JobStatus> {
    for (;;) {
      const status = await this.getStatus(jobId);
      onProgress(status.progress, status.phase);
      if (status.state === "done") {
        return status;
      }
      if (status.state === "failed") {
        throw new ApiError(500, status.error ?? "computation failed");
      }
      await this.sleep(this.pollIntervalMs);
    }
  }

  async capacity(body: CapacityRequestBody): Promise<CapacityReport> {
    return await this.request("/api/v1/capacity", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }) as CapacityReport;
  }
}
