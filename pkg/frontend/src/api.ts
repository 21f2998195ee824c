/**
 * Typed client for the solve service.
 *
 * All solving stays server-side; this wrapper adds request/response typing,
 * verbatim error surfacing, and a client-side queue so at most one solve is
 * in flight at a time - further requests wait their turn.
 */

import type { ScenarioDoc } from "./scene.js";
import type { WindPrimitiveDoc } from "./windmath.js";
import type { EllipseDoc } from "./penalty.js";

export interface SolverOverrides {
  dt_steps?: number;
  max_iterations?: number;
  tolerance?: number;
  time_cap_s?: number;
}

export interface SolveSummary {
  objective: number;
  final_time_s: number;
  final_mass_kg: number;
  fuel_burned_kg: number;
  penalty_accrued: number;
  converged: boolean;
  iterations: number;
  residual_norm: number;
  hamiltonian_defect: number;
  diagnostics: string[];
}

export interface TrajectoryPayload {
  columns: string[];
  nodes: number[][];
}

export interface SolveResponse {
  summary: SolveSummary;
  converged: boolean;
  deadline_hit: boolean;
  residuals: number[];
  residual_norm: number;
  elapsed_s: number;
  trajectory: TrajectoryPayload;
}

export interface WindSampleResponse {
  seed: number;
  field: WindPrimitiveDoc[];
}

export interface ClusterResponse {
  k: number;
  ellipses: EllipseDoc[];
}

export interface HealthResponse {
  status: string;
  package_version: string;
  schema_version: number;
}

/** Non-2xx response; carries the server's error text verbatim. */
export class ApiError extends Error {
  readonly status: number;
  readonly body: unknown;

  constructor(status: number, body: unknown) {
    const detail = typeof body === "object" && body !== null && "error" in body
      ? String((body as { error: unknown }).error)
      : `HTTP ${status}`;
    super(detail);
    this.name = "ApiError";
    this.status = status;
    this.body = body;
  }
}

export type FetchLike = (url: string, init: {
  method: string;
  headers: Record<string, string>;
  body?: string;
}) => Promise<{ status: number; json(): Promise<unknown> }>;

export class SolveClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private queueTail: Promise<unknown> = Promise.resolve();

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  async health(): Promise<HealthResponse> {
    return await this.request("GET", "/health") as HealthResponse;
  }

  /**
   * Queued solve: at most one in-flight request; concurrent callers are
   * chained in arrival order. A failed predecessor never blocks the queue.
   */
  solve(
    scenario: ScenarioDoc,
    options?: { full?: boolean; solver?: SolverOverrides },
  ): Promise<SolveResponse> {
    const path = options?.full ? "/solve?full=true" : "/solve";
    const body: Record<string, unknown> = { scenario };
    if (options?.solver !== undefined) {
      body["solver"] = options.solver;
    }
    const run = this.queueTail.then(
      () => this.request("POST", path, body),
      () => this.request("POST", path, body),
    );
    this.queueTail = run.then(() => undefined, () => undefined);
    return run as Promise<SolveResponse>;
  }

  async windSample(req: {
    seed?: number;
    max_speed_mps?: number;
    counts?: [number, number, number];
    domain?: { x_min_m: number; x_max_m: number; y_min_m: number; y_max_m: number };
  }): Promise<WindSampleResponse> {
    return await this.request("POST", "/wind/sample", req) as WindSampleResponse;
  }

  async clusterHazards(req: {
    points: Array<[number, number]>;
    k: number;
    seed?: number;
    weight?: number;
  }): Promise<ClusterResponse> {
    return await this.request("POST", "/hazards/cluster", req) as ClusterResponse;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: Parameters<FetchLike>[1] = {
      method,
      headers: { "Content-Type": "application/json" },
    };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json();
    if (response.status < 200 || response.status >= 300) {
      throw new ApiError(response.status, payload);
    }
    return payload;
  }
}
