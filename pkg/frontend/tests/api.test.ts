/**
 * Client transport contract: one in-flight solve at a time with client-side
 * queueing, verbatim server error text, and faithful request shapes. All
 * checks run against an injected fetch; no server involved.
 */

import { describe, expect, it } from "vitest";
import { ApiError, SolveClient } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { StudioScene } from "../src/scene.js";

interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

interface Deferred {
  promise: Promise<{ status: number; json(): Promise<unknown> }>;
  resolve(status: number, body: unknown): void;
  reject(err: unknown): void;
}

function deferred(): Deferred {
  let resolveRaw!: (v: { status: number; json(): Promise<unknown> }) => void;
  let rejectRaw!: (e: unknown) => void;
  const promise = new Promise<{ status: number; json(): Promise<unknown> }>(
    (res, rej) => {
      resolveRaw = res;
      rejectRaw = rej;
    },
  );
  return {
    promise,
    resolve: (status, body) => resolveRaw({ status, json: async () => body }),
    reject: (e) => rejectRaw(e),
  };
}

function recordingFetch(queue: Deferred[]): { calls: RecordedCall[]; fetch: FetchLike } {
  const calls: RecordedCall[] = [];
  const fetch: FetchLike = (url, init) => {
    calls.push({
      url,
      method: init.method,
      body: init.body === undefined ? undefined : JSON.parse(init.body),
    });
    const next = queue[calls.length - 1];
    if (next === undefined) {
      throw new Error("fake fetch queue exhausted");
    }
    return next.promise;
  };
  return { calls, fetch };
}

const flush = (): Promise<void> => new Promise((res) => setTimeout(res, 0));

const okSolveBody = {
  summary: {
    objective: 1.0, final_time_s: 2.0, final_mass_kg: 3.0, fuel_burned_kg: 4.0,
    penalty_accrued: 0.0, converged: true, iterations: 5, residual_norm: 1e-10,
    hamiltonian_defect: 1e-9, diagnostics: [],
  },
  converged: true,
  deadline_hit: false,
  residuals: [0.0],
  residual_norm: 1e-10,
  elapsed_s: 0.1,
  trajectory: { columns: ["t", "x", "y", "v", "chi", "throttle"], nodes: [[0, 0, 0, 1, 0, 1]] },
};

describe("solve queueing", () => {
  it("never overlaps requests; later solves wait for the first to settle", async () => {
    const first = deferred();
    const second = deferred();
    const { calls, fetch } = recordingFetch([first, second]);
    const client = new SolveClient("http://host:1", fetch);
    const doc = StudioScene.default().toScenarioDoc();

    const p1 = client.solve(doc);
    const p2 = client.solve(doc);
    await flush();
    expect(calls.length).toBe(1);

    first.resolve(200, okSolveBody);
    await p1;
    await flush();
    expect(calls.length).toBe(2);

    second.resolve(200, okSolveBody);
    const r2 = await p2;
    expect(r2.summary.objective).toBe(1.0);
  });

  it("a failed solve does not wedge the queue", async () => {
    const first = deferred();
    const second = deferred();
    const { calls, fetch } = recordingFetch([first, second]);
    const client = new SolveClient("http://host:1", fetch);
    const doc = StudioScene.default().toScenarioDoc();

    const p1 = client.solve(doc);
    const p2 = client.solve(doc);
    first.resolve(504, { error: "solver exceeded the request deadline" });
    await expect(p1).rejects.toBeInstanceOf(ApiError);
    await flush();
    expect(calls.length).toBe(2);

    second.resolve(200, okSolveBody);
    await expect(p2).resolves.toMatchObject({ converged: true });
  });
});

describe("request shapes", () => {
  it("posts the scenario with solver overrides and honors full=true", async () => {
    const first = deferred();
    const { calls, fetch } = recordingFetch([first]);
    const client = new SolveClient("http://host:1/", fetch);
    const doc = StudioScene.default().toScenarioDoc();

    const p = client.solve(doc, {
      full: true,
      solver: { dt_steps: 200, time_cap_s: 120.0 },
    });
    first.resolve(200, okSolveBody);
    await p;

    const call = calls[0];
    expect(call?.url).toBe("http://host:1/solve?full=true");
    expect(call?.method).toBe("POST");
    const body = call?.body as { scenario: unknown; solver: unknown };
    expect(body.scenario).toEqual(doc);
    expect(body.solver).toEqual({ dt_steps: 200, time_cap_s: 120.0 });
  });

  it("posts wind sampling requests to /wind/sample", async () => {
    const first = deferred();
    const { calls, fetch } = recordingFetch([first]);
    const client = new SolveClient("http://host:1", fetch);
    const p = client.windSample({ seed: 7, max_speed_mps: 12.0, counts: [2, 1, 1] });
    first.resolve(200, { seed: 7, field: [] });
    const res = await p;
    expect(res.seed).toBe(7);
    expect(calls[0]?.url).toBe("http://host:1/wind/sample");
  });
});

describe("error surfacing", () => {
  it("carries the server error text verbatim", async () => {
    const first = deferred();
    const { fetch } = recordingFetch([first]);
    const client = new SolveClient("http://host:1", fetch);
    const p = client.health();
    const text = 'scenario field "goal_m" must be a pair of numbers';
    first.resolve(422, { error: text });
    const err = await p.then(
      () => {
        throw new Error("expected rejection");
      },
      (e: unknown) => e,
    );
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).message).toBe(text);
    expect((err as ApiError).status).toBe(422);
  });

  it("falls back to the status code when the body has no error text", async () => {
    const first = deferred();
    const { fetch } = recordingFetch([first]);
    const client = new SolveClient("http://host:1", fetch);
    const p = client.health();
    first.resolve(500, "not json at all");
    const err = await p.catch((e: unknown) => e);
    expect((err as ApiError).message).toBe("HTTP 500");
  });
});
