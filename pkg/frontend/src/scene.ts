/**
 * Editable scene state: a client mirror of the server scenario document,
 * plus pinned past solutions, selection, and undo.
 *
 * The scene serializes to a valid server scenario at all times; every edit
 * path funnels through the same clamps the serializer enforces. Pinned
 * solutions are frozen on arrival and never mutated.
 */

import type { WindPrimitiveDoc } from "./windmath.js";
import type { EllipseDoc } from "./penalty.js";

export const SCHEMA_VERSION = 1;

/** Resize floor: gestures may not collapse an ellipse below this, m. */
export const MIN_SEMI_AXIS_M = 1000.0;

export interface WeightsDoc {
  time_weight_per_s: number;
  final_mass_weight_per_kg: number;
}

export interface BoundsDoc {
  mach_min: number;
  mach_max: number;
  heading_min_rad: number;
  heading_max_rad: number;
  throttle_min: number;
  throttle_max: number;
}

export interface ScenarioDoc {
  schema_version: number;
  name: string;
  aircraft: string;
  altitude_m: number;
  initial_mass_kg: number;
  start_m: [number, number];
  goal_m: [number, number];
  weights: WeightsDoc;
  wind: WindPrimitiveDoc[];
  hazards: EllipseDoc[];
  bounds: BoundsDoc;
}

export interface PinnedSolution {
  readonly label: string;
  readonly polyline: ReadonlyArray<readonly [number, number]>;
  readonly objective: number;
  readonly finalTimeS: number;
  readonly fuelBurnedKg: number;
  readonly converged: boolean;
}

export type HazardGesture =
  | { kind: "place"; x: number; y: number }
  | { kind: "drag"; index: number; x: number; y: number }
  | { kind: "resize"; index: number; semiA: number; semiB: number }
  | { kind: "rotate"; index: number; deltaRad: number };

export interface GestureResult {
  /** True when a resize hit the semi-axis floor; the UI shows a cue. */
  clamped: boolean;
}

export type Selection =
  | { kind: "hazard"; index: number }
  | { kind: "wind"; index: number }
  | null;

export const DEFAULT_BOUNDS: BoundsDoc = {
  mach_min: 0.5,
  mach_max: 0.88,
  heading_min_rad: -1.4835298641951802,
  heading_max_rad: 1.4835298641951802,
  throttle_min: 0.1,
  throttle_max: 1.0,
};

function requireNumber(doc: Record<string, unknown>, key: string): number {
  const value = doc[key];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new Error(`scenario field ${JSON.stringify(key)} must be a finite number`);
  }
  return value;
}

function requirePair(doc: Record<string, unknown>, key: string): [number, number] {
  const value = doc[key];
  if (!Array.isArray(value) || value.length !== 2
      || typeof value[0] !== "number" || typeof value[1] !== "number") {
    throw new Error(`scenario field ${JSON.stringify(key)} must be a pair of numbers`);
  }
  return [value[0], value[1]];
}

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

export class StudioScene {
  name: string;
  aircraft: string;
  altitudeM: number;
  initialMassKg: number;
  start: [number, number];
  goal: [number, number];
  weights: WeightsDoc;
  wind: WindPrimitiveDoc[];
  hazards: EllipseDoc[];
  bounds: BoundsDoc;
  selection: Selection = null;

  private pinnedSolutions: PinnedSolution[] = [];
  private undoStack: ScenarioDoc[] = [];

  constructor(doc: ScenarioDoc) {
    this.name = doc.name;
    this.aircraft = doc.aircraft;
    this.altitudeM = doc.altitude_m;
    this.initialMassKg = doc.initial_mass_kg;
    this.start = [doc.start_m[0], doc.start_m[1]];
    this.goal = [doc.goal_m[0], doc.goal_m[1]];
    this.weights = clone(doc.weights);
    this.wind = clone(doc.wind);
    this.hazards = clone(doc.hazards);
    this.bounds = clone(doc.bounds);
  }

  /** The bundled two-ellipse DOC scene the studio opens with. */
  static default(): StudioScene {
    return new StudioScene({
      schema_version: SCHEMA_VERSION,
      name: "nominal",
      aircraft: "b767-300er",
      altitude_m: 10000.0,
      initial_mass_kg: 140000.0,
      start_m: [0.0, 0.0],
      goal_m: [1000000.0, 1000000.0],
      weights: { time_weight_per_s: 1.0, final_mass_weight_per_kg: -0.001 },
      wind: [],
      hazards: [
        {
          center_m: [500000.0, 600000.0],
          semi_axes_m: [100000.0, 300000.0],
          orientation_rad: 0.0,
          weight_per_s: 1.0,
          mode: "soft",
        },
        {
          center_m: [400000.0, 300000.0],
          semi_axes_m: [300000.0, 150000.0],
          orientation_rad: 0.7853981633974483,
          weight_per_s: 1.0,
          mode: "soft",
        },
      ],
      bounds: { ...DEFAULT_BOUNDS },
    });
  }

  /** Parse and validate an imported scenario document. */
  static fromScenarioDoc(raw: unknown): StudioScene {
    if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
      throw new Error("scenario must be an object");
    }
    const doc = raw as Record<string, unknown>;
    if (doc["schema_version"] !== SCHEMA_VERSION) {
      throw new Error(
        `unsupported schema_version ${JSON.stringify(doc["schema_version"])}; `
        + `expected ${SCHEMA_VERSION}`,
      );
    }
    const aircraft = doc["aircraft"] ?? "b767-300er";
    if (typeof aircraft !== "string") {
      throw new Error("only registry aircraft names are editable in the studio");
    }
    const weights = (doc["weights"] ?? {}) as Record<string, unknown>;
    const bounds = (doc["bounds"] ?? {}) as Record<string, unknown>;
    return new StudioScene({
      schema_version: SCHEMA_VERSION,
      name: typeof doc["name"] === "string" ? doc["name"] : "",
      aircraft,
      altitude_m: requireNumber(doc, "altitude_m"),
      initial_mass_kg: requireNumber(doc, "initial_mass_kg"),
      start_m: requirePair(doc, "start_m"),
      goal_m: requirePair(doc, "goal_m"),
      weights: {
        time_weight_per_s: typeof weights["time_weight_per_s"] === "number"
          ? weights["time_weight_per_s"] : 1.0,
        final_mass_weight_per_kg: typeof weights["final_mass_weight_per_kg"] === "number"
          ? weights["final_mass_weight_per_kg"] : 0.0,
      },
      wind: clone((doc["wind"] ?? []) as WindPrimitiveDoc[]),
      hazards: clone((doc["hazards"] ?? []) as EllipseDoc[]),
      bounds: {
        ...DEFAULT_BOUNDS,
        ...(bounds as Partial<BoundsDoc>),
      },
    });
  }

  /** Canonical server scenario document for /solve and file export. */
  toScenarioDoc(): ScenarioDoc {
    return {
      schema_version: SCHEMA_VERSION,
      name: this.name,
      aircraft: this.aircraft,
      altitude_m: this.altitudeM,
      initial_mass_kg: this.initialMassKg,
      start_m: [this.start[0], this.start[1]],
      goal_m: [this.goal[0], this.goal[1]],
      weights: clone(this.weights),
      wind: clone(this.wind),
      hazards: this.hazards.map((h) => {
        const doc: EllipseDoc = {
          center_m: [h.center_m[0], h.center_m[1]],
          semi_axes_m: [h.semi_axes_m[0], h.semi_axes_m[1]],
          orientation_rad: h.orientation_rad,
          weight_per_s: h.weight_per_s ?? 1.0,
          mode: h.mode ?? "soft",
        };
        if (doc.mode === "hard") {
          doc.hard_center_level = h.hard_center_level ?? 0.0;
          doc.hard_perimeter_level = h.hard_perimeter_level ?? 0.0;
        }
        return doc;
      }),
      bounds: clone(this.bounds),
    };
  }

  /** Snapshot current state so the next edit is undoable. */
  pushUndo(): void {
    this.undoStack.push(this.toScenarioDoc());
  }

  /** Restore the last snapshot; false when nothing is stacked. */
  undo(): boolean {
    const doc = this.undoStack.pop();
    if (doc === undefined) {
      return false;
    }
    const restored = new StudioScene(doc);
    this.name = restored.name;
    this.aircraft = restored.aircraft;
    this.altitudeM = restored.altitudeM;
    this.initialMassKg = restored.initialMassKg;
    this.start = restored.start;
    this.goal = restored.goal;
    this.weights = restored.weights;
    this.wind = restored.wind;
    this.hazards = restored.hazards;
    this.bounds = restored.bounds;
    return true;
  }

  /** Apply one canvas gesture to the hazard list. */
  editHazard(gesture: HazardGesture): GestureResult {
    this.pushUndo();
    switch (gesture.kind) {
      case "place": {
        this.hazards.push({
          center_m: [gesture.x, gesture.y],
          semi_axes_m: [50000.0, 50000.0],
          orientation_rad: 0.0,
          weight_per_s: 1.0,
          mode: "soft",
        });
        this.selection = { kind: "hazard", index: this.hazards.length - 1 };
        return { clamped: false };
      }
      case "drag": {
        const h = this.requireHazard(gesture.index);
        h.center_m = [gesture.x, gesture.y];
        return { clamped: false };
      }
      case "resize": {
        const h = this.requireHazard(gesture.index);
        const a = Math.max(gesture.semiA, MIN_SEMI_AXIS_M);
        const b = Math.max(gesture.semiB, MIN_SEMI_AXIS_M);
        h.semi_axes_m = [a, b];
        return { clamped: a !== gesture.semiA || b !== gesture.semiB };
      }
      case "rotate": {
        const h = this.requireHazard(gesture.index);
        h.orientation_rad += gesture.deltaRad;
        return { clamped: false };
      }
    }
  }

  setHazardWeight(index: number, weight: number): void {
    if (!(weight >= 0.0)) {
      throw new Error("hazard weight must be nonnegative");
    }
    this.pushUndo();
    this.requireHazard(index).weight_per_s = weight;
  }

  addWindPrimitive(doc: WindPrimitiveDoc): void {
    this.pushUndo();
    this.wind.push(clone(doc));
    this.selection = { kind: "wind", index: this.wind.length - 1 };
  }

  /** Replace the whole field, e.g. with a server-sampled draw. */
  setWindField(field: readonly WindPrimitiveDoc[]): void {
    this.pushUndo();
    this.wind = clone(field as WindPrimitiveDoc[]);
  }

  get pinned(): readonly PinnedSolution[] {
    return this.pinnedSolutions;
  }

  pin(solution: PinnedSolution): PinnedSolution {
    const frozen = Object.freeze({
      ...solution,
      polyline: Object.freeze(solution.polyline.map((p) => Object.freeze([p[0], p[1]] as const))),
    });
    this.pinnedSolutions.push(frozen);
    return frozen;
  }

  private requireHazard(index: number): EllipseDoc {
    const h = this.hazards[index];
    if (h === undefined) {
      throw new Error(`no hazard at index ${index}`);
    }
    return h;
  }
}
