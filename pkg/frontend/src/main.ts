/**
 * Page wiring: binds the scene model, solve client, and canvas painter to
 * DOM controls. All physics and serialization live in the imported modules;
 * this file only routes events.
 */

import { StudioScene } from "./scene.js";
import { ApiError, SolveClient } from "./api.js";
import type { SolveResponse } from "./api.js";
import {
  analyticStraightTimeS,
  drawScene,
  fitViewport,
  toScene,
} from "./studio.js";
import type { DrawOptions, Viewport } from "./studio.js";
import { anisotropicNorm } from "./penalty.js";
import type { WindPrimitiveDoc } from "./windmath.js";

function must<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

const canvas = must<HTMLCanvasElement>("plan-canvas");
const ctx = canvas.getContext("2d");
if (ctx === null) {
  throw new Error("2d canvas context unavailable");
}

const statusLine = must<HTMLElement>("status-line");
const toastBox = must<HTMLElement>("toast");
const toastText = must<HTMLElement>("toast-text");
const toastRetry = must<HTMLButtonElement>("toast-retry");
const pinList = must<HTMLElement>("pin-list");
const hazardPanel = must<HTMLElement>("hazard-panel");
const weightSlider = must<HTMLInputElement>("hazard-weight");
const weightValue = must<HTMLElement>("hazard-weight-value");
const semiAInput = must<HTMLInputElement>("hazard-semi-a");
const semiBInput = must<HTMLInputElement>("hazard-semi-b");
const orientInput = must<HTMLInputElement>("hazard-orient");
const modeSelect = must<HTMLSelectElement>("hazard-mode");

let scene = StudioScene.default();
let vp: Viewport = fitViewport(scene, canvas.width, canvas.height);
const drawOptions: DrawOptions = {
  showGlyphs: true,
  showHeatmap: true,
  glyphLattice: 24,
  heatmapLattice: 120,
};

const client = new SolveClient(
  (must<HTMLInputElement>("server-url")).value || "http://127.0.0.1:8080",
);

function redraw(): void {
  vp = fitViewport(scene, canvas.width, canvas.height);
  drawScene(ctx as CanvasRenderingContext2D, scene, vp, drawOptions);
  const still = analyticStraightTimeS(scene);
  statusLine.textContent = still === null
    ? `${scene.wind.length} wind primitive(s); still-air bound unavailable`
    : `still-air chord time ${still.toFixed(1)} s at Mach ${scene.bounds.mach_max}`;
  syncHazardPanel();
}

function syncHazardPanel(): void {
  const sel = scene.selection;
  if (sel === null || sel.kind !== "hazard") {
    hazardPanel.classList.add("disabled");
    return;
  }
  const h = scene.hazards[sel.index];
  if (h === undefined) {
    hazardPanel.classList.add("disabled");
    return;
  }
  hazardPanel.classList.remove("disabled");
  weightSlider.value = String(h.weight_per_s ?? 1.0);
  weightValue.textContent = (h.weight_per_s ?? 1.0).toFixed(2);
  semiAInput.value = String(h.semi_axes_m[0]);
  semiBInput.value = String(h.semi_axes_m[1]);
  orientInput.value = (h.orientation_rad * 180.0 / Math.PI).toFixed(1);
  modeSelect.value = h.mode ?? "soft";
}

let toastRetryAction: (() => void) | null = null;

function showToast(text: string, retry: (() => void) | null = null): void {
  toastText.textContent = text;
  toastRetryAction = retry;
  toastRetry.style.display = retry === null ? "none" : "inline-block";
  toastBox.classList.add("visible");
}

toastRetry.addEventListener("click", () => {
  toastBox.classList.remove("visible");
  const action = toastRetryAction;
  toastRetryAction = null;
  if (action !== null) {
    action();
  }
});

must<HTMLButtonElement>("toast-dismiss").addEventListener("click", () => {
  toastBox.classList.remove("visible");
});

function selectedHazardIndex(): number | null {
  const sel = scene.selection;
  return sel !== null && sel.kind === "hazard" ? sel.index : null;
}

function hitHazard(x: number, y: number): number | null {
  for (let i = scene.hazards.length - 1; i >= 0; i--) {
    const h = scene.hazards[i];
    if (h !== undefined && anisotropicNorm(h, x, y) <= 1.0) {
      return i;
    }
  }
  return null;
}

type DragState = { index: number; offsetX: number; offsetY: number } | null;
let drag: DragState = null;

canvas.addEventListener("pointerdown", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const [x, y] = toScene(vp, ev.clientX - rect.left, ev.clientY - rect.top);
  const tool = (must<HTMLSelectElement>("tool-select")).value;
  if (tool === "place") {
    scene.editHazard({ kind: "place", x, y });
    redraw();
    return;
  }
  const index = hitHazard(x, y);
  scene.selection = index === null ? null : { kind: "hazard", index };
  if (index !== null) {
    const h = scene.hazards[index];
    if (h !== undefined) {
      drag = { index, offsetX: x - h.center_m[0], offsetY: y - h.center_m[1] };
      canvas.setPointerCapture(ev.pointerId);
    }
  }
  redraw();
});

canvas.addEventListener("pointermove", (ev) => {
  if (drag === null) {
    return;
  }
  const rect = canvas.getBoundingClientRect();
  const [x, y] = toScene(vp, ev.clientX - rect.left, ev.clientY - rect.top);
  scene.editHazard({
    kind: "drag",
    index: drag.index,
    x: x - drag.offsetX,
    y: y - drag.offsetY,
  });
  redraw();
});

canvas.addEventListener("pointerup", () => {
  drag = null;
});

// Wheel resizes the selected ellipse; shift+wheel rotates it.
canvas.addEventListener("wheel", (ev) => {
  const index = selectedHazardIndex();
  if (index === null) {
    return;
  }
  ev.preventDefault();
  const h = scene.hazards[index];
  if (h === undefined) {
    return;
  }
  if (ev.shiftKey) {
    scene.editHazard({
      kind: "rotate",
      index,
      deltaRad: ev.deltaY > 0 ? -0.05 : 0.05,
    });
  } else {
    const factor = ev.deltaY > 0 ? 1.0 / 1.06 : 1.06;
    const result = scene.editHazard({
      kind: "resize",
      index,
      semiA: h.semi_axes_m[0] * factor,
      semiB: h.semi_axes_m[1] * factor,
    });
    if (result.clamped) {
      showToast("semi-axis clamped to the 1 km floor");
    }
  }
  redraw();
}, { passive: false });

weightSlider.addEventListener("change", () => {
  const index = selectedHazardIndex();
  if (index !== null) {
    scene.setHazardWeight(index, Number(weightSlider.value));
    redraw();
  }
});

function applyAxisInputs(): void {
  const index = selectedHazardIndex();
  if (index === null) {
    return;
  }
  const result = scene.editHazard({
    kind: "resize",
    index,
    semiA: Number(semiAInput.value),
    semiB: Number(semiBInput.value),
  });
  if (result.clamped) {
    showToast("semi-axis clamped to the 1 km floor");
  }
  redraw();
}

semiAInput.addEventListener("change", applyAxisInputs);
semiBInput.addEventListener("change", applyAxisInputs);

orientInput.addEventListener("change", () => {
  const index = selectedHazardIndex();
  if (index === null) {
    return;
  }
  const h = scene.hazards[index];
  if (h === undefined) {
    return;
  }
  const target = Number(orientInput.value) * Math.PI / 180.0;
  scene.editHazard({ kind: "rotate", index, deltaRad: target - h.orientation_rad });
  redraw();
});

modeSelect.addEventListener("change", () => {
  const index = selectedHazardIndex();
  if (index === null) {
    return;
  }
  const h = scene.hazards[index];
  if (h === undefined) {
    return;
  }
  scene.pushUndo();
  h.mode = modeSelect.value === "hard" ? "hard" : "soft";
  if (h.mode === "hard") {
    h.hard_center_level = h.hard_center_level ?? 3.0;
    h.hard_perimeter_level = h.hard_perimeter_level ?? 0.0;
  }
  redraw();
});

must<HTMLButtonElement>("undo-btn").addEventListener("click", () => {
  if (!scene.undo()) {
    showToast("nothing to undo");
  }
  redraw();
});

function renderPins(): void {
  pinList.textContent = "";
  scene.pinned.forEach((pin) => {
    const li = document.createElement("li");
    const mark = pin.converged ? "" : " (not converged)";
    li.textContent =
      `${pin.label}: J=${pin.objective.toFixed(2)}, `
      + `tf=${pin.finalTimeS.toFixed(1)} s, `
      + `fuel=${pin.fuelBurnedKg.toFixed(1)} kg${mark}`;
    pinList.appendChild(li);
  });
}

let solveCounter = 0;

function runSolve(): void {
  solveCounter += 1;
  const label = `run ${solveCounter}`;
  const doc = scene.toScenarioDoc();
  statusLine.textContent = `${label}: solving...`;
  client
    .solve(doc, { solver: { time_cap_s: 120.0 } })
    .then((res: SolveResponse) => {
      const polyline = res.trajectory.nodes.map(
        (row) => [row[1] ?? 0.0, row[2] ?? 0.0] as [number, number],
      );
      scene.pin({
        label,
        polyline,
        objective: res.summary.objective,
        finalTimeS: res.summary.final_time_s,
        fuelBurnedKg: res.summary.fuel_burned_kg,
        converged: res.converged,
      });
      if (!res.converged) {
        showToast(
          `${label} did not converge: ${res.summary.diagnostics.join("; ") || "no diagnostics"}`,
        );
      }
      renderPins();
      redraw();
    })
    .catch((err: unknown) => {
      const text = err instanceof ApiError
        ? `${label} failed (${err.status}): ${err.message}`
        : `${label} failed: ${String(err)}`;
      showToast(text, runSolve);
      redraw();
    });
}

must<HTMLButtonElement>("solve-btn").addEventListener("click", runSolve);

must<HTMLButtonElement>("export-btn").addEventListener("click", () => {
  const blob = new Blob(
    [JSON.stringify(scene.toScenarioDoc(), null, 2)],
    { type: "application/json" },
  );
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `${scene.name || "scenario"}.json`;
  a.click();
  URL.revokeObjectURL(a.href);
});

const importInput = must<HTMLInputElement>("import-input");
must<HTMLButtonElement>("import-btn").addEventListener("click", () => {
  importInput.click();
});
importInput.addEventListener("change", () => {
  const file = importInput.files?.[0];
  if (file === undefined) {
    return;
  }
  file.text().then((text) => {
    try {
      scene = StudioScene.fromScenarioDoc(JSON.parse(text));
      renderPins();
      redraw();
    } catch (err) {
      showToast(`import failed: ${err instanceof Error ? err.message : String(err)}`);
    }
  });
  importInput.value = "";
});

function defaultPrimitive(kind: string): WindPrimitiveDoc {
  const cx = (scene.start[0] + scene.goal[0]) / 2.0;
  const cy = (scene.start[1] + scene.goal[1]) / 2.0;
  switch (kind) {
    case "uniform":
      return { kind: "uniform", u_mps: 10.0, v_mps: 0.0 };
    case "vortex":
      return {
        kind: "vortex",
        circulation_m2ps: 2.0e7,
        center_m: [cx, cy],
        core_radius_m: 8.0e4,
      };
    case "dipole":
      return {
        kind: "dipole",
        moment_m3ps: [4.0e11, 0.0],
        center_m: [cx, cy],
        core_radius_m: 1.0e5,
      };
    default:
      return {
        kind: "source_sink",
        strength_m2ps: 1.5e7,
        center_m: [cx, cy],
        core_radius_m: 7.0e4,
      };
  }
}

must<HTMLButtonElement>("wind-add-btn").addEventListener("click", () => {
  const kind = (must<HTMLSelectElement>("wind-kind")).value;
  scene.addWindPrimitive(defaultPrimitive(kind));
  redraw();
});

must<HTMLButtonElement>("wind-random-btn").addEventListener("click", () => {
  const seed = Math.floor(Math.random() * 1e6);
  client
    .windSample({
      seed,
      max_speed_mps: Number((must<HTMLInputElement>("wind-speed")).value) || 15.0,
      counts: [2, 1, 1],
      domain: {
        x_min_m: Math.min(scene.start[0], scene.goal[0]),
        x_max_m: Math.max(scene.start[0], scene.goal[0]),
        y_min_m: Math.min(scene.start[1], scene.goal[1]),
        y_max_m: Math.max(scene.start[1], scene.goal[1]),
      },
    })
    .then((res) => {
      scene.setWindField(res.field);
      redraw();
    })
    .catch((err: unknown) => {
      showToast(err instanceof ApiError ? err.message : String(err));
    });
});

must<HTMLButtonElement>("wind-clear-btn").addEventListener("click", () => {
  scene.setWindField([]);
  redraw();
});

must<HTMLInputElement>("show-glyphs").addEventListener("change", (ev) => {
  drawOptions.showGlyphs = (ev.target as HTMLInputElement).checked;
  redraw();
});

must<HTMLInputElement>("show-heatmap").addEventListener("change", (ev) => {
  drawOptions.showHeatmap = (ev.target as HTMLInputElement).checked;
  redraw();
});

redraw();
renderPins();
