/**
 * Canvas presentation: a single view transform from scenario SI coordinates
 * to pixels, plus pure layer builders (wind glyphs, penalty heatmap, route
 * polylines) that the page loop feeds to a 2D context.
 *
 * The plane is flat; no geographic projection. Y grows upward in scenario
 * space and downward on canvas, so the transform flips it.
 */

import type { StudioScene } from "./scene.js";
import type { WindPrimitiveDoc } from "./windmath.js";
import { windAt } from "./windmath.js";
import type { EllipseDoc } from "./penalty.js";
import { penaltyGrid } from "./penalty.js";

export interface Viewport {
  xMin: number;
  yMin: number;
  /** Pixels per meter. */
  scale: number;
  widthPx: number;
  heightPx: number;
}

export interface GlyphSegment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  speed: number;
}

export interface HeatmapLayer {
  n: number;
  /** Row-major penalty values, x fastest. */
  values: Float64Array;
  /** Largest value, for normalization; 0 when there are no hazards. */
  peak: number;
}

/** Fit the scene's bounding box (endpoints, hazards, margins) to the canvas. */
export function fitViewport(
  scene: StudioScene,
  widthPx: number,
  heightPx: number,
  marginFrac = 0.08,
): Viewport {
  let xMin = Math.min(scene.start[0], scene.goal[0]);
  let xMax = Math.max(scene.start[0], scene.goal[0]);
  let yMin = Math.min(scene.start[1], scene.goal[1]);
  let yMax = Math.max(scene.start[1], scene.goal[1]);
  for (const h of scene.hazards) {
    const reach = Math.max(h.semi_axes_m[0], h.semi_axes_m[1]);
    xMin = Math.min(xMin, h.center_m[0] - reach);
    xMax = Math.max(xMax, h.center_m[0] + reach);
    yMin = Math.min(yMin, h.center_m[1] - reach);
    yMax = Math.max(yMax, h.center_m[1] + reach);
  }
  const spanX = Math.max(xMax - xMin, 1.0);
  const spanY = Math.max(yMax - yMin, 1.0);
  const margin = marginFrac * Math.max(spanX, spanY);
  const scale = Math.min(
    widthPx / (spanX + 2.0 * margin),
    heightPx / (spanY + 2.0 * margin),
  );
  return {
    xMin: xMin - margin,
    yMin: yMin - margin,
    scale,
    widthPx,
    heightPx,
  };
}

/** Scenario SI point to canvas pixels (y flipped). */
export function toCanvas(vp: Viewport, x: number, y: number): [number, number] {
  return [
    (x - vp.xMin) * vp.scale,
    vp.heightPx - (y - vp.yMin) * vp.scale,
  ];
}

/** Canvas pixels back to scenario SI, the inverse of toCanvas. */
export function toScene(vp: Viewport, px: number, py: number): [number, number] {
  return [
    vp.xMin + px / vp.scale,
    vp.yMin + (vp.heightPx - py) / vp.scale,
  ];
}

/**
 * Vector glyphs on an nx-by-ny lattice, evaluated client-side from the
 * serialized primitives. Segment length is capped at one lattice cell.
 */
export function glyphLayer(
  field: readonly WindPrimitiveDoc[],
  vp: Viewport,
  nx: number,
  ny: number,
): GlyphSegment[] {
  const out: GlyphSegment[] = [];
  const xSpan = vp.widthPx / vp.scale;
  const ySpan = vp.heightPx / vp.scale;
  const cell = Math.min(xSpan / nx, ySpan / ny);
  let peak = 0.0;
  const probes: Array<{ x: number; y: number; u: number; v: number; speed: number }> = [];
  for (let i = 0; i < nx; i++) {
    const x = vp.xMin + ((i + 0.5) * xSpan) / nx;
    for (let j = 0; j < ny; j++) {
      const y = vp.yMin + ((j + 0.5) * ySpan) / ny;
      const w = windAt(field, x, y);
      const speed = Math.hypot(w.u, w.v);
      peak = Math.max(peak, speed);
      probes.push({ x, y, u: w.u, v: w.v, speed });
    }
  }
  for (const p of probes) {
    const len = peak > 0.0 ? (0.85 * cell * p.speed) / peak : 0.0;
    const angle = Math.atan2(p.v, p.u);
    const [x0, y0] = toCanvas(vp, p.x, p.y);
    const [x1, y1] = toCanvas(
      vp,
      p.x + len * Math.cos(angle),
      p.y + len * Math.sin(angle),
    );
    out.push({ x0, y0, x1, y1, speed: p.speed });
  }
  return out;
}

/** Penalty heatmap over the viewport on an n-by-n lattice. */
export function heatmapLayer(
  hazards: readonly EllipseDoc[],
  vp: Viewport,
  n: number,
): HeatmapLayer {
  const values = penaltyGrid(
    hazards,
    vp.xMin,
    vp.xMin + vp.widthPx / vp.scale,
    vp.yMin,
    vp.yMin + vp.heightPx / vp.scale,
    n,
  );
  let peak = 0.0;
  for (const v of values) {
    peak = Math.max(peak, v);
  }
  return { n, values, peak };
}

/** Trajectory nodes (t, x, y, v, chi, throttle) to canvas polyline points. */
export function polylinePath(
  vp: Viewport,
  nodes: ReadonlyArray<ReadonlyArray<number>>,
): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (const row of nodes) {
    const x = row[1];
    const y = row[2];
    if (x === undefined || y === undefined) {
      throw new Error("trajectory rows must carry (t, x, y, ...)");
    }
    out.push(toCanvas(vp, x, y));
  }
  return out;
}

export interface DrawOptions {
  showGlyphs: boolean;
  showHeatmap: boolean;
  glyphLattice: number;
  heatmapLattice: number;
}

const PIN_PALETTE = ["#e0a458", "#7fb069", "#b388eb", "#f26d6d", "#5aa9e6"];

/** Paint the whole scene onto a 2D context. Pure layers feed this. */
export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: StudioScene,
  vp: Viewport,
  opts: DrawOptions,
): void {
  ctx.fillStyle = "#14181f";
  ctx.fillRect(0, 0, vp.widthPx, vp.heightPx);

  if (opts.showHeatmap && scene.hazards.length > 0) {
    const layer = heatmapLayer(scene.hazards, vp, opts.heatmapLattice);
    if (layer.peak > 0.0) {
      const cellW = vp.widthPx / layer.n;
      const cellH = vp.heightPx / layer.n;
      for (let j = 0; j < layer.n; j++) {
        for (let i = 0; i < layer.n; i++) {
          const value = layer.values[j * layer.n + i];
          if (value === undefined || value <= 0.0) {
            continue;
          }
          // Log compression keeps the soft-barrier spike from washing
          // out the approach gradient the optimizer actually follows.
          const alpha = 0.55 * Math.log1p(value / layer.peak * 60.0) / Math.log1p(60.0);
          ctx.fillStyle = `rgba(214, 93, 77, ${alpha.toFixed(4)})`;
          const py = vp.heightPx - (j + 1) * cellH;
          ctx.fillRect(i * cellW, py, cellW + 0.5, cellH + 0.5);
        }
      }
    }
  }

  if (opts.showGlyphs && scene.wind.length > 0) {
    const segments = glyphLayer(scene.wind, vp, opts.glyphLattice, opts.glyphLattice);
    ctx.strokeStyle = "rgba(126, 168, 222, 0.75)";
    ctx.lineWidth = 1.25;
    ctx.beginPath();
    for (const s of segments) {
      ctx.moveTo(s.x0, s.y0);
      ctx.lineTo(s.x1, s.y1);
      const angle = Math.atan2(s.y1 - s.y0, s.x1 - s.x0);
      const head = 4.0;
      ctx.moveTo(s.x1, s.y1);
      ctx.lineTo(
        s.x1 - head * Math.cos(angle - 0.45),
        s.y1 - head * Math.sin(angle - 0.45),
      );
      ctx.moveTo(s.x1, s.y1);
      ctx.lineTo(
        s.x1 - head * Math.cos(angle + 0.45),
        s.y1 - head * Math.sin(angle + 0.45),
      );
    }
    ctx.stroke();
  }

  scene.hazards.forEach((h, index) => {
    const [cx, cy] = toCanvas(vp, h.center_m[0], h.center_m[1]);
    const selected =
      scene.selection !== null
      && scene.selection.kind === "hazard"
      && scene.selection.index === index;
    ctx.beginPath();
    // Canvas y points down, so a scene-space rotation flips sign here.
    ctx.ellipse(
      cx,
      cy,
      h.semi_axes_m[0] * vp.scale,
      h.semi_axes_m[1] * vp.scale,
      -h.orientation_rad,
      0,
      2.0 * Math.PI,
    );
    const hard = h.mode === "hard";
    ctx.strokeStyle = hard ? "#e4572e" : "#e0a458";
    ctx.lineWidth = selected ? 3.0 : 1.5;
    ctx.setLineDash((h.weight_per_s ?? 1.0) === 0.0 ? [6, 6] : []);
    ctx.stroke();
    ctx.setLineDash([]);
  });

  scene.pinned.forEach((pin, index) => {
    if (pin.polyline.length < 2) {
      return;
    }
    ctx.strokeStyle = PIN_PALETTE[index % PIN_PALETTE.length] ?? "#e0a458";
    ctx.lineWidth = pin.converged ? 2.0 : 1.0;
    ctx.setLineDash(pin.converged ? [] : [3, 5]);
    ctx.beginPath();
    const first = pin.polyline[0];
    if (first === undefined) {
      return;
    }
    const [fx, fy] = toCanvas(vp, first[0], first[1]);
    ctx.moveTo(fx, fy);
    for (const point of pin.polyline.slice(1)) {
      const [px, py] = toCanvas(vp, point[0], point[1]);
      ctx.lineTo(px, py);
    }
    ctx.stroke();
    ctx.setLineDash([]);
  });

  for (const [label, point] of [
    ["S", scene.start],
    ["G", scene.goal],
  ] as const) {
    const [px, py] = toCanvas(vp, point[0], point[1]);
    ctx.fillStyle = "#d8e1ec";
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, 2.0 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#14181f";
    ctx.font = "bold 8px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(label, px, py);
  }
}

const ISA_THETA0_K = 288.15;
const ISA_LAPSE_K_PER_M = 0.0065;
const ISA_GAS_CONSTANT = 287.04;
const ISA_GAMMA = 1.4;

/**
 * Still-air minimum flight time: chord length over the Mach-ceiling true
 * airspeed at cruise altitude. Shown as the tooltip oracle next to solved
 * arrival times on zero-wind scenes; null once any wind primitive exists.
 */
export function analyticStraightTimeS(scene: StudioScene): number | null {
  if (scene.wind.length > 0) {
    return null;
  }
  const temperature = ISA_THETA0_K - ISA_LAPSE_K_PER_M * scene.altitudeM;
  const soundSpeed = Math.sqrt(ISA_GAMMA * ISA_GAS_CONSTANT * temperature);
  const vMax = scene.bounds.mach_max * soundSpeed;
  const dx = scene.goal[0] - scene.start[0];
  const dy = scene.goal[1] - scene.start[1];
  return Math.hypot(dx, dy) / vMax;
}
