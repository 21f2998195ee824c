/**
 * Client-side penalty-field evaluation for the live heatmap.
 *
 * Mirrors the server model: each hazard is an oblique ellipse with metric
 * A = R diag(1/a^2, 1/b^2) R^T. Soft hazards contribute c / (eps + ||u||_A),
 * hard hazards exp(k (1 - ||u||_A) + d) with k = c - d. Evaluation only;
 * the running-cost integration stays server-side.
 */

export const SOFT_EPS = 1e-3;

export interface EllipseDoc {
  center_m: [number, number];
  semi_axes_m: [number, number];
  orientation_rad: number;
  weight_per_s?: number;
  mode?: "soft" | "hard";
  hard_center_level?: number;
  hard_perimeter_level?: number;
}

export interface MetricTerms {
  axx: number;
  axy: number;
  ayy: number;
}

export interface PenaltyProbe {
  g: number;
  gx: number;
  gy: number;
}

export function metricTerms(e: EllipseDoc): MetricTerms {
  const a = e.semi_axes_m[0];
  const b = e.semi_axes_m[1];
  if (!(a > 0.0) || !(b > 0.0)) {
    throw new Error("semi-axes must be positive");
  }
  const ca = Math.cos(e.orientation_rad);
  const sa = Math.sin(e.orientation_rad);
  const ia = 1.0 / (a * a);
  const ib = 1.0 / (b * b);
  return {
    axx: ca * ca * ia + sa * sa * ib,
    ayy: sa * sa * ia + ca * ca * ib,
    axy: ca * sa * (ia - ib),
  };
}

/** Anisotropic norm ||X - Xc||_A; 1 on the perimeter, 0 at the center. */
export function anisotropicNorm(e: EllipseDoc, x: number, y: number): number {
  const { axx, axy, ayy } = metricTerms(e);
  const ux = x - e.center_m[0];
  const uy = y - e.center_m[1];
  return Math.sqrt(Math.max(axx * ux * ux + 2.0 * axy * ux * uy + ayy * uy * uy, 0.0));
}

/** Summed penalty value and gradient at one probe point. */
export function penaltyValueAndGrad(
  hazards: readonly EllipseDoc[],
  x: number,
  y: number,
): PenaltyProbe {
  let g = 0.0;
  let gx = 0.0;
  let gy = 0.0;
  for (const h of hazards) {
    const weight = h.weight_per_s ?? 1.0;
    if (weight < 0.0) {
      throw new Error("hazard weight must be nonnegative");
    }
    if (weight === 0.0) {
      continue;
    }
    const { axx, axy, ayy } = metricTerms(h);
    const ux = x - h.center_m[0];
    const uy = y - h.center_m[1];
    const q = axx * ux * ux + 2.0 * axy * ux * uy + ayy * uy * uy;
    const n = q > 0.0 ? Math.sqrt(q) : 0.0;
    // (A u) components for the norm gradient A u / n
    const aux = axx * ux + axy * uy;
    const auy = axy * ux + ayy * uy;
    if ((h.mode ?? "soft") === "soft") {
      g += weight / (SOFT_EPS + n);
      if (n > 0.0) {
        const f = -weight / (n * (SOFT_EPS + n) ** 2);
        gx += f * aux;
        gy += f * auy;
      }
    } else {
      const center = h.hard_center_level ?? 0.0;
      const perimeter = h.hard_perimeter_level ?? 0.0;
      const k = center - perimeter;
      const val = weight * Math.exp(k * (1.0 - n) + perimeter);
      if (n > 0.0) {
        const f = (-val * k) / n;
        gx += f * aux;
        gy += f * auy;
      }
      g += val;
    }
  }
  return { g, gx, gy };
}

/**
 * Penalty values over an n-by-n grid spanning the rectangle, row-major with
 * x varying fastest; feeds the heatmap layer.
 */
export function penaltyGrid(
  hazards: readonly EllipseDoc[],
  xMin: number,
  xMax: number,
  yMin: number,
  yMax: number,
  n: number,
): Float64Array {
  const out = new Float64Array(n * n);
  for (let j = 0; j < n; j++) {
    const y = yMin + (j * (yMax - yMin)) / (n - 1);
    for (let i = 0; i < n; i++) {
      const x = xMin + (i * (xMax - xMin)) / (n - 1);
      out[j * n + i] = penaltyValueAndGrad(hazards, x, y).g;
    }
  }
  return out;
}
