/**
 * Client-side evaluation of the serialized wind primitives.
 *
 * The formulas mirror the server's analytic field model term for term, in
 * the same operation order, so both sides agree to floating-point noise.
 * Only evaluation lives here; sampling and fitting stay server-side.
 */

export interface UniformDoc {
  kind: "uniform";
  u_mps: number;
  v_mps: number;
}

export interface VortexDoc {
  kind: "vortex";
  circulation_m2ps: number;
  center_m: [number, number];
  core_radius_m: number;
}

export interface DipoleDoc {
  kind: "dipole";
  moment_m3ps: [number, number];
  center_m: [number, number];
  core_radius_m: number;
}

export interface SourceSinkDoc {
  kind: "source_sink";
  strength_m2ps: number;
  center_m: [number, number];
  core_radius_m: number;
}

export type WindPrimitiveDoc = UniformDoc | VortexDoc | DipoleDoc | SourceSinkDoc;

export interface Vec2 {
  u: number;
  v: number;
}

export interface Jacobian {
  jxx: number;
  jxy: number;
  jyx: number;
  jyy: number;
}

const TWO_PI = 2.0 * Math.PI;

function checkRadius(radius: number): void {
  if (!(radius > 0.0)) {
    throw new Error("regularization radius must be positive");
  }
}

/** Velocity (u, v) of one primitive at a probe point, m/s. */
export function primitiveVelocity(p: WindPrimitiveDoc, x: number, y: number): Vec2 {
  switch (p.kind) {
    case "uniform":
      return { u: p.u_mps, v: p.v_mps };
    case "vortex": {
      checkRadius(p.core_radius_m);
      const dx = x - p.center_m[0];
      const dy = y - p.center_m[1];
      const c = p.circulation_m2ps / (TWO_PI * (dx * dx + dy * dy + p.core_radius_m ** 2));
      return { u: -c * dy, v: c * dx };
    }
    case "dipole": {
      checkRadius(p.core_radius_m);
      const dx = x - p.center_m[0];
      const dy = y - p.center_m[1];
      const r0sq = p.core_radius_m * p.core_radius_m;
      const s = dx * dx + dy * dy + r0sq;
      const mx = p.moment_m3ps[0];
      const my = p.moment_m3ps[1];
      const num = mx * (dx * dx - dy * dy + r0sq) + 2.0 * my * dx * dy;
      const den = my * (dy * dy - dx * dx + r0sq) + 2.0 * mx * dx * dy;
      const denom = TWO_PI * s * s;
      return { u: num / denom, v: den / denom };
    }
    case "source_sink": {
      checkRadius(p.core_radius_m);
      const dx = x - p.center_m[0];
      const dy = y - p.center_m[1];
      const c = p.strength_m2ps / (TWO_PI * (dx * dx + dy * dy + p.core_radius_m ** 2));
      return { u: c * dx, v: c * dy };
    }
    default:
      throw new Error(`unknown wind primitive kind ${JSON.stringify((p as { kind?: unknown }).kind)}`);
  }
}

/** Spatial Jacobian entries (dWx/dx, dWx/dy, dWy/dx, dWy/dy) of one primitive. */
export function primitiveJacobian(p: WindPrimitiveDoc, x: number, y: number): Jacobian {
  switch (p.kind) {
    case "uniform":
      return { jxx: 0.0, jxy: 0.0, jyx: 0.0, jyy: 0.0 };
    case "vortex": {
      checkRadius(p.core_radius_m);
      const dx = x - p.center_m[0];
      const dy = y - p.center_m[1];
      const s = dx * dx + dy * dy + p.core_radius_m ** 2;
      const c = p.circulation_m2ps / (TWO_PI * s * s);
      const jxx = 2.0 * c * dx * dy;
      // Trace cancels exactly: jyy = -jxx
      return {
        jxx,
        jxy: c * (dy * dy - dx * dx - p.core_radius_m ** 2),
        jyx: c * (dy * dy - dx * dx + p.core_radius_m ** 2),
        jyy: -jxx,
      };
    }
    case "dipole": {
      checkRadius(p.core_radius_m);
      const dx = x - p.center_m[0];
      const dy = y - p.center_m[1];
      const r0sq = p.core_radius_m * p.core_radius_m;
      const s = dx * dx + dy * dy + r0sq;
      const mx = p.moment_m3ps[0];
      const my = p.moment_m3ps[1];
      const pn = mx * (dx * dx - dy * dy + r0sq) + 2.0 * my * dx * dy;
      const qn = my * (dy * dy - dx * dx + r0sq) + 2.0 * mx * dx * dy;
      const denom = TWO_PI * s * s;
      const mdotx = mx * dx + my * dy;
      return {
        jxx: (2.0 * mdotx - 4.0 * dx * pn / s) / denom,
        jxy: (2.0 * (my * dx - mx * dy) - 4.0 * dy * pn / s) / denom,
        jyx: (2.0 * (mx * dy - my * dx) - 4.0 * dx * qn / s) / denom,
        jyy: (2.0 * mdotx - 4.0 * dy * qn / s) / denom,
      };
    }
    case "source_sink": {
      checkRadius(p.core_radius_m);
      const dx = x - p.center_m[0];
      const dy = y - p.center_m[1];
      const s = dx * dx + dy * dy + p.core_radius_m ** 2;
      const c = p.strength_m2ps / (TWO_PI * s * s);
      const jxy = -2.0 * c * dx * dy;
      return {
        jxx: c * (s - 2.0 * dx * dx),
        jxy,
        jyx: jxy,
        jyy: c * (s - 2.0 * dy * dy),
      };
    }
    default:
      throw new Error(`unknown wind primitive kind ${JSON.stringify((p as { kind?: unknown }).kind)}`);
  }
}

/** Superposed wind (u, v) of a serialized field at one probe, m/s. */
export function windAt(field: readonly WindPrimitiveDoc[], x: number, y: number): Vec2 {
  let u = 0.0;
  let v = 0.0;
  for (const p of field) {
    const w = primitiveVelocity(p, x, y);
    u += w.u;
    v += w.v;
  }
  return { u, v };
}

/** Superposed spatial Jacobian of a serialized field at one probe. */
export function jacobianAt(field: readonly WindPrimitiveDoc[], x: number, y: number): Jacobian {
  let jxx = 0.0;
  let jxy = 0.0;
  let jyx = 0.0;
  let jyy = 0.0;
  for (const p of field) {
    const j = primitiveJacobian(p, x, y);
    jxx += j.jxx;
    jxy += j.jxy;
    jyx += j.jyx;
    jyy += j.jyy;
  }
  return { jxx, jxy, jyx, jyy };
}

/** Largest wind speed over an n-by-n grid spanning the rectangle. */
export function supSpeedOnGrid(
  field: readonly WindPrimitiveDoc[],
  xMin: number,
  xMax: number,
  yMin: number,
  yMax: number,
  n: number,
): number {
  let sup = 0.0;
  for (let i = 0; i < n; i++) {
    const x = xMin + (i * (xMax - xMin)) / (n - 1);
    for (let j = 0; j < n; j++) {
      const y = yMin + (j * (yMax - yMin)) / (n - 1);
      const w = windAt(field, x, y);
      const speed = Math.hypot(w.u, w.v);
      if (speed > sup) {
        sup = speed;
      }
    }
  }
  return sup;
}
