"""Composite analytic wind fields built from elementary flow primitives.

A field is a superposition of a uniform stream and regularized vortex, dipole,
and source/sink cells. Uniform, vortex, and dipole terms are exactly
divergence-free; the regularized source/sink carries the closed-form
divergence residual Q R0^2 / (pi (r^2+R0^2)^2) that its core smoothing
injects, and is therefore excluded from incompressibility diagnostics.

Every primitive exposes matched scalar and numpy-vectorized evaluation plus
an analytic spatial Jacobian; the ODE right-hand sides consume the scalar
path, grids and fitting consume the vectorized one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle in the horizontal plane, meters."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("domain must have positive extent")

    @property
    def side(self) -> float:
        return max(self.x_max - self.x_min, self.y_max - self.y_min)

    def grid(self, n: int):
        xs = np.linspace(self.x_min, self.x_max, n)
        ys = np.linspace(self.y_min, self.y_max, n)
        return np.meshgrid(xs, ys)


@dataclass(frozen=True)
class Uniform:
    """Uniform stream (U, V), m/s."""

    u: float
    v: float

    def velocity(self, x, y):
        return self.u, self.v

    def jacobian(self, x, y):
        return 0.0, 0.0, 0.0, 0.0

    def velocity_grid(self, x, y):
        shape = np.broadcast(x, y).shape
        return np.full(shape, self.u), np.full(shape, self.v)

    def jacobian_grid(self, x, y):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy(), z.copy(), z.copy()

    def to_dict(self):
        return {"kind": "uniform", "u_mps": self.u, "v_mps": self.v}


def _check_radius(radius):
    if radius <= 0.0:
        raise ValueError("regularization radius must be positive")


@dataclass(frozen=True)
class Vortex:
    """Regularized point vortex: W = Gamma/(2 pi) * (-dy, dx) / (r^2 + R0^2)."""

    circulation: float  # m^2/s
    xc: float
    yc: float
    radius: float       # core regularization R0, m

    def __post_init__(self):
        _check_radius(self.radius)

    def velocity(self, x, y):
        dx, dy = x - self.xc, y - self.yc
        c = self.circulation / (TWO_PI * (dx * dx + dy * dy + self.radius**2))
        return -c * dy, c * dx

    def jacobian(self, x, y):
        dx, dy = x - self.xc, y - self.yc
        s = dx * dx + dy * dy + self.radius**2
        c = self.circulation / (TWO_PI * s * s)
        jxx = 2.0 * c * dx * dy
        jxy = c * (dy * dy - dx * dx - self.radius**2)
        jyx = c * (dy * dy - dx * dx + self.radius**2)
        # Trace cancels exactly: jyy = -jxx
        return jxx, jxy, jyx, -jxx

    velocity_grid = velocity
    jacobian_grid = jacobian

    def to_dict(self):
        return {
            "kind": "vortex",
            "circulation_m2ps": self.circulation,
            "center_m": [self.xc, self.yc],
            "core_radius_m": self.radius,
        }


@dataclass(frozen=True)
class Dipole:
    """Regularized dipole derived from the stream function
    Psi = (mu_y dx - mu_x dy) / (2 pi (r^2 + R0^2)), which keeps the field
    exactly divergence-free for every core radius."""

    mx: float  # moment component, m^3/s
    my: float
    xc: float
    yc: float
    radius: float

    def __post_init__(self):
        _check_radius(self.radius)

    def _common(self, dx, dy):
        r0sq = self.radius * self.radius
        s = dx * dx + dy * dy + r0sq
        p = self.mx * (dx * dx - dy * dy + r0sq) + 2.0 * self.my * dx * dy
        q = self.my * (dy * dy - dx * dx + r0sq) + 2.0 * self.mx * dx * dy
        return s, p, q

    def velocity(self, x, y):
        dx, dy = x - self.xc, y - self.yc
        s, p, q = self._common(dx, dy)
        denom = TWO_PI * s * s
        return p / denom, q / denom

    def jacobian(self, x, y):
        dx, dy = x - self.xc, y - self.yc
        s, p, q = self._common(dx, dy)
        denom = TWO_PI * s * s
        mdotx = self.mx * dx + self.my * dy
        jxx = (2.0 * mdotx - 4.0 * dx * p / s) / denom
        jxy = (2.0 * (self.my * dx - self.mx * dy) - 4.0 * dy * p / s) / denom
        jyx = (2.0 * (self.mx * dy - self.my * dx) - 4.0 * dx * q / s) / denom
        jyy = (2.0 * mdotx - 4.0 * dy * q / s) / denom
        return jxx, jxy, jyx, jyy

    velocity_grid = velocity
    jacobian_grid = jacobian

    def to_dict(self):
        return {
            "kind": "dipole",
            "moment_m3ps": [self.mx, self.my],
            "center_m": [self.xc, self.yc],
            "core_radius_m": self.radius,
        }


@dataclass(frozen=True)
class SourceSink:
    """Regularized source (Q > 0) or sink (Q < 0):
    W = Q/(2 pi) * (dx, dy) / (r^2 + R0^2). Not exactly divergence-free: the
    core regularization injects div = Q R0^2 / (pi (r^2+R0^2)^2)."""

    strength: float  # m^2/s
    xc: float
    yc: float
    radius: float

    def __post_init__(self):
        _check_radius(self.radius)

    def velocity(self, x, y):
        dx, dy = x - self.xc, y - self.yc
        c = self.strength / (TWO_PI * (dx * dx + dy * dy + self.radius**2))
        return c * dx, c * dy

    def jacobian(self, x, y):
        dx, dy = x - self.xc, y - self.yc
        s = dx * dx + dy * dy + self.radius**2
        c = self.strength / (TWO_PI * s * s)
        jxx = c * (s - 2.0 * dx * dx)
        jxy = -2.0 * c * dx * dy
        jyy = c * (s - 2.0 * dy * dy)
        return jxx, jxy, jxy, jyy

    velocity_grid = velocity
    jacobian_grid = jacobian

    def divergence(self, x, y):
        """Closed-form divergence residual of the regularized form."""
        dx, dy = x - self.xc, y - self.yc
        s = dx * dx + dy * dy + self.radius**2
        return self.strength * self.radius**2 / (math.pi * s * s)

    def to_dict(self):
        return {
            "kind": "source_sink",
            "strength_m2ps": self.strength,
            "center_m": [self.xc, self.yc],
            "core_radius_m": self.radius,
        }


_PRIMITIVE_KINDS = {
    "uniform": Uniform,
    "vortex": Vortex,
    "dipole": Dipole,
    "source_sink": SourceSink,
}


def primitive_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "uniform":
        return Uniform(float(doc["u_mps"]), float(doc["v_mps"]))
    if kind == "vortex":
        cx, cy = doc["center_m"]
        return Vortex(float(doc["circulation_m2ps"]), float(cx), float(cy),
                      float(doc["core_radius_m"]))
    if kind == "dipole":
        mx, my = doc["moment_m3ps"]
        cx, cy = doc["center_m"]
        return Dipole(float(mx), float(my), float(cx), float(cy),
                      float(doc["core_radius_m"]))
    if kind == "source_sink":
        cx, cy = doc["center_m"]
        return SourceSink(float(doc["strength_m2ps"]), float(cx), float(cy),
                          float(doc["core_radius_m"]))
    raise ValueError(f"unknown wind primitive kind {kind!r}")


class WindField:
    """Immutable superposition of wind primitives."""

    def __init__(self, primitives=()):
        self.primitives = tuple(primitives)

    def __repr__(self):
        return f"WindField({list(self.primitives)!r})"

    def __eq__(self, other):
        return isinstance(other, WindField) and self.primitives == other.primitives

    def __hash__(self):
        return hash(self.primitives)

    def scaled(self, factor: float) -> "WindField":
        """Field with every strength parameter multiplied by factor."""
        out = []
        for p in self.primitives:
            if isinstance(p, Uniform):
                out.append(Uniform(factor * p.u, factor * p.v))
            elif isinstance(p, Vortex):
                out.append(Vortex(factor * p.circulation, p.xc, p.yc, p.radius))
            elif isinstance(p, Dipole):
                out.append(Dipole(factor * p.mx, factor * p.my, p.xc, p.yc, p.radius))
            elif isinstance(p, SourceSink):
                out.append(SourceSink(factor * p.strength, p.xc, p.yc, p.radius))
            else:
                raise TypeError(f"unknown primitive {p!r}")
        return WindField(out)

    def wind(self, x: float, y: float) -> tuple[float, float]:
        wx = wy = 0.0
        for p in self.primitives:
            u, v = p.velocity(x, y)
            wx += u
            wy += v
        return wx, wy

    def jacobian(self, x: float, y: float) -> tuple[float, float, float, float]:
        jxx = jxy = jyx = jyy = 0.0
        for p in self.primitives:
            a, b, c, d = p.jacobian(x, y)
            jxx += a
            jxy += b
            jyx += c
            jyy += d
        return jxx, jxy, jyx, jyy

    def wind_and_jacobian(self, x: float, y: float):
        wx, wy = self.wind(x, y)
        jxx, jxy, jyx, jyy = self.jacobian(x, y)
        return wx, wy, jxx, jxy, jyx, jyy

    def wind_grid(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        wx = np.zeros(shape)
        wy = np.zeros(shape)
        for p in self.primitives:
            u, v = p.velocity_grid(x, y)
            wx = wx + u
            wy = wy + v
        return wx, wy

    def jacobian_grid(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        out = [np.zeros(shape) for _ in range(4)]
        for p in self.primitives:
            for acc, term in zip(out, p.jacobian_grid(x, y)):
                acc += term
        return tuple(out)

    def to_dicts(self):
        return [p.to_dict() for p in self.primitives]

    @staticmethod
    def from_dicts(docs) -> "WindField":
        return WindField([primitive_from_dict(d) for d in docs])


def eval_wind(field: WindField, x: float, y: float) -> tuple[float, float]:
    """Total wind velocity at one probe."""
    return field.wind(x, y)


def eval_wind_jacobian(field: WindField, x: float, y: float):
    """Analytic spatial partials (dWx/dx, dWx/dy, dWy/dx, dWy/dy)."""
    return field.jacobian(x, y)


def parameter_count(counts: tuple[int, int, int]) -> int:
    """Free parameters of a composite field: 2 + 4 Mv + 5 Md + 4 Ms."""
    mv, md, ms = counts
    return 2 + 4 * mv + 5 * md + 4 * ms


def divergence_scan(field: WindField, domain: Domain, grid_n: int) -> float:
    """Maximum |dWx/dx + dWy/dy| over a grid_n x grid_n grid, via the
    analytic Jacobian."""
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    if not field.primitives:
        return 0.0
    xg, yg = domain.grid(grid_n)
    jxx, _, _, jyy = field.jacobian_grid(xg, yg)
    return float(np.max(np.abs(jxx + jyy)))


def sample_random_field(seed: int, max_speed: float,
                        counts: tuple[int, int, int],
                        domain: Domain) -> WindField:
    """Seeded random composite field rescaled to a target sup-norm.

    Centers are uniform over the domain inflated 10% beyond each edge,
    strengths uniform symmetric, radii uniform in [5%, 20%] of the domain
    side. The whole field is rescaled so the sup-norm estimated on a 200x200
    grid equals max_speed.
    """
    if max_speed <= 0.0:
        raise ValueError("max_speed must be positive")
    mv, md, ms = counts
    rng = np.random.default_rng(seed)
    side = domain.side
    pad_x = 0.1 * (domain.x_max - domain.x_min)
    pad_y = 0.1 * (domain.y_max - domain.y_min)

    def center():
        return (
            rng.uniform(domain.x_min - pad_x, domain.x_max + pad_x),
            rng.uniform(domain.y_min - pad_y, domain.y_max + pad_y),
        )

    def radius():
        return rng.uniform(0.05, 0.20) * side

    prims = [Uniform(rng.uniform(-max_speed, max_speed),
                     rng.uniform(-max_speed, max_speed))]
    for _ in range(mv):
        cx, cy = center()
        r = radius()
        # Strength sized so the peak tangential speed is O(max_speed)
        gamma = rng.uniform(-1.0, 1.0) * max_speed * TWO_PI * r
        prims.append(Vortex(gamma, cx, cy, r))
    for _ in range(md):
        cx, cy = center()
        r = radius()
        mag = rng.uniform(0.0, 1.0) * max_speed * TWO_PI * r * r
        ang = rng.uniform(0.0, TWO_PI)
        prims.append(Dipole(mag * math.cos(ang), mag * math.sin(ang), cx, cy, r))
    for _ in range(ms):
        cx, cy = center()
        r = radius()
        q = rng.uniform(-1.0, 1.0) * max_speed * TWO_PI * r
        prims.append(SourceSink(q, cx, cy, r))

    field = WindField(prims)
    xg, yg = domain.grid(200)
    wx, wy = field.wind_grid(xg, yg)
    sup = float(np.max(np.hypot(wx, wy)))
    if sup == 0.0:
        # All strengths drew zero (measure-zero event); fall back to a pure
        # uniform stream of the right magnitude.
        return WindField([Uniform(max_speed, 0.0)])
    return field.scaled(max_speed / sup)


# -- least-squares calibration -------------------------------------------------


@dataclass
class WindFitResult:
    field: WindField
    rms_residual: float
    cost: float
    converged: bool
    n_starts: int
    message: str


def _pack(field: WindField) -> np.ndarray:
    vec = []
    uniform = [p for p in field.primitives if isinstance(p, Uniform)]
    u = sum(p.u for p in uniform)
    v = sum(p.v for p in uniform)
    vec.extend([u, v])
    for p in field.primitives:
        if isinstance(p, Vortex):
            vec.extend([p.circulation, p.xc, p.yc, p.radius])
    for p in field.primitives:
        if isinstance(p, Dipole):
            vec.extend([p.mx, p.my, p.xc, p.yc, p.radius])
    for p in field.primitives:
        if isinstance(p, SourceSink):
            vec.extend([p.strength, p.xc, p.yc, p.radius])
    return np.asarray(vec, dtype=float)


def _unpack(vec, counts) -> WindField:
    mv, md, ms = counts
    prims = [Uniform(vec[0], vec[1])]
    k = 2
    for _ in range(mv):
        prims.append(Vortex(vec[k], vec[k + 1], vec[k + 2], vec[k + 3]))
        k += 4
    for _ in range(md):
        prims.append(Dipole(vec[k], vec[k + 1], vec[k + 2], vec[k + 3], vec[k + 4]))
        k += 5
    for _ in range(ms):
        prims.append(SourceSink(vec[k], vec[k + 1], vec[k + 2], vec[k + 3]))
        k += 4
    return WindField(prims)


def fit_wind_field(samples, counts: tuple[int, int, int], seed: int = 0,
                   n_starts: int = 8, init_field: WindField | None = None,
                   max_nfev: int = 400) -> WindFitResult:
    """Nonlinear least squares calibration of a composite field to samples.

    Parameters
    ----------
    samples : array-like, shape (N, 4)
        Rows (x, y, Wx, Wy) in SI units.
    counts : (Mv, Md, Ms)
        Primitive composition of the fitted field.
    init_field : WindField, optional
        Skip the multi-start and refine from this field instead.

    Returns the best local optimum over the multi-start set; `converged` is
    False only when no start reached a least-squares termination criterion,
    in which case the best-so-far parameters are still returned.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ValueError("samples must be an (N, 4) array of (x, y, Wx, Wy)")
    n_params = parameter_count(counts)
    if pts.shape[0] < n_params:
        raise ValueError(
            f"need at least {n_params} samples for {n_params} parameters, "
            f"got {pts.shape[0]}"
        )
    x, y, wx, wy = pts.T
    mv, md, ms = counts
    span_x = max(x.max() - x.min(), 1.0)
    span_y = max(y.max() - y.min(), 1.0)
    side = max(span_x, span_y)
    speed = max(float(np.max(np.hypot(wx, wy))), 1e-9)
    r_floor = 1e-3 * side

    def residuals(vec):
        f = _unpack(vec, counts)
        fx, fy = f.wind_grid(x, y)
        return np.concatenate([fx - wx, fy - wy])

    # Bounds: radii positive, everything else free
    lo = np.full(n_params, -np.inf)
    hi = np.full(n_params, np.inf)
    k = 2
    for _ in range(mv):
        lo[k + 3] = r_floor
        k += 4
    for _ in range(md):
        lo[k + 4] = r_floor
        k += 5
    for _ in range(ms):
        lo[k + 3] = r_floor
        k += 4

    rng = np.random.default_rng(seed)

    def random_start():
        vec = [rng.normal(0.0, 0.3 * speed), rng.normal(0.0, 0.3 * speed)]
        for _ in range(mv):
            r = rng.uniform(0.05, 0.2) * side
            vec.extend([
                rng.uniform(-1, 1) * speed * TWO_PI * r,
                rng.uniform(x.min(), x.max()),
                rng.uniform(y.min(), y.max()),
                r,
            ])
        for _ in range(md):
            r = rng.uniform(0.05, 0.2) * side
            vec.extend([
                rng.uniform(-1, 1) * speed * TWO_PI * r * r,
                rng.uniform(-1, 1) * speed * TWO_PI * r * r,
                rng.uniform(x.min(), x.max()),
                rng.uniform(y.min(), y.max()),
                r,
            ])
        for _ in range(ms):
            r = rng.uniform(0.05, 0.2) * side
            vec.extend([
                rng.uniform(-1, 1) * speed * TWO_PI * r,
                rng.uniform(x.min(), x.max()),
                rng.uniform(y.min(), y.max()),
                r,
            ])
        return np.clip(np.asarray(vec, dtype=float), lo, hi)

    if init_field is not None:
        starts = [np.clip(_pack(init_field), lo, hi)]
    else:
        starts = [random_start() for _ in range(max(1, n_starts))]

    best = None
    any_converged = False
    for start in starts:
        res = least_squares(residuals, start, bounds=(lo, hi),
                            max_nfev=max_nfev)
        any_converged = any_converged or res.status > 0
        if best is None or res.cost < best.cost:
            best = res
    rms = math.sqrt(2.0 * best.cost / (2 * pts.shape[0]))
    return WindFitResult(
        field=_unpack(best.x, counts),
        rms_residual=rms,
        cost=float(best.cost),
        converged=any_converged,
        n_starts=len(starts),
        message="converged" if any_converged
        else "iteration cap reached on every start; best parameters returned",
    )
