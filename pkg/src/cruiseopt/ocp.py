"""Cruise trajectory optimizer: costate shooting over analytic wind fields.

The optimizer treats airspeed as a direct control under quasi-steady thrust
balance, which collapses the two-point boundary-value problem to six state
fields (x, y, m, z, lam_x, q = tan chi) and three shooting unknowns
(lam_x(0), chi(0), tf). The remaining costates are algebraic: lam_y = q lam_x,
lam_z = 1, and lam_m follows from constancy of the Hamiltonian, H = -c_t.
Closing conditions are x(tf) = xf, y(tf) = yf, lam_m(tf) = c_m.

Every solve first rotates the problem into a chord-aligned frame (goal on the
+x axis) so that cos chi > 0 holds along any plausible solution and q stays
small; all published outputs are rotated back. Wind primitives and ellipse
hazards are closed under rotation, so the internal problem is an ordinary
scenario and no solver code special-cases the frame.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .hazards import EllipseHazard, PenaltyField
from .numerics import solve_bracketed, solve_root_lm
from .performance import CruiseAero
from .scenario import HEADING_ABORT, Scenario
from .windfield import Dipole, SourceSink, Uniform, Vortex, WindField

# Arc labels recorded per trajectory node
ARC_INTERIOR = "interior"
ARC_V_MIN = "v_min"
ARC_V_MAX = "v_max"
ARC_PI_MIN = "Pi_min"
ARC_PI_MAX = "Pi_max"
ARC_CHI_MIN = "chi_min"
ARC_CHI_MAX = "chi_max"

# |q| beyond tan(89 deg) aborts integration: the chord-aligned frame keeps
# well-posed solutions far from the cos(chi) = 0 singularity.
Q_ABORT = math.tan(HEADING_ABORT)

# Scaled tolerance on the speed stationarity residual
SPEED_ROOT_TOL = 1e-10
# Release tolerance delta on the switching function |dH/dv| at a mixed arc
ARC_RELEASE_TOL = 1e-4
# Entry slack on the throttle bound check
PI_ENTRY_TOL = 1e-9
# Magnitude of the penalty residual returned for aborted integrations
BIG_RESIDUAL = 1e3

DEFAULT_DT_STEPS = 300


class SolverDiagnostic(RuntimeError):
    """Raised when the optimizer hits a labeled failure state.

    Carries a `snapshot` dict with the failure reason and the state at the
    failure point so callers can report without re-running.
    """

    def __init__(self, message: str, **snapshot):
        super().__init__(message)
        self.snapshot = dict(snapshot)


class AugmentedState(NamedTuple):
    """Six integrated fields: position, mass, accrued penalty, lam_x, tan chi."""

    x: float
    y: float
    m: float
    z: float
    lam_x: float
    q: float


class ShootingParams(NamedTuple):
    """Unknowns of the three-equation shooting system.

    chi0 is the initial heading in the frame the accompanying scenario uses;
    |chi0| < pi/2 and tf > 0 are required by the integration routines.
    """

    lam_x0: float
    chi0: float
    tf: float


class _IntegrationAbort(Exception):
    def __init__(self, reason: str, t: float, state):
        super().__init__(reason)
        self.reason = reason
        self.t = t
        self.state = tuple(state)


# -- chord-aligned frame -------------------------------------------------------


class _Frame(NamedTuple):
    """Rotation by theta about origin (x0, y0): internal = R^T (p - p0)."""

    x0: float
    y0: float
    cos_t: float
    sin_t: float

    @property
    def angle(self) -> float:
        return math.atan2(self.sin_t, self.cos_t)

    def to_internal(self, x, y):
        dx, dy = x - self.x0, y - self.y0
        return (self.cos_t * dx + self.sin_t * dy,
                -self.sin_t * dx + self.cos_t * dy)

    def to_original(self, x, y):
        return (self.x0 + self.cos_t * x - self.sin_t * y,
                self.y0 + self.sin_t * x + self.cos_t * y)

    def vector_to_internal(self, vx, vy):
        return (self.cos_t * vx + self.sin_t * vy,
                -self.sin_t * vx + self.cos_t * vy)

    def vector_to_original(self, vx, vy):
        return (self.cos_t * vx - self.sin_t * vy,
                self.sin_t * vx + self.cos_t * vy)


def _rotate_primitive(prim, frame: _Frame):
    if isinstance(prim, Uniform):
        u, v = frame.vector_to_internal(prim.u, prim.v)
        return Uniform(u, v)
    if isinstance(prim, Vortex):
        xc, yc = frame.to_internal(prim.xc, prim.yc)
        return Vortex(prim.circulation, xc, yc, prim.radius)
    if isinstance(prim, Dipole):
        xc, yc = frame.to_internal(prim.xc, prim.yc)
        mx, my = frame.vector_to_internal(prim.mx, prim.my)
        return Dipole(mx, my, xc, yc, prim.radius)
    if isinstance(prim, SourceSink):
        xc, yc = frame.to_internal(prim.xc, prim.yc)
        return SourceSink(prim.strength, xc, yc, prim.radius)
    raise TypeError(f"cannot rotate wind primitive {type(prim).__name__}")


def _rotate_hazard(hazard: EllipseHazard, frame: _Frame) -> EllipseHazard:
    xc, yc = frame.to_internal(*hazard.center)
    return replace(hazard, center=(xc, yc),
                   orientation=hazard.orientation - frame.angle)


def _chord_frame(scenario: Scenario) -> tuple[Scenario, _Frame]:
    """Rotate a scenario so the start sits at the origin and the goal on +x.

    Heading bounds are chord-relative by convention, so they carry over
    unchanged. Wind primitives and hazards are closed under rotation.
    """
    theta = scenario.chord_angle()
    frame = _Frame(scenario.start[0], scenario.start[1],
                   math.cos(theta), math.sin(theta))
    internal = replace(
        scenario,
        start=(0.0, 0.0),
        goal=(scenario.chord_length(), 0.0),
        wind=WindField(tuple(_rotate_primitive(p, frame)
                             for p in scenario.wind.primitives)),
        hazards=tuple(_rotate_hazard(h, frame) for h in scenario.hazards),
    )
    return internal, frame


# -- evaluation context --------------------------------------------------------


class SolveContext:
    """Altitude-bound evaluation cache for one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.aero = CruiseAero(scenario.aircraft, scenario.altitude)
        b = scenario.bounds
        self.v_min = b.mach_min * self.aero.sound_speed
        self.v_max = b.mach_max * self.aero.sound_speed
        self.pi_min = b.throttle_min
        self.pi_max = b.throttle_max
        self.q_min = math.tan(b.heading_min)
        self.q_max = math.tan(b.heading_max)
        self.penalty = PenaltyField(scenario.hazards)
        self.wind = scenario.wind
        self.c_t = scenario.weights.time_weight
        self.c_m = scenario.weights.final_mass_weight
        self.m_floor = scenario.initial_mass - scenario.aircraft.max_fuel


@lru_cache(maxsize=64)
def _context(scenario: Scenario) -> SolveContext:
    return SolveContext(scenario)


# -- optimal speed -------------------------------------------------------------


class _ControlEval(NamedTuple):
    v: float
    arc: str
    mixed_arc: Optional[str]
    lam_m: float
    fm: float           # dm/dt = -C_s D at the chosen speed
    f_res: float        # speed stationarity residual at the chosen speed


def _speed_fn(ctx: SolveContext, lam_x, q, m, g_pen, wx, wy):
    """Stationarity residual f(v) of the Hamiltonian in the speed direction.

    f(v) = lam_x sqrt(1+q^2) - (c_t + g + lam_x(Fx + q Fy)) (Cs'/Cs + D'/D);
    a zero of f is a speed at which dH/dv vanishes once lam_m is eliminated
    through H = -c_t.

    Each evaluation also banks (D, C_s, f) keyed by v so the caller can
    derive lam_m, dm/dt, and the throttle at the chosen speed without
    re-walking the drag polar.
    """
    srq = math.sqrt(1.0 + q * q)
    wproj = wx + q * wy
    ct_g = ctx.c_t + g_pen
    pieces = ctx.aero.stationarity_pieces
    cache: dict = {}

    def fval(v):
        d, _, cs, g = pieces(m, v)
        f = lam_x * srq - (ct_g + lam_x * (v * srq + wproj)) * g
        cache[v] = (d, cs, f)
        return f

    return fval, srq, wproj, cache


def _lam_m_at(ctx, lam_x, srq, wproj, m, g_pen, v):
    """lam_m and dm/dt from Hamiltonian constancy at a given speed."""
    d, _, _, cs = ctx.aero.fuel_flow_pieces(m, v)
    fm = -cs * d
    big_n = ctx.c_t + g_pen + lam_x * (v * srq + wproj)
    return -big_n / fm, fm


def _boundary_speed_root(ctx, m, pi_b, hint=None):
    """Speed on the Mach bracket where D(m, v)/T_max(v) = pi_b, or None.

    With several crossings (the drag bucket) the root nearest `hint` wins;
    without a hint the fastest crossing is returned.
    """
    aero = ctx.aero
    vlo, vhi = ctx.v_min, ctx.v_max

    def fb(v):
        return aero.throttle(m, v) - pi_b

    # A converged arc changes speed slowly: try a tight warm bracket first
    if hint is not None and vlo <= hint <= vhi:
        a = max(vlo, hint - 2.0)
        b = min(vhi, hint + 2.0)
        fa, fbv = fb(a), fb(b)
        if fa == 0.0:
            return a
        if fbv == 0.0:
            return b
        if fa * fbv < 0.0:
            return solve_bracketed(fb, a, b, fa, fbv, xtol=1e-12, x0=hint)

    n = 24
    vs = [vlo + (vhi - vlo) * i / n for i in range(n + 1)]
    fs = [fb(v) for v in vs]
    roots = []
    for i in range(n):
        if fs[i] == 0.0:
            roots.append(vs[i])
        elif fs[i] * fs[i + 1] < 0.0:
            roots.append(solve_bracketed(fb, vs[i], vs[i + 1],
                                         fs[i], fs[i + 1], xtol=1e-12))
    if fs[-1] == 0.0:
        roots.append(vs[-1])
    if not roots:
        return None
    if hint is None:
        return roots[-1]
    return min(roots, key=lambda r: abs(r - hint))


def _resolve_speed(ctx, lam_x, q, m, g_pen, wx, wy,
                   v_hint=None, mixed_arc=None,
                   t=0.0, state=None) -> _ControlEval:
    """Pick the speed control at one state: interior root, Mach bound,
    or mixed boundary arc, with the arc latch released on the switching
    function's sign condition."""
    if lam_x == 0.0:
        raise _IntegrationAbort("lam_x reached zero on an interior arc",
                                t, state or ())
    fval, srq, wproj, cache = _speed_fn(ctx, lam_x, q, m, g_pen, wx, wy)
    vlo, vhi = ctx.v_min, ctx.v_max
    f_lo, f_hi = fval(vlo), fval(vhi)
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)):
        raise _IntegrationAbort("non-finite speed stationarity residual",
                                t, state or ())
    fscale = max(abs(f_lo), abs(f_hi), abs(lam_x) * srq, 1e-300)

    def pieces_at(v):
        hit = cache.get(v)
        if hit is None:
            fval(v)
            hit = cache[v]
        return hit

    def finish(v, arc, latch):
        d, cs, f_res = pieces_at(v)
        fm = -cs * d
        big_n = ctx.c_t + g_pen + lam_x * (v * srq + wproj)
        return _ControlEval(v, arc, latch, -big_n / fm, fm, f_res)

    # Latched on a throttle arc: hold the boundary speed until dH/dv at the
    # arc speed stops pointing into the forbidden side (tolerance delta).
    if mixed_arc is not None:
        pi_b = ctx.pi_max if mixed_arc == ARC_PI_MAX else ctx.pi_min
        vb = _boundary_speed_root(ctx, m, pi_b, hint=v_hint)
        if vb is not None:
            f_b = fval(vb)
            hold = (f_b < -ARC_RELEASE_TOL * fscale
                    if mixed_arc == ARC_PI_MAX
                    else f_b > ARC_RELEASE_TOL * fscale)
            if hold:
                return finish(vb, mixed_arc, mixed_arc)
        # Released (or the arc root vanished): fall through to interior logic

    if f_lo <= 0.0 <= f_hi:
        x0 = v_hint if (v_hint is not None and vlo < v_hint < vhi) else None
        v = solve_bracketed(fval, vlo, vhi, f_lo, f_hi, xtol=1e-10,
                            ftol=SPEED_ROOT_TOL * fscale, x0=x0)
        arc = ARC_INTERIOR
    elif f_lo > 0.0 > f_hi:
        # f runs + to -: the bracket holds local Hamiltonian minima at both
        # bounds and possibly at interior - to + crossings of f. With lam_m
        # eliminated through H = -c_t, comparing H across candidates at the
        # self-consistent costate reduces to comparing the eliminated lam_m
        # itself (smaller lam_m <=> smaller Hamiltonian), hint-free.
        def lam_m_of(vc):
            d, cs, _ = pieces_at(vc)
            return (ctx.c_t + g_pen + lam_x * (vc * srq + wproj)) / (cs * d)

        candidates = {vlo: ARC_V_MIN, vhi: ARC_V_MAX}
        n = 24
        vs = [vlo + (vhi - vlo) * i / n for i in range(n + 1)]
        fs = [fval(vv) for vv in vs]
        for i in range(n):
            if fs[i] < 0.0 <= fs[i + 1]:
                root = solve_bracketed(fval, vs[i], vs[i + 1], fs[i], fs[i + 1],
                                       xtol=1e-10, ftol=SPEED_ROOT_TOL * fscale)
                candidates[root] = ARC_INTERIOR
        lam_by_v = {vc: lam_m_of(vc) for vc in candidates}
        best = min(lam_by_v.values())
        winners = [vc for vc, lm in lam_by_v.items() if lm == best]
        if len(winners) > 1:
            raise SolverDiagnostic(
                "speed stationarity is positive at v_min and negative at "
                "v_max with identical Hamiltonians at the tied minimizers",
                t=t, lam_x=lam_x, q=q, m=m, f_lo=f_lo, f_hi=f_hi,
                tied_speeds=tuple(winners))
        v = winners[0]
        arc = candidates[v]
    elif f_hi < 0.0:      # H decreasing across the whole bracket: fastest wins
        v, arc = vhi, ARC_V_MAX
    else:                 # f >= 0 throughout with f_lo > 0: slowest wins
        v, arc = vlo, ARC_V_MIN

    # Project onto the mixed constraint Pi_min <= D/T_max <= Pi_max
    pi_req = pieces_at(v)[0] / ctx.aero.thrust_max(v)
    if pi_req > ctx.pi_max + PI_ENTRY_TOL:
        vb = _boundary_speed_root(ctx, m, ctx.pi_max, hint=v)
        if vb is None:
            raise _IntegrationAbort(
                f"throttle bound Pi <= {ctx.pi_max} unattainable at mass {m:.1f}",
                t, state or ())
        return finish(vb, ARC_PI_MAX, ARC_PI_MAX)
    if pi_req < ctx.pi_min - PI_ENTRY_TOL:
        vb = _boundary_speed_root(ctx, m, ctx.pi_min, hint=v)
        if vb is None:
            raise _IntegrationAbort(
                f"throttle bound Pi >= {ctx.pi_min} unattainable at mass {m:.1f}",
                t, state or ())
        return finish(vb, ARC_PI_MIN, ARC_PI_MIN)
    return finish(v, arc, None)


def optimal_speed(lam_x: float, q: float, state,
                  scenario: Scenario) -> tuple[float, str]:
    """Speed minimizing the Hamiltonian at one state; returns (v, arc label).

    `state` is (x, y, m). The interior stationarity equation is solved by a
    safeguarded bracketed iteration to |f| <= 1e-10 in scaled units; when no
    interior root exists the candidate (Mach bound or interior stationary
    point) with the smaller Hamiltonian is returned with its arc label, and
    the throttle bounds are enforced by switching to the mixed boundary arc.
    """
    if lam_x == 0.0:
        raise ValueError("optimal_speed requires lam_x != 0")
    x, y, m = state
    ctx = _context(scenario)
    wx, wy = ctx.wind.wind(x, y)
    g_pen, _, _ = ctx.penalty.value_and_grad(x, y)
    try:
        ev = _resolve_speed(ctx, lam_x, q, m, g_pen, wx, wy, state=(x, y, m))
    except _IntegrationAbort as exc:
        raise SolverDiagnostic(str(exc), t=exc.t, state=exc.state) from exc
    return ev.v, ev.arc


def derived_costates(state: AugmentedState, v: float,
                     scenario: Scenario) -> tuple[float, float]:
    """Algebraic costates (lam_y, lam_m) at a state and chosen speed.

    lam_y = q lam_x; lam_m eliminates the Hamiltonian: with H = -c_t,
    lam_m = -(c_t + F_z + lam_x F_x + lam_x q F_y)/F_m, and F_m < 0 always.
    """
    ctx = _context(scenario)
    wx, wy = ctx.wind.wind(state.x, state.y)
    g_pen, _, _ = ctx.penalty.value_and_grad(state.x, state.y)
    srq = math.sqrt(1.0 + state.q * state.q)
    wproj = wx + state.q * wy
    lam_m, _ = _lam_m_at(ctx, state.lam_x, srq, wproj, state.m, g_pen, v)
    return state.q * state.lam_x, lam_m


def boundary_arc_speed(m: float, pi_b: float, scenario: Scenario,
                       v_hint: float | None = None) -> float:
    """Speed on a mixed boundary arc: root of D(m, v)/T_max(v) - pi_b."""
    ctx = _context(scenario)
    v = _boundary_speed_root(ctx, m, pi_b, hint=v_hint)
    if v is None:
        raise SolverDiagnostic(
            f"no speed in the Mach bracket [{ctx.v_min:.2f}, {ctx.v_max:.2f}] "
            f"m/s attains throttle Pi = {pi_b} at mass {m:.1f} kg",
            m=m, pi_b=pi_b)
    return v


def surrogate_rhs(state: AugmentedState, scenario: Scenario):
    """Time derivative of all six augmented fields at one state.

    The speed control is resolved first (interior stationarity or boundary
    arc), then the kinematics, fuel, penalty accrual, and the lam_x and q
    dynamics are evaluated with the wind Jacobian and penalty gradient.
    """
    ctx = _context(scenario)
    try:
        deriv, _ = _eval_rhs(ctx, tuple(state), _Carry(sign0=_sign(state.lam_x)))
    except _IntegrationAbort as exc:
        raise SolverDiagnostic(str(exc), t=exc.t, state=exc.state) from exc
    return deriv


# -- integration ---------------------------------------------------------------


def _sign(value: float) -> float:
    return -1.0 if value < 0.0 else 1.0


class _Carry:
    """Mutable per-integration scratch: warm starts and the mixed-arc latch."""

    __slots__ = ("sign0", "v_hint", "mixed_arc")

    def __init__(self, sign0=-1.0):
        self.sign0 = sign0
        self.v_hint = None
        self.mixed_arc = None


def _eval_rhs(ctx: SolveContext, state, carry: _Carry, t=0.0):
    x, y, m, z, lam_x, q = state
    if not all(map(math.isfinite, state)):
        raise _IntegrationAbort("non-finite state", t, state)
    if abs(q) > Q_ABORT:
        raise _IntegrationAbort("heading left the cos(chi) > 0 half-plane", t, state)
    if lam_x * carry.sign0 <= 0.0:
        raise _IntegrationAbort("lam_x sign change on an interior arc", t, state)
    if m <= ctx.m_floor:
        raise _IntegrationAbort("fuel capacity exhausted", t, state)

    wx, wy, jxx, jxy, jyx, jyy = ctx.wind.wind_and_jacobian(x, y)
    g_pen, gx, gy = ctx.penalty.value_and_grad(x, y)
    ev = _resolve_speed(ctx, lam_x, q, m, g_pen, wx, wy,
                        v_hint=carry.v_hint, mixed_arc=carry.mixed_arc,
                        t=t, state=state)
    carry.v_hint = ev.v
    carry.mixed_arc = ev.mixed_arc

    inv_srq = 1.0 / math.sqrt(1.0 + q * q)
    v = ev.v
    fx = v * inv_srq + wx
    fy = v * q * inv_srq + wy
    dlam = -gx - lam_x * (jxx + q * jyx)
    dq = (-jxy + (jxx - jyy) * q + jyx * q * q
          + (q * gx - gy) / lam_x)
    return (fx, fy, ev.fm, g_pen, dlam, dq), ev


class _Node(NamedTuple):
    t: float
    state: tuple
    ev: _ControlEval
    clamped: Optional[str]


def _integrate_nodes(ctx: SolveContext, lam_x0: float, q0: float, tf: float,
                     n_steps: int) -> list[_Node]:
    """Fixed-step RK3 in the chord frame, recording one node per step edge."""
    dt = tf / n_steps
    scen = ctx.scenario
    state = (scen.start[0], scen.start[1], scen.initial_mass, 0.0, lam_x0, q0)
    carry = _Carry(sign0=_sign(lam_x0))
    nodes: list[_Node] = []
    clamped: Optional[str] = None
    for i in range(n_steps):
        t = i * dt
        k1, ev = _eval_rhs(ctx, state, carry, t)
        nodes.append(_Node(t, state, ev, clamped))
        y2 = tuple(s + 0.5 * dt * k for s, k in zip(state, k1))
        k2, _ = _eval_rhs(ctx, y2, carry, t + 0.5 * dt)
        y3 = tuple(s - dt * a + 2.0 * dt * b for s, a, b in zip(state, k1, k2))
        k3, _ = _eval_rhs(ctx, y3, carry, t + dt)
        state = tuple(s + dt * (a + 4.0 * b + c) / 6.0
                      for s, a, b, c in zip(state, k1, k2, k3))
        # chi is clamped to the scenario bounds; the clamp labels the node
        clamped = None
        if state[5] < ctx.q_min:
            state = state[:5] + (ctx.q_min,)
            clamped = ARC_CHI_MIN
        elif state[5] > ctx.q_max:
            state = state[:5] + (ctx.q_max,)
            clamped = ARC_CHI_MAX
    _, ev = _eval_rhs(ctx, state, carry, tf)
    nodes.append(_Node(tf, state, ev, clamped))
    return nodes


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-node solution table in the scenario's own frame."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    m: np.ndarray
    z: np.ndarray
    v: np.ndarray
    chi: np.ndarray
    q: np.ndarray
    lam_x: np.ndarray
    lam_y: np.ndarray
    lam_m: np.ndarray
    hamiltonian: np.ndarray
    throttle: np.ndarray
    arc: tuple[str, ...]

    COLUMNS = ("t", "x", "y", "m", "z", "v", "chi", "q",
               "lam_x", "lam_y", "lam_m", "H", "Pi", "arc")

    @property
    def n_nodes(self) -> int:
        return self.t.size

    def column(self, name: str):
        key = {"H": "hamiltonian", "Pi": "throttle"}.get(name, name)
        return getattr(self, key)

    def rows(self):
        for i in range(self.n_nodes):
            yield (self.t[i], self.x[i], self.y[i], self.m[i], self.z[i],
                   self.v[i], self.chi[i], self.q[i], self.lam_x[i],
                   self.lam_y[i], self.lam_m[i], self.hamiltonian[i],
                   self.throttle[i], self.arc[i])

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in self.rows():
                fh.write(",".join(
                    v if isinstance(v, str) else f"{v:.12g}" for v in row
                ) + "\n")

    def downsample(self, max_nodes: int) -> "Trajectory":
        """Evenly thinned copy keeping both endpoints; at most max_nodes rows."""
        n = self.n_nodes
        if max_nodes < 2:
            raise ValueError("max_nodes must be >= 2")
        if n <= max_nodes:
            return self
        idx = np.unique(np.round(np.linspace(0, n - 1, max_nodes)).astype(int))
        return Trajectory(
            t=self.t[idx], x=self.x[idx], y=self.y[idx], m=self.m[idx],
            z=self.z[idx], v=self.v[idx], chi=self.chi[idx], q=self.q[idx],
            lam_x=self.lam_x[idx], lam_y=self.lam_y[idx],
            lam_m=self.lam_m[idx], hamiltonian=self.hamiltonian[idx],
            throttle=self.throttle[idx],
            arc=tuple(self.arc[i] for i in idx),
        )


def _wrap_angle(angle: float) -> float:
    return math.remainder(angle, math.tau)


def _build_trajectory(ctx: SolveContext, frame: _Frame,
                      nodes: list[_Node]) -> Trajectory:
    n = len(nodes)
    cols = {name: np.empty(n) for name in
            ("t", "x", "y", "m", "z", "v", "chi", "q", "lam_x", "lam_y",
             "lam_m", "hamiltonian")}
    arcs = []
    theta = frame.angle
    for i, node in enumerate(nodes):
        xi, yi, mi, zi, lam_xi, qi = node.state
        ev = node.ev
        xo, yo = frame.to_original(xi, yi)
        lam_yi = qi * lam_xi
        lam_xo, lam_yo = frame.vector_to_original(lam_xi, lam_yi)
        chi_o = _wrap_angle(math.atan(qi) + theta)
        srq = math.sqrt(1.0 + qi * qi)
        # Reassemble H from its pieces; the lam_m elimination makes it equal
        # -c_t up to rounding, recorded per node as an honest diagnostic
        wx, wy = ctx.wind.wind(xi, yi)
        g_pen, _, _ = ctx.penalty.value_and_grad(xi, yi)
        ham = (lam_xi * (ev.v * srq + wx + qi * wy)
               + ev.lam_m * ev.fm + g_pen)
        cols["t"][i] = node.t
        cols["x"][i] = xo
        cols["y"][i] = yo
        cols["m"][i] = mi
        cols["z"][i] = zi
        cols["v"][i] = ev.v
        cols["chi"][i] = chi_o
        cols["q"][i] = math.tan(chi_o) if abs(abs(chi_o) - 0.5 * math.pi) > 1e-12 else math.inf
        cols["lam_x"][i] = lam_xo
        cols["lam_y"][i] = lam_yo
        cols["lam_m"][i] = ev.lam_m
        cols["hamiltonian"][i] = ham
        arcs.append(node.clamped or ev.arc)
    throttle = _throttle_profile(ctx.aero, cols["t"], cols["v"], cols["m"])
    return Trajectory(
        t=cols["t"], x=cols["x"], y=cols["y"], m=cols["m"], z=cols["z"],
        v=cols["v"], chi=cols["chi"], q=cols["q"], lam_x=cols["lam_x"],
        lam_y=cols["lam_y"], lam_m=cols["lam_m"],
        hamiltonian=cols["hamiltonian"], throttle=throttle, arc=tuple(arcs),
    )


def _throttle_profile(aero: CruiseAero, t, v, m) -> np.ndarray:
    """Pi = (m dv/dt + D)/T_max with central-difference dv/dt (one-sided ends)."""
    n = t.size
    dv = np.empty(n)
    if n >= 3:
        dv[1:-1] = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
        dv[0] = (v[1] - v[0]) / (t[1] - t[0])
        dv[-1] = (v[-1] - v[-2]) / (t[-1] - t[-2])
    elif n == 2:
        dv[:] = (v[1] - v[0]) / (t[1] - t[0])
    else:
        dv[:] = 0.0
    pi = np.empty(n)
    for i in range(n):
        pi[i] = (m[i] * dv[i] + aero.drag(m[i], v[i])) / aero.thrust_max(v[i])
    return pi


def reconstruct_throttle(trajectory: Trajectory, scenario: Scenario) -> np.ndarray:
    """Per-node throttle from the quasi-steady force balance along a table."""
    if trajectory.n_nodes < 3:
        raise ValueError("throttle reconstruction needs at least 3 nodes")
    ctx = _context(scenario)
    return _throttle_profile(ctx.aero, trajectory.t, trajectory.v, trajectory.m)


def throttle_violations(pi: np.ndarray, scenario: Scenario,
                        tol: float = 1e-3) -> list[int]:
    """Node indices where the reconstructed throttle breaks its bounds."""
    b = scenario.bounds
    return [int(i) for i in np.nonzero(
        (pi < b.throttle_min - tol) | (pi > b.throttle_max + tol))[0]]


def _internal_params(p: ShootingParams, frame: _Frame) -> tuple[float, float, float]:
    """Map scenario-frame shooting parameters into the chord frame."""
    chi_i = p.chi0 - frame.angle
    cos_orig = math.cos(p.chi0)
    if abs(cos_orig) < 1e-12:
        raise ValueError("chi0 must satisfy |chi0| < pi/2 in the scenario frame")
    lam_x_i = p.lam_x0 * math.cos(chi_i) / cos_orig
    return lam_x_i, chi_i, p.tf


def integrate_trajectory(p: ShootingParams, scenario: Scenario,
                         dt: float = None) -> Trajectory:
    """RK3 rollout of the augmented system from given shooting parameters.

    `p` is interpreted in the scenario's own frame; the integration runs in
    the chord-aligned frame and the returned table is rotated back. `dt` is
    the approximate step (the exact step divides tf evenly); default tf/300.
    """
    if not (p.tf > 0.0 and math.isfinite(p.tf)):
        raise ValueError("tf must be positive and finite")
    internal, frame = _chord_frame(scenario)
    ctx = _context(internal)
    lam_x_i, chi_i, tf = _internal_params(p, frame)
    if abs(chi_i) >= HEADING_ABORT:
        raise ValueError("initial heading is >= 89 deg away from the chord")
    if dt is None:
        n_steps = DEFAULT_DT_STEPS
    else:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        n_steps = max(1, round(tf / dt))
    try:
        nodes = _integrate_nodes(ctx, lam_x_i, math.tan(chi_i), tf, n_steps)
    except _IntegrationAbort as exc:
        raise SolverDiagnostic(
            f"integration aborted at t = {exc.t:.1f} s: {exc.reason}",
            reason=exc.reason, t=exc.t, state=exc.state) from exc
    return _build_trajectory(ctx, frame, nodes)


# -- shooting ------------------------------------------------------------------


def _residual_scales(ctx: SolveContext) -> tuple[float, float]:
    chord = ctx.scenario.chord_length()
    lam_scale = max(abs(ctx.c_m), abs(ctx.c_t), 1e-6)
    return chord, lam_scale


def _shoot_internal(ctx: SolveContext, lam_x0, chi0, tf, n_steps,
                    abort_log=None) -> np.ndarray:
    """Scaled residual triple; integration failures map to a sloped penalty
    residual so the outer solver can walk back to feasibility."""
    chord, lam_scale = _residual_scales(ctx)
    guard = 0.0
    if not (tf > 1.0):
        guard += 1.0 + abs(tf - 1.0) / 100.0
    if not (abs(chi0) < HEADING_ABORT):
        guard += abs(chi0) - HEADING_ABORT + 1.0
    if not (lam_x0 < 0.0):
        guard += 1.0 + lam_x0
    if guard > 0.0:
        return np.full(3, BIG_RESIDUAL * (1.0 + guard))
    try:
        nodes = _integrate_nodes(ctx, lam_x0, math.tan(chi0), tf, n_steps)
    except _IntegrationAbort as exc:
        if abort_log is not None:
            abort_log.append(exc.reason)
        # Earlier aborts look worse; the slope steers the solver back
        return np.full(3, BIG_RESIDUAL * (2.0 - exc.t / tf))
    last = nodes[-1]
    xf, yf = ctx.scenario.goal
    return np.array([
        (last.state[0] - xf) / chord,
        (last.state[1] - yf) / chord,
        (last.ev.lam_m - ctx.c_m) / lam_scale,
    ])


def shoot_residual(p: ShootingParams, scenario: Scenario,
                   dt: float = None) -> np.ndarray:
    """Scaled closing residuals (x(tf)-xf, y(tf)-yf, lam_m(tf)-c_m)."""
    internal, frame = _chord_frame(scenario)
    ctx = _context(internal)
    lam_x_i, chi_i, tf = _internal_params(p, frame)
    n_steps = DEFAULT_DT_STEPS if dt is None else max(1, round(tf / dt))
    return _shoot_internal(ctx, lam_x_i, chi_i, tf, n_steps)


@dataclass(frozen=True)
class SolveConfig:
    """Solver knobs; the defaults reproduce the reference setup."""

    dt_steps: int = DEFAULT_DT_STEPS
    max_iterations: int = 200
    tolerance: float = 1e-6
    time_cap: Optional[float] = None          # wall seconds, cooperative
    initial_params: Optional[ShootingParams] = None   # scenario frame

    def __post_init__(self):
        if self.dt_steps < 1:
            raise ValueError("dt_steps must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(eq=False)
class Solution:
    """Solve outcome: trajectory, objective, convergence diagnostics."""

    scenario: Scenario
    config: SolveConfig
    params: ShootingParams              # scenario frame
    params_internal: ShootingParams     # chord frame
    trajectory: Trajectory
    objective: float
    final_time: float
    final_mass: float
    fuel_burned: float
    penalty_accrued: float
    converged: bool
    iterations: int
    residual_norm: float
    residuals: np.ndarray
    residual_history: list = field(default_factory=list)
    param_trace: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    hamiltonian_defect: float = 0.0
    deadline_hit: bool = False
    elapsed_s: float = 0.0

    def summary(self) -> dict:
        return {
            "objective": self.objective,
            "final_time_s": self.final_time,
            "fuel_burned_kg": self.fuel_burned,
            "penalty_accrued": self.penalty_accrued,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "hamiltonian_defect": self.hamiltonian_defect,
            "diagnostics": list(self.diagnostics),
        }


def _initial_guess(ctx: SolveContext) -> np.ndarray:
    """Chord-frame start: straight-line heading, 95% of v_max ground speed,
    lam_x from the stationarity scale of the min-time Hamiltonian."""
    chord = ctx.scenario.chord_length()
    tf0 = chord / (0.95 * ctx.v_max)
    lam_x0 = -ctx.c_t / ctx.v_max - 1e-3
    return np.array([lam_x0, 0.0, tf0])


# Restart ladder for a failed default start. Hazards sitting on the chord
# can wall off the straight-line basin; bent starts enter the detour basins
# directly. Detour extremals also sit at a costate magnitude a few times
# c_t/v_max (the heading dynamics divide by lam_x, so a too-shallow start
# swings the heading into an abort); 3.5x is reliable across the builtin
# hazard layouts. Distinct restarts can converge to distinct extremals, so
# the ladder runs in full and the smallest objective wins.
_RETRY_OFFSETS = (0.25, -0.25, 0.5, -0.5, 0.75, -0.75)
_RETRY_COSTATE_FACTOR = 3.5
_RETRY_ITER_CAP = 25


def _run_attempt(ctx: SolveContext, cfg: SolveConfig, p0, deadline):
    """One damped least-squares shot from p0.

    Returns (root_result, nodes, abort_exc, abort_log); nodes is None when
    the final iterate fails to integrate, with the abort in abort_exc.
    """
    abort_log: list[str] = []

    def residual(params):
        lam_x0, chi0, tf = params
        return _shoot_internal(ctx, lam_x0, chi0, tf, cfg.dt_steps, abort_log)

    result = solve_root_lm(
        residual, p0,
        scales=lambda p: np.array([abs(p[0]) + 1e-3, 1.0, abs(p[2])]),
        tol=cfg.tolerance, max_iter=cfg.max_iterations, deadline=deadline,
    )
    lam_x_i, chi_i, tf = result.params
    try:
        nodes = _integrate_nodes(ctx, lam_x_i, math.tan(chi_i), tf, cfg.dt_steps)
    except _IntegrationAbort as exc:
        return result, None, exc, abort_log
    return result, nodes, None, abort_log


def solve(scenario: Scenario, config: SolveConfig | None = None) -> Solution:
    """Solve the three-parameter shooting problem for one scenario.

    Drives the scaled closing residuals below `config.tolerance` with a
    damped least-squares iteration (forward-difference Jacobian, parameter
    scales (|lam_x0|+1e-3, 1 rad, tf)). When the default straight-chord start
    stalls, deterministic bent-heading restarts follow and the converged
    result with the smallest objective wins; a caller-supplied initial_params
    pins the start and disables them. Non-convergence is
    reported in the returned Solution rather than raised: the caller gets the
    best iterate, the residual history, and the parameter trace.
    """
    cfg = config or SolveConfig()
    start_clock = time.perf_counter()
    internal, frame = _chord_frame(scenario)
    ctx = _context(internal)
    deadline = (time.monotonic() + cfg.time_cap) if cfg.time_cap else None

    pinned_start = cfg.initial_params is not None
    if pinned_start:
        p0 = np.array(_internal_params(cfg.initial_params, frame))
    else:
        p0 = _initial_guess(ctx)

    attempts = [(_run_attempt(ctx, cfg, p0, deadline), None)]
    first = attempts[0][0][0]
    if not first.converged and not pinned_start and not first.deadline_hit:
        tf0 = _initial_guess(ctx)[2]
        retry_cfg = replace(
            cfg, max_iterations=min(_RETRY_ITER_CAP, cfg.max_iterations))
        for delta in _RETRY_OFFSETS:
            if deadline is not None and time.monotonic() > deadline:
                break
            lam_x0 = (_RETRY_COSTATE_FACTOR
                      * -ctx.c_t * math.cos(delta) / ctx.v_max - 1e-3)
            p_retry = np.array([lam_x0, delta, tf0])
            note = f"restart at chord-frame heading offset {delta:+.2f} rad"
            attempts.append((_run_attempt(ctx, retry_cfg, p_retry, deadline),
                             note))

    def attempt_objective(a):
        result, nodes = a[0][0], a[0][1]
        last = nodes[-1]
        return ctx.c_t * result.params[2] + ctx.c_m * last.state[2] \
            + last.state[3]

    converged = [a for a in attempts
                 if a[0][0].converged and a[0][1] is not None]
    if converged:
        chosen = min(converged, key=attempt_objective)
    else:
        integrable = [a for a in attempts if a[0][1] is not None]
        if not integrable:
            result, _, abort, _ = attempts[0][0]
            raise SolverDiagnostic(
                f"final iterate does not integrate: {abort.reason}",
                reason=abort.reason, t=abort.t, state=abort.state,
                params=tuple(result.params), residual_norm=result.norm)
        chosen = min(integrable, key=lambda a: a[0][0].norm)
    (result, nodes, _, abort_log), restart_note = chosen

    lam_x_i, chi_i, tf = result.params
    trajectory = _build_trajectory(ctx, frame, nodes)

    last = nodes[-1]
    m_f = last.state[2]
    z_f = last.state[3]
    objective = ctx.c_t * tf + ctx.c_m * m_f + z_f

    diagnostics = list(dict.fromkeys(abort_log))
    if restart_note is not None:
        diagnostics.append(
            f"default start stalled; {restart_note} "
            + ("converged" if result.converged else "kept as best iterate"))
    elif len(attempts) > 1:
        diagnostics.append(
            f"{len(attempts) - 1} heading restart(s) tried without convergence")
    if not result.converged:
        diagnostics.append(f"solver: {result.message}")
    if result.deadline_hit:
        diagnostics.append("time cap reached before convergence")
    viol = throttle_violations(trajectory.throttle, scenario)
    if viol:
        diagnostics.append(
            f"reconstructed throttle outside bounds at {len(viol)} node(s)")
    jumps = _lam_m_jumps(trajectory)
    if jumps:
        diagnostics.append(
            f"lam_m discontinuity at arc switch near node(s) {jumps[:5]}")

    ham_defect = float(np.max(np.abs(trajectory.hamiltonian + ctx.c_t)))
    chi0_orig = _wrap_angle(chi_i + frame.angle)
    lam_vec = frame.vector_to_original(lam_x_i, math.tan(chi_i) * lam_x_i)
    params_orig = ShootingParams(lam_vec[0], chi0_orig, tf)

    return Solution(
        scenario=scenario,
        config=cfg,
        params=params_orig,
        params_internal=ShootingParams(lam_x_i, chi_i, tf),
        trajectory=trajectory,
        objective=float(objective),
        final_time=float(tf),
        final_mass=float(m_f),
        fuel_burned=float(scenario.initial_mass - m_f),
        penalty_accrued=float(z_f),
        converged=result.converged,
        iterations=result.iterations,
        residual_norm=result.norm,
        residuals=result.residual,
        residual_history=result.history,
        param_trace=[list(p) for p in result.param_trace],
        diagnostics=diagnostics,
        hamiltonian_defect=ham_defect,
        deadline_hit=result.deadline_hit,
        elapsed_s=time.perf_counter() - start_clock,
    )


def _lam_m_jumps(trajectory: Trajectory, rel_tol: float = 1e-3) -> list[int]:
    """Nodes where lam_m jumps across an arc switch (monitored, not corrected)."""
    lam = trajectory.lam_m
    scale = float(np.max(np.abs(lam))) + 1e-12
    out = []
    for i in range(trajectory.n_nodes - 1):
        if trajectory.arc[i] != trajectory.arc[i + 1]:
            if abs(lam[i + 1] - lam[i]) > rel_tol * scale:
                out.append(i + 1)
    return out


# -- analytic oracles ----------------------------------------------------------


def analytic_min_time_constant_wind(xf: float, yf: float, wx: float, wy: float,
                                    v_max: float) -> tuple[float, float]:
    """Closed-form min-time heading and final time under a constant wind.

    chi0 = -arctan(xf/yf) + arccos((xf wy - yf wx)/(v_max sqrt(xf^2+yf^2))),
    tf = xf/(v_max cos chi0 + wx). Requires xf > 0 and wind weaker than
    v_max; a cross-wind component too strong for the geometry raises.
    """
    if xf <= 0.0:
        raise ValueError("analytic form requires xf > 0")
    if math.hypot(wx, wy) >= v_max:
        raise ValueError("wind speed must stay below v_max")
    r = math.hypot(xf, yf)
    arg = (xf * wy - yf * wx) / (v_max * r)
    if not -1.0 <= arg <= 1.0:
        raise ValueError("wind too strong relative to geometry")
    chi0 = -math.atan2(xf, yf) + math.acos(arg)
    tf = xf / (v_max * math.cos(chi0) + wx)
    return chi0, tf


@dataclass(frozen=True, eq=False)
class TurnpikeScan:
    """Speed-recovery rates lambda = dF_v/dv(v*) over a (Pi*, m) grid."""

    pi_values: np.ndarray
    m_values: np.ndarray
    rate: np.ndarray          # (len(pi), len(m)); NaN where no root exists
    v_star: np.ndarray
    valid: np.ndarray

    @property
    def rate_min(self) -> float:
        return float(np.min(self.rate[self.valid]))

    @property
    def rate_max(self) -> float:
        return float(np.max(self.rate[self.valid]))

    @property
    def excluded(self) -> int:
        return int(np.size(self.valid) - np.count_nonzero(self.valid))

    def all_negative(self) -> bool:
        return bool(np.all(self.rate[self.valid] < 0.0))


def turnpike_scan(pi_values, m_values, scenario: Scenario) -> TurnpikeScan:
    """Evaluate the speed-dynamics contraction rate over a throttle/mass grid.

    For each cell the cruise equilibrium v* is the fastest root of
    Pi* T_max(v) = D(m, v) in the Mach bracket and
    lambda = (Pi* T_max'(v*) - dD/dv(v*))/m. Cells with no root are flagged
    and excluded.
    """
    ctx = _context(scenario)
    aero = ctx.aero
    pi_values = np.asarray(pi_values, dtype=float)
    m_values = np.asarray(m_values, dtype=float)
    rate = np.full((pi_values.size, m_values.size), np.nan)
    v_star = np.full_like(rate, np.nan)
    valid = np.zeros(rate.shape, dtype=bool)
    n_scan = 48
    vs = np.linspace(ctx.v_min, ctx.v_max, n_scan + 1)
    for a, pi_b in enumerate(pi_values):
        for b, m in enumerate(m_values):
            def excess(v):
                return pi_b * aero.thrust_max(v) - aero.drag(m, v)

            fs = [excess(v) for v in vs]
            root = None
            for i in range(n_scan - 1, -1, -1):   # fastest root wins
                if fs[i] == 0.0:
                    root = vs[i]
                    break
                if fs[i] * fs[i + 1] < 0.0:
                    root = solve_bracketed(excess, vs[i], vs[i + 1],
                                           fs[i], fs[i + 1], xtol=1e-12)
                    break
            if fs[-1] == 0.0:
                root = vs[-1]
            if root is None:
                continue
            _, dt_dv = aero.thrust_max_deriv(root)
            _, dd_dv, _ = aero.drag_derivs(m, root)
            rate[a, b] = (pi_b * dt_dv - dd_dv) / m
            v_star[a, b] = root
            valid[a, b] = True
    return TurnpikeScan(pi_values=pi_values, m_values=m_values, rate=rate,
                        v_star=v_star, valid=valid)
