"""Small numerical kernels shared across the package.

Fixed-step third-order Runge-Kutta, a safeguarded scalar root solver, a damped
Levenberg-Marquardt root solver for few-parameter shooting systems, and a
cubic cumulative quadrature used by verification oracles. The hot ODE loops in
the optimizer hand-roll their own RK3 update for speed; the generic driver
here serves the cheaper verification and scan paths.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np


def rk3_step(f, t, y, dt):
    """One step of the explicit third-order Runge-Kutta (Kutta) scheme.

    y' = f(t, y) with y a sequence of floats; returns a list.
    """
    k1 = f(t, y)
    y2 = [yi + 0.5 * dt * k for yi, k in zip(y, k1)]
    k2 = f(t + 0.5 * dt, y2)
    y3 = [yi - dt * a + 2.0 * dt * b for yi, a, b in zip(y, k1, k2)]
    k3 = f(t + dt, y3)
    return [
        yi + dt * (a + 4.0 * b + c) / 6.0
        for yi, a, b, c in zip(y, k1, k2, k3)
    ]


def rk3_integrate(f, t0, y0, t1, steps):
    """Integrate y' = f(t, y) from t0 to t1 with a fixed number of RK3 steps.

    Returns (times, states) with states[k] the state at times[k].
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = (t1 - t0) / steps
    times = [t0]
    states = [list(y0)]
    y = list(y0)
    t = t0
    for _ in range(steps):
        y = rk3_step(f, t, y, dt)
        t += dt
        times.append(t)
        states.append(y)
    return times, states


def solve_bracketed(f, lo, hi, flo=None, fhi=None, xtol=1e-12, ftol=0.0,
                    max_iter=80, x0=None):
    """Root of f on [lo, hi] by safeguarded secant with bisection fallback.

    The bracket must have opposite signs at its ends. `x0` warm-starts the
    first secant point. Tolerances: stop when the bracket shrinks below
    xtol * (1 + |x|) or |f| <= ftol.
    """
    a, b = lo, hi
    fa = f(a) if flo is None else flo
    fb = f(b) if fhi is None else fhi
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ValueError("root bracket does not change sign")
    # Current iterate and previous iterate for the secant model
    if x0 is not None and a < x0 < b:
        x_prev, f_prev = a, fa
        x, fx = x0, f(x0)
    else:
        x_prev, f_prev = a, fa
        x, fx = b, fb
    for _ in range(max_iter):
        if fx == 0.0 or abs(fx) <= ftol:
            return x
        # Maintain the bracket
        if fa * fx < 0.0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        if (b - a) <= xtol * (1.0 + abs(a) + abs(b)):
            return 0.5 * (a + b)
        # Secant proposal, safeguarded to the open bracket interior
        denom = fx - f_prev
        if denom != 0.0:
            cand = x - fx * (x - x_prev) / denom
        else:
            cand = math.nan
        if not (a < cand < b):
            cand = 0.5 * (a + b)
        x_prev, f_prev = x, fx
        x, fx = cand, f(cand)
    return 0.5 * (a + b)


@dataclass
class RootResult:
    """Outcome of the damped least-squares root solve."""

    params: np.ndarray
    residual: np.ndarray
    norm: float
    iterations: int
    converged: bool
    message: str
    history: list = field(default_factory=list)
    param_trace: list = field(default_factory=list)
    deadline_hit: bool = False


def solve_root_lm(residual_fn, p0, scales=None, tol=1e-6, max_iter=200,
                  rel_step=1e-6, deadline=None):
    """Damped Newton (Levenberg-Marquardt) root solve of residual_fn(p) = 0.

    Parameters
    ----------
    residual_fn : callable
        Maps a parameter array (n,) to a residual array (n,) in scaled units.
    p0 : sequence of float
        Initial parameters.
    scales : sequence of float or callable, optional
        Per-parameter scales used for the forward-difference Jacobian steps
        (h_i = rel_step * scale_i). A callable receives the current parameter
        array. Defaults to 1 + |p|.
    tol : float
        Convergence threshold on the euclidean residual norm.
    deadline : float, optional
        time.monotonic() value after which the solve stops with
        deadline_hit = True and the best iterate so far.

    The damping parameter shrinks toward Newton steps on accepted iterations
    and grows on rejected ones, so the loop is quadratic near the solution
    and globally monotone in the residual norm.
    """
    p = np.asarray(p0, dtype=float).copy()
    n = p.size
    r = np.asarray(residual_fn(p), dtype=float)
    norm = float(np.linalg.norm(r))
    history = [norm]
    trace = [p.copy()]
    mu = 1e-3
    message = "iteration cap reached"
    converged = False
    deadline_hit = False
    it = 0
    for it in range(1, max_iter + 1):
        if norm < tol:
            converged = True
            message = "converged"
            break
        if deadline is not None and time.monotonic() > deadline:
            deadline_hit = True
            message = "time cap reached"
            break
        sc = np.asarray(scales(p) if callable(scales) else
                        (scales if scales is not None else 1.0 + np.abs(p)),
                        dtype=float)
        # Forward-difference Jacobian, one extra residual call per parameter
        jac = np.empty((n, n))
        for i in range(n):
            h = rel_step * sc[i]
            pp = p.copy()
            pp[i] += h
            jac[:, i] = (np.asarray(residual_fn(pp), dtype=float) - r) / h
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0.0] = 1.0
        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(jtj + mu * np.diag(diag), -jtr)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            cand = p + step
            r_cand = np.asarray(residual_fn(cand), dtype=float)
            norm_cand = float(np.linalg.norm(r_cand))
            if math.isfinite(norm_cand) and norm_cand < norm:
                p, r, norm = cand, r_cand, norm_cand
                mu = max(mu / 3.0, 1e-14)
                accepted = True
                break
            mu *= 10.0
            if mu > 1e12:
                break
        history.append(norm)
        trace.append(p.copy())
        if not accepted:
            message = "stalled: no descent step found"
            break
        # Hopeless-pace cut: extrapolate the last 30 iterations' contraction
        # rate with a 1e3 allowance for a superlinear endgame; a run that
        # cannot reach tol within the cap under that projection is a dead
        # basin, not slow convergence.
        if it >= 30:
            rate = (norm / history[-31]) ** (1.0 / 30.0)
            if norm * rate ** (max_iter - it) > 1e3 * tol:
                message = "stalled: contraction too slow for the iteration cap"
                break
    if norm < tol:
        converged = True
        message = "converged"
    return RootResult(
        params=p,
        residual=r,
        norm=norm,
        iterations=it,
        converged=converged,
        message=message,
        history=history,
        param_trace=trace,
        deadline_hit=deadline_hit,
    )


def cumulative_integral_cubic(t, f):
    """Cumulative integral of samples f(t) on a uniform grid, O(dt^4) accurate.

    Interior intervals use the 4-point interpolatory rule
    dt/24 * (-f0 + 13 f1 + 13 f2 - f3); end intervals use the matching
    one-sided rule. Needs at least 4 samples.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    n = t.size
    if n < 4:
        raise ValueError("need at least 4 samples")
    dt = t[1] - t[0]
    out = np.empty(n)
    out[0] = 0.0
    # First interval: one-sided cubic
    out[1] = out[0] + dt * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
    for k in range(1, n - 2):
        out[k + 1] = out[k] + dt * (
            -f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]
        ) / 24.0
    # Last interval: mirrored one-sided cubic
    out[n - 1] = out[n - 2] + dt * (
        9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]
    ) / 24.0
    return out
