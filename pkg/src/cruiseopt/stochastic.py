"""Monte Carlo study of cruise-time sensitivity to wind variability.

A fleet planner wants to know how badly a constant-wind forecast misleads
the flight-time estimate when the true field has spatial structure. Each
trial samples a random analytic wind field, normalizes its peak speed to a
prescribed fraction of the cruise airspeed, and solves the reduced minimum
time problem three ways: against the sampled field, against the domain
average of that field, and against an average taken over a diagonal band
around the route. The band width comes from a circular-arc detour bound:
the worst admissible trajectory for a given fast-to-slow ground speed ratio
is a circular arc, and the sagitta of that arc caps how far the optimum can
wander from the straight chord.

Times are reported as ratios t_random / t_constant, so a value of 1 means
the constant-wind forecast was exact. Ratio populations are summarized with
a Freedman-Diaconis histogram and a Gaussian kernel density estimate using
Silverman's bandwidth rule.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .numerics import rk3_integrate, solve_root_lm, solve_bracketed
from .ocp import SolverDiagnostic
from .windfield import Domain, Uniform, WindField, sample_random_field

__all__ = [
    "StudyConfig",
    "BandGeometry",
    "ReducedSolution",
    "TrialRecord",
    "ExcludedTrial",
    "RatioDistribution",
    "ControlCheck",
    "StudyResult",
    "effective_ratio",
    "solve_bandwidth",
    "band_average",
    "solve_min_time_reduced",
    "run_study",
    "SAMPLE_COLUMNS",
]

# Ratio deviations beyond this fraction count as forecast-tail mass.
DEVIATION_TAIL = 0.04

# A circular arc exists only while chord/arc-length ratios stay below pi/2;
# at the limit the arc closes into a half circle.
ARC_RATIO_LIMIT = math.pi / 2.0

SAMPLE_COLUMNS = (
    "trial",
    "t_random_s",
    "t_average_s",
    "t_band_s",
    "ratio_average",
    "ratio_band",
    "wind_domain_mps",
    "wind_band_mps",
)


@dataclass(frozen=True)
class StudyConfig:
    """Inputs of one Monte Carlo wind-variability study.

    wind_index is the ratio of the peak sampled wind speed to the cruise
    airspeed; every trial is rescaled to hit it exactly. It must stay below
    one or the reduced kinematics can lose controllability.
    """

    trials: int
    seed: int
    wind_index: float
    side: float = 1.0e6
    v0: float = 240.0
    grid_points: int = 200
    histogram_bins: Optional[int] = None
    integration_steps: int = 300
    vortices: int = 3
    dipoles: int = 1
    source_sinks: int = 2

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.wind_index < 1.0:
            raise ValueError("wind_index must lie in [0, 1): the peak wind "
                             "may not reach the cruise airspeed")
        if self.side <= 0.0:
            raise ValueError("side must be positive")
        if self.v0 <= 0.0:
            raise ValueError("v0 must be positive")
        if self.grid_points < 8:
            raise ValueError("grid_points must be >= 8")
        if self.histogram_bins is not None and self.histogram_bins < 1:
            raise ValueError("histogram_bins must be >= 1 when given")
        if self.integration_steps < 10:
            raise ValueError("integration_steps must be >= 10")
        counts = (self.vortices, self.dipoles, self.source_sinks)
        if any(c < 0 for c in counts):
            raise ValueError("primitive counts must be >= 0")
        if sum(counts) < 1:
            raise ValueError("at least one primitive per trial is required")


@dataclass(frozen=True)
class BandGeometry:
    """Diagonal averaging band derived from the circular-arc detour bound.

    theta is the arc's opening angle, half_width the sagitta of the arc
    over the route chord, band_width twice that, and mask_width the width
    measured along |y - x| for a diagonal route at 45 degrees.
    """

    ratio: float
    theta: float
    half_width: float
    band_width: float
    mask_width: float

    def __post_init__(self):
        if self.ratio < 1.0:
            raise ValueError("ratio must be >= 1")
        if not 0.0 <= self.theta < math.pi:
            raise ValueError("theta must lie in [0, pi)")
        if self.half_width < 0.0:
            raise ValueError("half_width must be >= 0")
        if not math.isclose(self.band_width, 2.0 * self.half_width,
                            rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("band_width must equal 2 * half_width")
        expect = self.band_width / math.cos(math.pi / 4.0)
        if not math.isclose(self.mask_width, expect,
                            rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("mask_width must equal band_width / cos(pi/4)")


@dataclass(frozen=True)
class ReducedSolution:
    """Converged reduced minimum-time solve at fixed airspeed."""

    final_time: float
    q0: float
    times: tuple
    heading: tuple
    residual_norm: float
    iterations: int


@dataclass(frozen=True)
class TrialRecord:
    """One surviving Monte Carlo trial with its three solve times."""

    index: int
    t_random: float
    t_average: float
    t_band: float
    ratio_average: float
    ratio_band: float
    wind_domain_mag: float
    wind_domain_vec: tuple
    wind_band_vec: tuple
    speed_ratio: float
    theta: float
    mask_width: float


@dataclass(frozen=True)
class ExcludedTrial:
    """Trial dropped from the aggregate, with the failure reason."""

    index: int
    reason: str


@dataclass(frozen=True)
class RatioDistribution:
    """Histogram and kernel density summary of a time-ratio population."""

    label: str
    samples: tuple
    mean: float
    std: float
    tail_mass: float
    bin_edges: tuple
    bin_density: tuple
    kde_points: tuple
    kde_density: tuple
    kde_bandwidth: float

    def rows(self) -> Iterator[tuple]:
        """Yield (source, coordinate, density) rows for the PDF table."""
        edges = np.asarray(self.bin_edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        for c, d in zip(centers, self.bin_density):
            yield ("histogram", float(c), float(d))
        for x, d in zip(self.kde_points, self.kde_density):
            yield ("kde", float(x), float(d))


@dataclass(frozen=True)
class ControlCheck:
    """Zero-wind trial run through the full pipeline as a self test."""

    final_time: float
    analytic_time: float
    ratio_average: float
    ratio_band: float

    @property
    def time_error(self) -> float:
        return abs(self.final_time - self.analytic_time) / self.analytic_time


@dataclass(frozen=True)
class StudyResult:
    """Aggregate outcome of run_study."""

    config: StudyConfig
    records: tuple
    excluded: tuple
    ratio_to_average: RatioDistribution
    ratio_to_band: RatioDistribution
    control: ControlCheck
    elapsed_s: float

    def sample_rows(self) -> Iterator[tuple]:
        """Yield one row per surviving trial, columns as in SAMPLE_COLUMNS."""
        for r in self.records:
            yield (r.index, r.t_random, r.t_average, r.t_band,
                   r.ratio_average, r.ratio_band, r.wind_domain_mag,
                   math.hypot(*r.wind_band_vec))

    def summary(self) -> dict:
        return {
            "trials": self.config.trials,
            "survivors": len(self.records),
            "excluded": len(self.excluded),
            "wind_index": self.config.wind_index,
            "ratio_average_mean": self.ratio_to_average.mean,
            "ratio_average_std": self.ratio_to_average.std,
            "ratio_average_tail": self.ratio_to_average.tail_mass,
            "ratio_band_mean": self.ratio_to_band.mean,
            "ratio_band_std": self.ratio_to_band.std,
            "ratio_band_tail": self.ratio_to_band.tail_mass,
            "control_time_error": self.control.time_error,
            "elapsed_s": self.elapsed_s,
        }


def effective_ratio(field: WindField, domain: Domain, v0: float,
                    grid_points: int = 200) -> float:
    """Fast-to-slow ground speed ratio (1 + W/v0) / (1 - W/v0).

    W is the domain mean of the wind speed magnitude, evaluated by grid
    quadrature at grid_points per axis. The ratio is undefined once the
    average wind reaches the airspeed.
    """
    if v0 <= 0.0:
        raise ValueError("v0 must be positive")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    X, Y = domain.grid(grid_points)
    wx, wy = field.wind_grid(X, Y)
    wbar = float(np.hypot(wx, wy).mean())
    if wbar >= v0:
        raise ValueError(
            f"domain-average wind speed {wbar:.1f} m/s meets or exceeds the "
            f"airspeed {v0:.1f} m/s; the ground speed ratio is undefined")
    x = wbar / v0
    return (1.0 + x) / (1.0 - x)


def _arc_ratio(theta: float) -> float:
    # Arc length over chord for a circular arc with opening angle theta.
    return theta / (2.0 * math.sin(0.5 * theta))


def solve_bandwidth(ratio: float, side: float) -> BandGeometry:
    """Band geometry whose arc detour bound matches a ground speed ratio.

    Solves theta / (2 sin(theta/2)) = ratio on (0, pi) by safeguarded
    bisection to 1e-12, then converts the arc sagitta over the diagonal
    chord sqrt(2) * side into the averaging band. A ratio of one is the
    zero-wind degenerate case with an empty band; ratios at or above pi/2
    exceed what any circular arc can produce.
    """
    if side <= 0.0:
        raise ValueError("side must be positive")
    if ratio < 1.0:
        raise ValueError("ratio must be >= 1")
    if ratio <= 1.0 + 1e-12:
        return BandGeometry(ratio=ratio, theta=0.0, half_width=0.0,
                            band_width=0.0, mask_width=0.0)
    if ratio >= ARC_RATIO_LIMIT:
        raise ValueError(
            f"ground speed ratio {ratio:.6f} is outside the circular-arc "
            f"geometry, which only spans ratios below pi/2")
    theta = solve_bracketed(lambda th: _arc_ratio(th) - ratio,
                            1e-12, math.pi - 1e-12, xtol=1e-12)
    chord = math.sqrt(2.0) * side
    half = (chord / (2.0 * math.sin(0.5 * theta))) * (1.0 - math.cos(0.5 * theta))
    width = 2.0 * half
    return BandGeometry(ratio=ratio, theta=theta, half_width=half,
                        band_width=width,
                        mask_width=width / math.cos(math.pi / 4.0))


def band_average(field: WindField, side: float, mask_width: float,
                 grid_points: int = 200) -> float:
    """Mean wind speed magnitude over the diagonal band |y - x| <= b/2."""
    if side <= 0.0:
        raise ValueError("side must be positive")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    X, Y = Domain(0.0, side, 0.0, side).grid(grid_points)
    mask = np.abs(Y - X) <= 0.5 * mask_width
    if not mask.any():
        raise ValueError("the averaging band covers no grid cells at this "
                         "resolution; use a finer grid")
    wx, wy = field.wind_grid(X[mask], Y[mask])
    return float(np.hypot(wx, wy).mean())


def _reduced_rhs(field: WindField, v0: float):
    """Right-hand side of the reduced (x, y, q) minimum-time system.

    At fixed airspeed the optimal heading obeys the classic drift law:
    dq/dt = -dWx/dy + (dWx/dx - dWy/dy) q + (dWy/dx) q^2 with q = tan chi.
    """

    def rhs(_t, state):
        x, y, q = state
        wx, wy, jxx, jxy, jyx, jyy = field.wind_and_jacobian(x, y)
        c = 1.0 / math.sqrt(1.0 + q * q)
        return [v0 * c + wx,
                v0 * q * c + wy,
                -jxy + (jxx - jyy) * q + jyx * q * q]

    return rhs


def solve_min_time_reduced(field: WindField, side: float, v0: float,
                           steps: int = 300,
                           max_iterations: int = 60) -> ReducedSolution:
    """Minimum flight time from (0, 0) to (side, side) at fixed airspeed.

    Two-parameter shooting on (q0, tf) with endpoint residuals scaled by
    the side length, so convergence means the miss distance is below
    1e-6 * side. Raises SolverDiagnostic if the shooting stalls.
    """
    if side <= 0.0:
        raise ValueError("side must be positive")
    if v0 <= 0.0:
        raise ValueError("v0 must be positive")
    if steps < 10:
        raise ValueError("steps must be >= 10")
    rhs = _reduced_rhs(field, v0)
    chord = math.sqrt(2.0) * side
    # Ground speed guess from the wind at the route midpoint projected on
    # the diagonal; exact for zero wind so the control trial converges at
    # the initial point.
    wx0, wy0 = field.wind(0.5 * side, 0.5 * side)
    v_eff = v0 + (wx0 + wy0) / math.sqrt(2.0)
    v_eff = max(v_eff, 0.2 * v0)
    tf0 = chord / v_eff

    def residual(params):
        q0, tf = params
        # Reject headings near +-90 deg and non-physical horizons before
        # spending an integration on them.
        if not (math.isfinite(q0) and math.isfinite(tf)):
            return np.array([1e6, 1e6])
        if abs(q0) > 50.0 or not 0.02 * tf0 < tf < 50.0 * tf0:
            return np.array([1e6, 1e6])
        # The q equation is a Riccati form with finite-time escape for bad
        # guesses; let the blow-up run to inf quietly and score it large.
        with np.errstate(over="ignore", invalid="ignore"):
            _, states = rk3_integrate(rhs, 0.0, [0.0, 0.0, q0], tf, steps)
        xT, yT, _ = states[-1]
        if not (math.isfinite(xT) and math.isfinite(yT)):
            return np.array([1e6, 1e6])
        return np.array([(xT - side) / side, (yT - side) / side])

    result = None
    for offset in (0.0, 0.35, -0.35, 0.7, -0.7):
        attempt = solve_root_lm(
            residual, [1.0 + offset, tf0],
            scales=lambda p: np.array([1.0, max(abs(p[1]), tf0)]),
            tol=5e-7, max_iter=max_iterations)
        if attempt.converged:
            result = attempt
            break
        if result is None or attempt.norm < result.norm:
            result = attempt
    if not result.converged:
        raise SolverDiagnostic(
            f"reduced shooting failed: {result.message}",
            residual_norm=result.norm, iterations=result.iterations,
            params=tuple(result.params))
    q0, tf = float(result.params[0]), float(result.params[1])
    times, states = rk3_integrate(rhs, 0.0, [0.0, 0.0, q0], tf, steps)
    heading = tuple(math.atan(s[2]) for s in states)
    return ReducedSolution(final_time=tf, q0=q0, times=tuple(times),
                           heading=heading, residual_norm=result.norm,
                           iterations=result.iterations)


def _trial_seed(seed: int, index: int) -> int:
    """Independent integer seed for one trial, keyed on (study seed, index).

    Deriving children through a seed sequence keeps trials statistically
    independent and makes each one reproducible in isolation, so aggregate
    results cannot depend on execution order.
    """
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _distribution(label: str, samples: np.ndarray,
                  bins: Optional[int]) -> RatioDistribution:
    """Freedman-Diaconis histogram plus Silverman-bandwidth Gaussian KDE."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n == 0:
        raise ValueError("cannot summarize an empty ratio population")
    mean = float(samples.mean())
    std = float(samples.std(ddof=1)) if n > 1 else 0.0
    tail = float(np.mean(np.abs(samples - 1.0) > DEVIATION_TAIL))
    spread = float(np.ptp(samples))
    if spread <= 1e-12:
        # Degenerate population: one narrow bin around the common value.
        half = max(1e-9, 1e-12 * abs(mean))
        edges = np.array([mean - half, mean + half])
        density = np.array([0.5 / half])
        return RatioDistribution(
            label=label, samples=tuple(samples), mean=mean, std=std,
            tail_mass=tail, bin_edges=tuple(edges),
            bin_density=tuple(density), kde_points=(mean,),
            kde_density=(0.5 / half,), kde_bandwidth=0.0)
    density, edges = np.histogram(samples, bins=bins if bins else "fd",
                                  density=True)
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = q75 - q25
    sigma = min(std, iqr / 1.34) if iqr > 0.0 else std
    bw = 0.9 * sigma * n ** (-0.2)
    if bw <= 0.0:
        bw = 0.9 * std * n ** (-0.2)
    grid = np.linspace(samples.min() - 3.0 * bw, samples.max() + 3.0 * bw, 256)
    z = (grid[:, None] - samples[None, :]) / bw
    kde = np.exp(-0.5 * z * z).sum(axis=1) / (n * bw * math.sqrt(2.0 * math.pi))
    return RatioDistribution(
        label=label, samples=tuple(samples), mean=mean, std=std,
        tail_mass=tail, bin_edges=tuple(edges), bin_density=tuple(density),
        kde_points=tuple(grid), kde_density=tuple(kde), kde_bandwidth=float(bw))


def _control_trial(config: StudyConfig) -> ControlCheck:
    """Zero-wind pipeline self test.

    The empty field and a zero Uniform produce bitwise-identical dynamics,
    so both ratios must come out at exactly one and the flight time must
    match the straight-chord value sqrt(2) * side / v0.
    """
    sol = solve_min_time_reduced(WindField(()), config.side, config.v0,
                                 steps=config.integration_steps)
    constant = solve_min_time_reduced(WindField([Uniform(0.0, 0.0)]),
                                      config.side, config.v0,
                                      steps=config.integration_steps)
    analytic = math.sqrt(2.0) * config.side / config.v0
    return ControlCheck(final_time=sol.final_time, analytic_time=analytic,
                        ratio_average=sol.final_time / constant.final_time,
                        ratio_band=sol.final_time / constant.final_time)


def run_study(config: StudyConfig) -> StudyResult:
    """Run the full Monte Carlo study described by config.

    Each trial draws its own generator seeded by (seed, trial index), so
    results are bit-for-bit reproducible and independent of execution
    order. Trials whose band geometry degenerates or whose shooting fails
    are excluded and counted rather than silently dropped.
    """
    start = time.perf_counter()
    domain = Domain(0.0, config.side, 0.0, config.side)
    X, Y = domain.grid(config.grid_points)
    control = _control_trial(config)
    records = []
    excluded = []
    counts = (config.vortices, config.dipoles, config.source_sinks)
    for k in range(config.trials):
        if config.wind_index > 0.0:
            field = sample_random_field(_trial_seed(config.seed, k),
                                        config.wind_index * config.v0,
                                        counts, domain)
        else:
            field = WindField(())
        wx, wy = field.wind_grid(X, Y)
        wbar = float(np.hypot(wx, wy).mean())
        x = wbar / config.v0
        ratio = (1.0 + x) / (1.0 - x)
        try:
            geometry = solve_bandwidth(ratio, config.side)
            mask = np.abs(Y - X) <= 0.5 * geometry.mask_width
            if not mask.any():
                raise ValueError("the averaging band covers no grid cells "
                                 "at this resolution; use a finer grid")
            domain_vec = (float(wx.mean()), float(wy.mean()))
            band_vec = (float(wx[mask].mean()), float(wy[mask].mean()))
            sol_rand = solve_min_time_reduced(
                field, config.side, config.v0, steps=config.integration_steps)
            sol_avg = solve_min_time_reduced(
                WindField([Uniform(*domain_vec)]), config.side, config.v0,
                steps=config.integration_steps)
            sol_band = solve_min_time_reduced(
                WindField([Uniform(*band_vec)]), config.side, config.v0,
                steps=config.integration_steps)
        except (ValueError, SolverDiagnostic) as err:
            excluded.append(ExcludedTrial(k, str(err)))
            continue
        records.append(TrialRecord(
            index=k,
            t_random=sol_rand.final_time,
            t_average=sol_avg.final_time,
            t_band=sol_band.final_time,
            ratio_average=sol_rand.final_time / sol_avg.final_time,
            ratio_band=sol_rand.final_time / sol_band.final_time,
            wind_domain_mag=wbar,
            wind_domain_vec=domain_vec,
            wind_band_vec=band_vec,
            speed_ratio=ratio,
            theta=geometry.theta,
            mask_width=geometry.mask_width))
    if not records:
        raise SolverDiagnostic(
            "every trial was excluded; nothing to aggregate",
            excluded=[(e.index, e.reason) for e in excluded])
    ratios_avg = np.array([r.ratio_average for r in records])
    ratios_band = np.array([r.ratio_band for r in records])
    dist_avg = _distribution("time ratio against the domain-average wind",
                             ratios_avg, config.histogram_bins)
    dist_band = _distribution("time ratio against the band-average wind",
                              ratios_band, config.histogram_bins)
    return StudyResult(config=config, records=tuple(records),
                       excluded=tuple(excluded), ratio_to_average=dist_avg,
                       ratio_to_band=dist_band, control=control,
                       elapsed_s=time.perf_counter() - start)
