"""Cruise trajectory optimization over analytic wind fields.

The package solves planar cruise routing problems - minimum time, minimum
fuel, or a weighted blend with soft elliptical avoidance zones - with an
indirect shooting method built on the pointwise optimal speed law. A direct
transcription of the same problem serves as a cross-check, and a seeded
Monte Carlo study quantifies arrival-time spread under random wind draws.
"""

from importlib import metadata as _metadata

from .direct import CompareReport, DirectProblem, DirectSolution, compare, solve_direct
from .hazards import EllipseHazard, PenaltyField, cluster_ellipses
from .ocp import (
    SolveConfig,
    Solution,
    SolverDiagnostic,
    Trajectory,
    analytic_min_time_constant_wind,
    solve,
    turnpike_scan,
)
from .performance import B767_300ER, AircraftModel, CruiseAero
from .scenario import (
    SCHEMA_VERSION,
    Bounds,
    Scenario,
    Weights,
    builtin_scenarios,
    load_scenario,
    save_scenario,
)
from .stochastic import StudyConfig, StudyResult, run_study
from .windfield import (
    Dipole,
    Domain,
    SourceSink,
    Uniform,
    Vortex,
    WindField,
    fit_wind_field,
    sample_random_field,
)

try:
    __version__ = _metadata.version("cruiseopt")
except _metadata.PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = [
    "AircraftModel",
    "B767_300ER",
    "Bounds",
    "CompareReport",
    "CruiseAero",
    "Dipole",
    "DirectProblem",
    "DirectSolution",
    "Domain",
    "EllipseHazard",
    "PenaltyField",
    "SCHEMA_VERSION",
    "Scenario",
    "SolveConfig",
    "Solution",
    "SolverDiagnostic",
    "SourceSink",
    "StudyConfig",
    "StudyResult",
    "Trajectory",
    "Uniform",
    "Vortex",
    "Weights",
    "WindField",
    "analytic_min_time_constant_wind",
    "builtin_scenarios",
    "cluster_ellipses",
    "compare",
    "fit_wind_field",
    "load_scenario",
    "run_study",
    "sample_random_field",
    "save_scenario",
    "solve",
    "solve_direct",
    "turnpike_scan",
    "__version__",
]
