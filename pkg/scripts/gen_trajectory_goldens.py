"""Regenerate the trajectory and wind-evaluation golden files.

Produces tests/golden/nominal_fig2.csv (per-node throttle/speed/heading/path
profiles of the solved nominal scenario, the anchor for the shape
regression) and tests/golden/wind_eval.json (wind vectors and Jacobians at
fixed probe points for a field holding all four primitive kinds; any client
that reimplements the primitives must reproduce these from the serialized
field alone).

These goldens pin current behavior rather than an external truth, so only
regenerate them after an intentional, understood change to the solver or
the field formulas.
"""

import csv
import json
import pathlib

from cruiseopt.ocp import solve
from cruiseopt.scenario import load_scenario
from cruiseopt.windfield import Dipole, SourceSink, Uniform, Vortex, WindField

GOLDEN = pathlib.Path(__file__).resolve().parents[1] / "tests" / "golden"


def write_nominal_profiles():
    solution = solve(load_scenario("nominal"))
    assert solution.converged
    tr = solution.trajectory
    with open(GOLDEN / "nominal_fig2.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "x", "y", "v", "chi", "throttle"))
        for k in range(tr.n_nodes):
            writer.writerow([repr(float(col[k])) for col in
                             (tr.t, tr.x, tr.y, tr.v, tr.chi, tr.throttle)])
    print(f"nominal_fig2.csv: {tr.n_nodes} nodes, "
          f"J = {solution.objective:.6f}")


def write_wind_vectors():
    field = WindField((
        Uniform(7.5, -3.25),
        Vortex(2.4e7, 3.0e5, 4.0e5, 9.0e4),
        Vortex(-1.1e7, 7.2e5, 1.5e5, 6.0e4),
        Dipole(5.5e11, -2.0e11, 5.0e5, 6.5e5, 1.1e5),
        SourceSink(1.8e7, 8.0e5, 8.0e5, 7.0e4),
    ))
    points = [(x, y)
              for x in (0.0, 1.5e5, 3.0e5, 5.0e5, 7.2e5, 1.0e6)
              for y in (0.0, 2.0e5, 4.0e5, 6.5e5, 1.0e6)]
    # points riding each regularized core exercise the r^2 + R0^2 floors
    points += [(3.0e5, 4.0e5), (5.0e5, 6.5e5), (8.0e5, 8.0e5), (7.2e5, 1.5e5)]
    vectors = []
    for x, y in points:
        u, v = field.wind(x, y)
        jxx, jxy, jyx, jyy = field.jacobian(x, y)
        vectors.append({"x_m": x, "y_m": y, "u_mps": u, "v_mps": v,
                        "jxx": jxx, "jxy": jxy, "jyx": jyx, "jyy": jyy})
    doc = {"field": field.to_dicts(), "vectors": vectors}
    with open(GOLDEN / "wind_eval.json", "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    print(f"wind_eval.json: {len(vectors)} probe points")


if __name__ == "__main__":
    write_nominal_profiles()
    write_wind_vectors()
