"""HTTP facade over the solver for interactive clients.

Three POST endpoints wrap the core operations with JSON bodies mirroring
the scenario schema: /solve runs the shooting solver with a wall-time cap,
/wind/sample draws a seeded random field, /hazards/cluster covers scattered
points with ellipses. GET /health reports versions. The server is
stateless: identical request bodies produce identical responses, seeds
included, so clients can memoize freely.

Solves run synchronously under a bounded semaphore sized to the core
count; extra requests queue rather than oversubscribing the machine. A
request whose cap expires gets 504 with the best iterate in the body so
the client can still draw something.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import metadata
from urllib.parse import parse_qs, urlparse

import numpy as np

from .hazards import cluster_ellipses
from .ocp import SolveConfig, SolverDiagnostic, solve
from .scenario import SCHEMA_VERSION, Scenario
from .windfield import Domain, sample_random_field

ENV_PORT = "CRUISEOPT_PORT"
MAX_POLYLINE_NODES = 500
DEFAULT_TIME_CAP_S = 30.0

POLYLINE_COLUMNS = ("t", "x", "y", "v", "chi", "throttle")


def package_version() -> str:
    try:
        return metadata.version("cruiseopt")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _trajectory_payload(trajectory, full: bool) -> dict:
    if not full:
        trajectory = trajectory.downsample(MAX_POLYLINE_NODES)
    nodes = np.column_stack([trajectory.t, trajectory.x, trajectory.y,
                             trajectory.v, trajectory.chi,
                             trajectory.throttle])
    return {"columns": list(POLYLINE_COLUMNS),
            "nodes": [[float(v) for v in row] for row in nodes]}


def _solve_response(solution, full: bool) -> dict:
    summary = solution.summary()
    summary["final_time_s"] = solution.final_time
    summary["final_mass_kg"] = solution.final_mass
    return {
        "summary": summary,
        "converged": solution.converged,
        "deadline_hit": solution.deadline_hit,
        "residuals": [float(r) for r in solution.residuals],
        "residual_norm": solution.residual_norm,
        "elapsed_s": solution.elapsed_s,
        "trajectory": _trajectory_payload(solution.trajectory, full),
    }


def handle_solve(doc: dict, full: bool, slots: threading.Semaphore) -> tuple[int, dict]:
    """Map one /solve body to (status, response body)."""
    scenario_doc = doc.get("scenario")
    if not isinstance(scenario_doc, dict):
        return 400, {"error": "body must carry a 'scenario' object"}
    try:
        scenario = Scenario.from_dict(scenario_doc)
    except (KeyError, TypeError, ValueError) as err:
        return 400, {"error": f"invalid scenario: {err}"}
    overrides = doc.get("solver", {})
    if not isinstance(overrides, dict):
        return 400, {"error": "'solver' must be an object of overrides"}
    try:
        config = SolveConfig(
            dt_steps=int(overrides.get("dt_steps", 300)),
            max_iterations=int(overrides.get("max_iterations", 200)),
            tolerance=float(overrides.get("tolerance", 1e-6)),
            time_cap=float(overrides.get("time_cap_s", DEFAULT_TIME_CAP_S)))
    except (TypeError, ValueError) as err:
        return 400, {"error": f"invalid solver overrides: {err}"}
    with slots:
        try:
            solution = solve(scenario, config)
        except (SolverDiagnostic, ValueError) as err:
            return 422, {"error": f"solver infeasibility: {err}"}
    status = 200
    if solution.deadline_hit and not solution.converged:
        status = 504
    return status, _solve_response(solution, full)


def handle_wind_sample(doc: dict) -> tuple[int, dict]:
    try:
        seed = int(doc.get("seed", 0))
        max_speed = float(doc.get("max_speed_mps", 20.0))
        counts = tuple(int(c) for c in doc.get("counts", (3, 1, 2)))
        if len(counts) != 3 or any(c < 0 for c in counts):
            raise ValueError("counts must be three nonnegative integers")
        dom = doc.get("domain", {})
        domain = Domain(float(dom.get("x_min_m", 0.0)),
                        float(dom.get("x_max_m", 1.0e6)),
                        float(dom.get("y_min_m", 0.0)),
                        float(dom.get("y_max_m", 1.0e6)))
        field = sample_random_field(seed, max_speed, counts, domain)
    except (TypeError, ValueError) as err:
        return 400, {"error": str(err)}
    return 200, {"seed": seed, "field": field.to_dicts()}


def handle_cluster(doc: dict) -> tuple[int, dict]:
    try:
        points = doc.get("points")
        if points is None:
            raise ValueError("body must carry a 'points' array")
        k = int(doc.get("k", 1))
        hazards = cluster_ellipses(points, k, seed=int(doc.get("seed", 0)),
                                   weight=float(doc.get("weight", 1.0)))
    except (TypeError, ValueError) as err:
        return 400, {"error": str(err)}
    return 200, {"k": k, "ellipses": [h.to_dict() for h in hazards]}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        if self.server.verbose:
            sys.stderr.write(f"{self.address_string()} {fmt % args}\n")

    def _send(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self._cors()
        self.end_headers()
        self.wfile.write(payload)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if urlparse(self.path).path == "/health":
            self._send(200, {"status": "ok",
                             "package_version": package_version(),
                             "schema_version": SCHEMA_VERSION})
        else:
            self._send(404, {"error": "no such endpoint"})

    def do_POST(self):
        parsed = urlparse(self.path)
        try:
            length = int(self.headers.get("Content-Length", 0))
            doc = json.loads(self.rfile.read(length) or b"")
        except (TypeError, ValueError):
            self._send(400, {"error": "body must be a JSON object"})
            return
        if not isinstance(doc, dict):
            self._send(400, {"error": "body must be a JSON object"})
            return
        if parsed.path == "/solve":
            query = parse_qs(parsed.query)
            full = query.get("full", ["false"])[0].lower() == "true"
            status, body = handle_solve(doc, full, self.server.solve_slots)
        elif parsed.path == "/wind/sample":
            status, body = handle_wind_sample(doc)
        elif parsed.path == "/hazards/cluster":
            status, body = handle_cluster(doc)
        else:
            status, body = 404, {"error": "no such endpoint"}
        self._send(status, body)


class SolveService(ThreadingHTTPServer):
    """Threaded server with a bounded pool of simultaneous solves."""

    daemon_threads = True

    def __init__(self, address=("127.0.0.1", 0), max_workers: int | None = None,
                 verbose: bool = False):
        super().__init__(address, _Handler)
        workers = max_workers or os.cpu_count() or 2
        if workers < 1:
            raise ValueError("max_workers must be >= 1")
        self.solve_slots = threading.BoundedSemaphore(workers)
        self.verbose = verbose

    @property
    def port(self) -> int:
        return self.server_address[1]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cruiseopt-service",
        description="HTTP facade over the cruise trajectory solver")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int,
                        default=int(os.environ.get(ENV_PORT, "8000")))
    parser.add_argument("--workers", type=int, default=None,
                        help="maximum simultaneous solves (default: cores)")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    server = SolveService((args.host, args.port), max_workers=args.workers,
                          verbose=args.verbose)
    print(f"listening on {args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
