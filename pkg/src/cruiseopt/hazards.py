"""Flight-sensitive areas as oblique ellipses and their penalty fields.

Each hazard carries the metric matrix A = R diag(1/a^2, 1/b^2) R^T whose unit
ball is the ellipse itself. Soft hazards contribute c / (eps + ||X - Xc||_A)
to the running cost; hard hazards contribute the steep exponential barrier
exp(k (1 - ||X - Xc||_A) + d) with k = c - d, which evaluates to exp(c) at the
center and exp(d) on the perimeter.

Clustering turns scattered incident points into covering ellipses through
seeded k-means and per-cluster covariance eigen-decomposition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

SOFT_EPS = 1e-3  # regularization of the 1/norm pole at the center


@dataclass(frozen=True)
class EllipseHazard:
    center: tuple[float, float]       # m
    semi_axes: tuple[float, float]    # (a, b), m
    orientation: float                # alpha, rad
    weight: float = 1.0               # c_s, objective-units per second
    mode: str = "soft"                # "soft" | "hard"
    hard_center_level: float = 0.0    # c_i: log-penalty at the center (hard mode)
    hard_perimeter_level: float = 0.0 # d_i: log-penalty on the perimeter (hard mode)

    def __post_init__(self):
        a, b = self.semi_axes
        if a <= 0.0 or b <= 0.0:
            raise ValueError("semi-axes must be positive")
        if self.weight < 0.0:
            raise ValueError("hazard weight must be nonnegative")
        if self.mode not in ("soft", "hard"):
            raise ValueError(f"unknown hazard mode {self.mode!r}")

    def metric(self) -> np.ndarray:
        """A = R diag(1/a^2, 1/b^2) R^T."""
        a, b = self.semi_axes
        ca, sa = math.cos(self.orientation), math.sin(self.orientation)
        rot = np.array([[ca, -sa], [sa, ca]])
        return rot @ np.diag([1.0 / a**2, 1.0 / b**2]) @ rot.T

    def _metric_terms(self) -> tuple[float, float, float]:
        """Entries (axx, axy, ayy) of the symmetric metric matrix."""
        a, b = self.semi_axes
        ca, sa = math.cos(self.orientation), math.sin(self.orientation)
        ia, ib = 1.0 / (a * a), 1.0 / (b * b)
        axx = ca * ca * ia + sa * sa * ib
        ayy = sa * sa * ia + ca * ca * ib
        axy = ca * sa * (ia - ib)
        return axx, axy, ayy

    def norm(self, x: float, y: float) -> float:
        """Anisotropic norm ||X - Xc||_A; 1 on the perimeter, 0 at the center."""
        axx, axy, ayy = self._metric_terms()
        ux, uy = x - self.center[0], y - self.center[1]
        return math.sqrt(max(axx * ux * ux + 2.0 * axy * ux * uy + ayy * uy * uy, 0.0))

    def to_dict(self) -> dict:
        doc = {
            "center_m": [self.center[0], self.center[1]],
            "semi_axes_m": [self.semi_axes[0], self.semi_axes[1]],
            "orientation_rad": self.orientation,
            "weight_per_s": self.weight,
            "mode": self.mode,
        }
        if self.mode == "hard":
            doc["hard_center_level"] = self.hard_center_level
            doc["hard_perimeter_level"] = self.hard_perimeter_level
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "EllipseHazard":
        return EllipseHazard(
            center=(float(doc["center_m"][0]), float(doc["center_m"][1])),
            semi_axes=(float(doc["semi_axes_m"][0]), float(doc["semi_axes_m"][1])),
            orientation=float(doc["orientation_rad"]),
            weight=float(doc.get("weight_per_s", 1.0)),
            mode=doc.get("mode", "soft"),
            hard_center_level=float(doc.get("hard_center_level", 0.0)),
            hard_perimeter_level=float(doc.get("hard_perimeter_level", 0.0)),
        )


def anisotropic_norm(hazard: EllipseHazard, x: float, y: float) -> float:
    return hazard.norm(x, y)


class PenaltyField:
    """Penalty g(x, y) = sum_i c_i g_i(x, y) with analytic gradient.

    Precomputes each hazard's metric terms once so the ODE loop pays only a
    few multiplications per hazard per call.
    """

    def __init__(self, hazards=()):
        self.hazards = tuple(hazards)
        self._terms = []
        for h in self.hazards:
            axx, axy, ayy = h._metric_terms()
            if h.mode == "hard":
                k = h.hard_center_level - h.hard_perimeter_level
                self._terms.append((h, axx, axy, ayy, k))
            else:
                self._terms.append((h, axx, axy, ayy, None))

    def value_and_grad(self, x: float, y: float) -> tuple[float, float, float]:
        g = gx = gy = 0.0
        for h, axx, axy, ayy, k in self._terms:
            if h.weight == 0.0:
                continue
            ux, uy = x - h.center[0], y - h.center[1]
            q = axx * ux * ux + 2.0 * axy * ux * uy + ayy * uy * uy
            n = math.sqrt(q) if q > 0.0 else 0.0
            # (A u) components for the norm gradient A u / n
            aux = axx * ux + axy * uy
            auy = axy * ux + ayy * uy
            if k is None:
                val = h.weight / (SOFT_EPS + n)
                if n > 0.0:
                    f = -h.weight / (n * (SOFT_EPS + n) ** 2)
                    gx += f * aux
                    gy += f * auy
                g += val
            else:
                val = h.weight * math.exp(k * (1.0 - n) + h.hard_perimeter_level)
                if n > 0.0:
                    f = -val * k / n
                    gx += f * aux
                    gy += f * auy
                g += val
        return g, gx, gy

    def value_grid(self, x, y):
        """Vectorized penalty values over numpy arrays (no gradient)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = np.zeros(np.broadcast(x, y).shape)
        for h, axx, axy, ayy, k in self._terms:
            if h.weight == 0.0:
                continue
            ux, uy = x - h.center[0], y - h.center[1]
            q = axx * ux * ux + 2.0 * axy * ux * uy + ayy * uy * uy
            n = np.sqrt(np.maximum(q, 0.0))
            if k is None:
                g = g + h.weight / (SOFT_EPS + n)
            else:
                g = g + h.weight * np.exp(k * (1.0 - n) + h.hard_perimeter_level)
        return g


def penalty(hazards, x: float, y: float) -> tuple[float, float, float]:
    """(g, dg/dx, dg/dy) of the summed hazard penalty at one probe."""
    return PenaltyField(hazards).value_and_grad(x, y)


# -- clustering ----------------------------------------------------------------


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator):
    """k-means++ seeding: spread initial centers by squared-distance weighting."""
    n = points.shape[0]
    centers = np.empty((k, 2))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            centers[j:] = points[rng.integers(n, size=k - j)]
            break
        probs = d2 / total
        centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
            max_iter: int = 100):
    centers = _kmeans_pp_init(points, k, rng)
    labels = np.zeros(points.shape[0], dtype=int)
    for it in range(max_iter):
        dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)
        if it > 0 and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            sel = points[labels == j]
            if sel.shape[0] > 0:
                centers[j] = sel.mean(axis=0)
            else:
                # Re-seed an emptied cluster at the farthest point
                far = np.argmax(np.min(dists, axis=1))
                centers[j] = points[far]
    return centers, labels


def cluster_ellipses(points, k: int, seed: int = 0,
                     weight: float = 1.0) -> list[EllipseHazard]:
    """Cluster scattered points into K covering ellipses.

    Per cluster: centroid becomes the center; eigen-decomposition of the
    covariance gives the orientation and the axis ratio; the scale is the
    smallest multiple covering every cluster point, so each point satisfies
    ||X - Xc||_A <= 1.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (N, 2) array")
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= K <= {n} points, got K={k}")
    rng = np.random.default_rng(seed)
    centers, labels = _kmeans(pts, k, rng)

    bbox = pts.max(axis=0) - pts.min(axis=0)
    floor = 0.01 * float(np.hypot(bbox[0], bbox[1]))
    if floor == 0.0:
        floor = 1.0

    out = []
    for j in range(k):
        sel = pts[labels == j]
        if sel.shape[0] == 0:
            sel = centers[j:j + 1]
        center = sel.mean(axis=0)
        degenerate = sel.shape[0] < 3
        if degenerate:
            warnings.warn(
                f"cluster {j} received {sel.shape[0]} point(s); "
                "covariance is degenerate, applying minimum semi-axis floor"
            )
            evals = np.array([floor**2, floor**2])
            evecs = np.eye(2)
        else:
            cov = np.cov(sel.T)
            evals, evecs = np.linalg.eigh(cov)
        # Descending order: semi-major first
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        if np.linalg.det(evecs) < 0.0:
            evecs[:, 1] = -evecs[:, 1]
        base_a = math.sqrt(max(evals[0], 0.0))
        base_b = math.sqrt(max(evals[1], 0.0))
        if base_a < floor or base_b < floor:
            if not degenerate:
                warnings.warn(
                    f"cluster {j} is near-collinear; "
                    "applying minimum semi-axis floor"
                )
            base_a = max(base_a, floor)
            base_b = max(base_b, floor)
        alpha = math.atan2(evecs[1, 0], evecs[0, 0])
        probe = EllipseHazard(
            center=(float(center[0]), float(center[1])),
            semi_axes=(base_a, base_b),
            orientation=alpha,
            weight=weight,
        )
        scale = max(probe.norm(px, py) for px, py in sel)
        if scale <= 0.0:
            scale = 1.0
        out.append(EllipseHazard(
            center=probe.center,
            semi_axes=(scale * base_a, scale * base_b),
            orientation=alpha,
            weight=weight,
        ))
    return out
