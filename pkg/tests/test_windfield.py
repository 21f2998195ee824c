import json
import math
from pathlib import Path

import numpy as np
import pytest

from cruiseopt.windfield import (
    Dipole,
    Domain,
    SourceSink,
    Uniform,
    Vortex,
    WindField,
    divergence_scan,
    eval_wind,
    eval_wind_jacobian,
    fit_wind_field,
    parameter_count,
    primitive_from_dict,
    sample_random_field,
)

DOMAIN = Domain(0.0, 1.0e6, 0.0, 1.0e6)


def composite_field():
    return WindField([
        Uniform(8.0, -3.0),
        Vortex(6.0e6, 2.4e5, 7.1e5, 9.0e4),
        Vortex(-4.0e6, 8.0e5, 2.0e5, 6.0e4),
        Dipole(3.0e11, -1.5e11, 5.0e5, 5.0e5, 1.2e5),
        SourceSink(5.0e6, 1.0e5, 1.0e5, 8.0e4),
    ])


# -- evaluation basics --------------------------------------------------------


def test_uniform_field_constant_everywhere():
    f = WindField([Uniform(10.0, -5.0)])
    for x, y in [(0.0, 0.0), (1e5, -2e5), (987654.3, 123456.7)]:
        assert eval_wind(f, x, y) == (10.0, -5.0)


def test_vortex_vanishes_at_center():
    v = Vortex(5.0e6, 1000.0, -2000.0, 5.0e4)
    assert WindField([v]).wind(1000.0, -2000.0) == (0.0, 0.0)


def test_source_points_radially_outward():
    s = WindField([SourceSink(4.0e6, 0.0, 0.0, 3.0e4)])
    rng = np.random.default_rng(7)
    for _ in range(25):
        x, y = rng.uniform(-5e5, 5e5, size=2)
        if x == 0 and y == 0:
            continue
        wx, wy = s.wind(x, y)
        # velocity parallel to the radius vector, positive projection
        assert wx * x + wy * y > 0.0
        assert math.isclose(wx * y, wy * x, rel_tol=1e-12, abs_tol=1e-15)


def test_linearity_of_superposition():
    parts = composite_field().primitives
    f_all = WindField(parts)
    f_a, f_b = WindField(parts[:2]), WindField(parts[2:])
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.uniform(0, 1e6, size=2)
        wa = f_a.wind(x, y)
        wb = f_b.wind(x, y)
        w = f_all.wind(x, y)
        assert math.isclose(w[0], wa[0] + wb[0], rel_tol=1e-14, abs_tol=1e-14)
        assert math.isclose(w[1], wa[1] + wb[1], rel_tol=1e-14, abs_tol=1e-14)


def test_vectorized_matches_scalar():
    f = composite_field()
    rng = np.random.default_rng(11)
    xs = rng.uniform(0, 1e6, size=40)
    ys = rng.uniform(0, 1e6, size=40)
    wx, wy = f.wind_grid(xs, ys)
    jxx, jxy, jyx, jyy = f.jacobian_grid(xs, ys)
    for i in range(xs.size):
        sx, sy = f.wind(xs[i], ys[i])
        assert math.isclose(wx[i], sx, rel_tol=1e-14, abs_tol=1e-16)
        assert math.isclose(wy[i], sy, rel_tol=1e-14, abs_tol=1e-16)
        a, b, c, d = f.jacobian(xs[i], ys[i])
        assert math.isclose(jxx[i], a, rel_tol=1e-14, abs_tol=1e-20)
        assert math.isclose(jxy[i], b, rel_tol=1e-14, abs_tol=1e-20)
        assert math.isclose(jyx[i], c, rel_tol=1e-14, abs_tol=1e-20)
        assert math.isclose(jyy[i], d, rel_tol=1e-14, abs_tol=1e-20)


# -- jacobian against finite differences ---------------------------------------


def test_jacobian_matches_central_differences():
    f = composite_field()
    rng = np.random.default_rng(42)
    h = 0.5  # meters; fields vary over ~1e5 m scales
    for _ in range(100):
        x, y = rng.uniform(-2e5, 1.2e6, size=2)
        jxx, jxy, jyx, jyy = eval_wind_jacobian(f, x, y)
        fd_xx = (f.wind(x + h, y)[0] - f.wind(x - h, y)[0]) / (2 * h)
        fd_xy = (f.wind(x, y + h)[0] - f.wind(x, y - h)[0]) / (2 * h)
        fd_yx = (f.wind(x + h, y)[1] - f.wind(x - h, y)[1]) / (2 * h)
        fd_yy = (f.wind(x, y + h)[1] - f.wind(x, y - h)[1]) / (2 * h)
        scale = max(abs(jxx), abs(jxy), abs(jyx), abs(jyy), 1e-12)
        assert abs(jxx - fd_xx) <= 1e-6 * scale
        assert abs(jxy - fd_xy) <= 1e-6 * scale
        assert abs(jyx - fd_yx) <= 1e-6 * scale
        assert abs(jyy - fd_yy) <= 1e-6 * scale


def test_uniform_jacobian_is_zero():
    assert eval_wind_jacobian(WindField([Uniform(10, -5)]), 1.0, 2.0) == (0, 0, 0, 0)


# -- divergence ----------------------------------------------------------------


def test_divergence_free_primitives_have_zero_trace():
    rng = np.random.default_rng(5)
    prims = [
        Uniform(4.0, 9.0),
        Vortex(7.0e6, 3e5, 4e5, 5e4),
        Dipole(2.0e11, 3.0e11, 6e5, 2e5, 9e4),
    ]
    for p in prims:
        for _ in range(50):
            x, y = rng.uniform(-1e5, 1.1e6, size=2)
            jxx, _, _, jyy = p.jacobian(x, y)
            scale = max(abs(jxx), abs(jyy), 1e-30)
            assert abs(jxx + jyy) <= 1e-12 * scale


def test_source_sink_divergence_matches_closed_form():
    s = SourceSink(5.0e6, 1e5, 2e5, 7e4)
    rng = np.random.default_rng(9)
    for _ in range(30):
        x, y = rng.uniform(-1e5, 1.1e6, size=2)
        jxx, _, _, jyy = s.jacobian(x, y)
        assert math.isclose(jxx + jyy, s.divergence(x, y), rel_tol=1e-12)


def test_divergence_scan_empty_field_is_zero():
    assert divergence_scan(WindField([]), DOMAIN, 50) == 0.0


def test_divergence_scan_divfree_composite():
    f = WindField([p for p in composite_field().primitives
                   if not isinstance(p, SourceSink)])
    xg, yg = DOMAIN.grid(100)
    jxx, _, _, jyy = f.jacobian_grid(xg, yg)
    scale = float(np.max(np.abs(jxx)) + np.max(np.abs(jyy)))
    assert divergence_scan(f, DOMAIN, 100) <= 1e-12 * scale


def test_divergence_scan_validates_grid():
    with pytest.raises(ValueError):
        divergence_scan(composite_field(), DOMAIN, 1)


# -- vortex shape --------------------------------------------------------------


def test_vortex_speed_peaks_at_core_and_decays():
    r0 = 5.0e4
    v = WindField([Vortex(6.0e6, 0.0, 0.0, r0)])
    radii = np.linspace(0.05 * r0, 40 * r0, 400)
    speeds = [math.hypot(*v.wind(r, 0.0)) for r in radii]
    peak_idx = int(np.argmax(speeds))
    # Peak sits at r = R0 exactly for the r/(r^2+R0^2) profile
    assert abs(radii[peak_idx] - r0) <= radii[1] - radii[0] + 1e-9
    # Monotone 1/r-like decay beyond the peak
    tail = speeds[peak_idx:]
    assert all(a > b for a, b in zip(tail, tail[1:]))
    far = 30 * r0
    w_far = math.hypot(*v.wind(far, 0.0))
    assert math.isclose(w_far, 6.0e6 / (2 * math.pi * far), rel_tol=2e-3)


def test_dipole_far_field_matches_unregularized_form():
    d = Dipole(3.0e11, -2.0e11, 0.0, 0.0, 5.0e4)
    for r in (1.0e6, 3.0e6):
        wx, wy = d.velocity(r, 0.4 * r)
        dx, dy = r, 0.4 * r
        s_raw = dx * dx + dy * dy
        px = (d.mx * (dx * dx - dy * dy) + 2 * d.my * dx * dy) / (2 * math.pi * s_raw**2)
        py = (d.my * (dy * dy - dx * dx) + 2 * d.mx * dx * dy) / (2 * math.pi * s_raw**2)
        rel = math.hypot(wx - px, wy - py) / math.hypot(px, py)
        assert rel < 2 * (5.0e4 / r) ** 2 * 10


def test_radius_must_be_positive():
    with pytest.raises(ValueError):
        Vortex(1e6, 0, 0, 0.0)
    with pytest.raises(ValueError):
        Dipole(1e11, 0, 0, 0, -1.0)
    with pytest.raises(ValueError):
        SourceSink(1e6, 0, 0, 0.0)


# -- random sampling -----------------------------------------------------------


def test_sample_random_field_deterministic():
    a = sample_random_field(123, 12.0, (3, 1, 2), DOMAIN)
    b = sample_random_field(123, 12.0, (3, 1, 2), DOMAIN)
    assert a == b
    c = sample_random_field(124, 12.0, (3, 1, 2), DOMAIN)
    assert a != c


def test_sample_random_field_supnorm_calibrated():
    for seed in (0, 1, 2):
        f = sample_random_field(seed, 15.0, (3, 1, 2), DOMAIN)
        xg, yg = DOMAIN.grid(200)
        wx, wy = f.wind_grid(xg, yg)
        sup = float(np.max(np.hypot(wx, wy)))
        assert 0.99 * 15.0 <= sup <= 1.01 * 15.0


def test_sample_random_field_pure_uniform():
    f = sample_random_field(55, 9.0, (0, 0, 0), DOMAIN)
    assert len(f.primitives) == 1
    (u,) = f.primitives
    assert isinstance(u, Uniform)
    assert math.isclose(math.hypot(u.u, u.v), 9.0, rel_tol=1e-12)


def test_parameter_count():
    assert parameter_count((0, 0, 0)) == 2
    assert parameter_count((3, 1, 2)) == 2 + 12 + 5 + 8


# -- serialization --------------------------------------------------------------


def test_wind_round_trip_through_dicts():
    f = composite_field()
    again = WindField.from_dicts(f.to_dicts())
    assert again == f


# -- fitting -------------------------------------------------------------------


def sample_grid(field, n=12):
    xs = np.linspace(0, 1e6, n)
    ys = np.linspace(0, 1e6, n)
    xg, yg = np.meshgrid(xs, ys)
    wx, wy = field.wind_grid(xg, yg)
    return np.column_stack([xg.ravel(), yg.ravel(), wx.ravel(), wy.ravel()])


def test_fit_uniform_exactly():
    truth = WindField([Uniform(10.0, -5.0)])
    fit = fit_wind_field(sample_grid(truth, 4), (0, 0, 0), seed=1, n_starts=1)
    assert fit.converged
    assert fit.rms_residual < 1e-9
    (u,) = fit.field.primitives
    assert math.isclose(u.u, 10.0, abs_tol=1e-9)
    assert math.isclose(u.v, -5.0, abs_tol=1e-9)


def test_fit_recovers_truth_from_truth_start():
    truth = WindField([
        Uniform(5.0, 2.0),
        Vortex(6.0e6, 4.0e5, 6.0e5, 8.0e4),
    ])
    fit = fit_wind_field(sample_grid(truth), (1, 0, 0), init_field=truth)
    assert fit.converged
    assert fit.rms_residual < 1e-8


def test_fit_one_vortex_with_noise_multistart():
    truth = WindField([
        Uniform(4.0, -6.0),
        Vortex(7.0e6, 5.0e5, 4.5e5, 1.0e5),
    ])
    pts = sample_grid(truth)
    speeds = np.hypot(pts[:, 2], pts[:, 3])
    max_speed = float(speeds.max())
    rng = np.random.default_rng(77)
    noisy = pts.copy()
    noisy[:, 2:] += rng.normal(0.0, 0.01 * max_speed, size=(pts.shape[0], 2))
    fit = fit_wind_field(noisy, (1, 0, 0), seed=5, n_starts=8)
    assert fit.converged
    assert fit.rms_residual <= 0.02 * max_speed


def test_fit_rejects_underdetermined_input():
    with pytest.raises(ValueError):
        fit_wind_field(np.zeros((3, 4)), (1, 1, 1))


def test_golden_vectors_pin_the_field_evaluation():
    # shared contract: any client reimplementing the primitives must
    # reproduce these vectors from the serialized field alone
    doc = json.loads((Path(__file__).parent / "golden"
                      / "wind_eval.json").read_text())
    field = WindField([primitive_from_dict(p) for p in doc["field"]])
    for row in doc["vectors"]:
        u, v = field.wind(row["x_m"], row["y_m"])
        assert abs(u - row["u_mps"]) <= 1e-9 * (1.0 + abs(row["u_mps"]))
        assert abs(v - row["v_mps"]) <= 1e-9 * (1.0 + abs(row["v_mps"]))
        jxx, jxy, jyx, jyy = field.jacobian(row["x_m"], row["y_m"])
        for got, key in ((jxx, "jxx"), (jxy, "jxy"), (jyx, "jyx"), (jyy, "jyy")):
            assert abs(got - row[key]) <= 1e-9 * (1.0 + abs(row[key]))
