import json
import math
import pathlib

import pytest

from cruiseopt.atmosphere import isa_state
from cruiseopt.performance import (
    B767_300ER,
    AircraftModel,
    CruiseAero,
    compressibility_kbar,
    drag,
    sfc,
    throttle_required,
    thrust_max,
)

GOLDEN = json.loads(
    (pathlib.Path(__file__).parent / "golden" / "performance.json").read_text()
)
POINT = GOLDEN["point_m140000kg_v230mps_h10000m"]


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


# -- constants table ---------------------------------------------------------


def test_default_model_reproduces_constants_table():
    m = B767_300ER
    assert m.wing_area == 283.3
    assert m.mtow == 186880.0
    assert m.max_fuel == 73635.0
    assert m.thrust_ref == 5.0e5
    assert m.sfc_ref == 9.0e-6
    assert m.drag_coeffs == (0.01322, -0.00610, 0.06000)
    assert m.compress_coeffs[0] == (0.0067, -0.1861, 2.2420, -6.4350, 6.3428)
    assert m.compress_coeffs[1] == (0.0962, -0.7602, -1.2870, 3.7925, -2.7672)
    assert m.compress_coeffs[2] == (-0.1317, 1.3427, -1.2839, 5.0164, 0.0000)


def test_model_validation_rejects_bad_tables():
    with pytest.raises(ValueError):
        AircraftModel(
            name="bad",
            wing_area=-1.0,
            mtow=1e5,
            max_fuel=5e4,
            thrust_ref=1e5,
            sfc_ref=1e-5,
            drag_coeffs=(0.01, 0.0, 0.05),
            compress_coeffs=B767_300ER.compress_coeffs,
        )
    with pytest.raises(ValueError):
        AircraftModel(
            name="bad",
            wing_area=283.3,
            mtow=1e5,
            max_fuel=2e5,
            thrust_ref=1e5,
            sfc_ref=1e-5,
            drag_coeffs=(0.01, 0.0, 0.05),
            compress_coeffs=B767_300ER.compress_coeffs,
        )


# -- compressibility ----------------------------------------------------------


def test_kbar_zero_below_breakpoint():
    assert compressibility_kbar(0.3) == 0.0
    assert compressibility_kbar(0.0) == 0.0


def test_kbar_continuous_at_breakpoint():
    assert compressibility_kbar(0.4) == 0.0
    assert compressibility_kbar(0.4 + 1e-9) < 1e-15


def test_kbar_at_m08():
    # 0.16 / sqrt(0.36)
    assert math.isclose(compressibility_kbar(0.8), 0.16 / 0.6, rel_tol=1e-12)
    assert math.isclose(compressibility_kbar(0.8), 0.2667, abs_tol=5e-5)


def test_kbar_rejects_supersonic():
    with pytest.raises(ValueError):
        compressibility_kbar(1.0)
    with pytest.raises(ValueError):
        compressibility_kbar(-0.1)


# -- golden point -------------------------------------------------------------


def test_drag_matches_independent_evaluation():
    assert math.isclose(
        drag(140000.0, 230.0, 10000.0), POINT["drag_N"], rel_tol=1e-12
    )


def test_thrust_max_matches_independent_evaluation():
    assert math.isclose(
        thrust_max(230.0, 10000.0), POINT["thrust_max_N"], rel_tol=1e-12
    )


def test_sfc_matches_independent_evaluation():
    assert math.isclose(sfc(230.0, 10000.0), POINT["sfc_kg_per_Ns"], rel_tol=1e-12)


def test_throttle_matches_independent_evaluation():
    pi = throttle_required(140000.0, 230.0, 10000.0)
    assert math.isclose(pi, POINT["throttle"], rel_tol=1e-12)
    assert 0.0 < pi < 1.0


def test_thrust_ref_recovered_at_sea_level_low_speed():
    # M -> 0 limit: both correction factors go to 1 (the sqrt(M) lapse term
    # decays slowly, so probe very close to the limit)
    assert math.isclose(thrust_max(1e-12, 0.0), 5.0e5, rel_tol=1e-6)


def test_sfc_ref_recovered_at_sea_level_zero_speed():
    assert sfc(0.0, 0.0) == 9.0e-6


def test_low_mach_drag_polar_collapses_to_incompressible():
    aero = CruiseAero(B767_300ER, 0.0)
    mass, speed = 120000.0, 100.0  # M ~ 0.29
    cl = aero.cl_base * mass / speed**2
    cd0, cd1, cd2 = B767_300ER.drag_coeffs
    expected = aero.half_rho_s * speed**2 * (cd0 + cd1 * cl + cd2 * cl * cl)
    assert math.isclose(aero.drag(mass, speed), expected, rel_tol=1e-14)


def test_thrust_decreases_with_altitude_at_fixed_mach():
    lo = CruiseAero(B767_300ER, 9000.0)
    hi = CruiseAero(B767_300ER, 11000.0)
    mach = 0.78
    assert hi.thrust_max(mach * hi.sound_speed) < lo.thrust_max(mach * lo.sound_speed)


def test_sfc_increases_with_speed():
    a = CruiseAero(B767_300ER, 10000.0)
    assert a.sfc(240.0) > a.sfc(220.0)


def test_input_validation():
    with pytest.raises(ValueError):
        drag(-1.0, 230.0, 10000.0)
    with pytest.raises(ValueError):
        drag(140000.0, 0.0, 10000.0)
    with pytest.raises(ValueError):
        drag(140000.0, 400.0, 10000.0)  # supersonic at 10 km
    with pytest.raises(ValueError):
        thrust_max(230.0, 30000.0)


# -- analytic derivatives vs central differences ------------------------------

ENVELOPE_POINTS = [
    (0.55 * B767_300ER.mtow, 0.52, 9000.0),
    (0.75 * B767_300ER.mtow, 0.65, 10000.0),
    (1.00 * B767_300ER.mtow, 0.80, 10000.0),
    (0.60 * B767_300ER.mtow, 0.87, 11000.0),
    (0.90 * B767_300ER.mtow, 0.74, 9000.0),
]


@pytest.mark.parametrize("mass,mach,alt", ENVELOPE_POINTS)
def test_drag_speed_derivative_matches_central_difference(mass, mach, alt):
    aero = CruiseAero(B767_300ER, alt)
    v = mach * aero.sound_speed
    _, dd_dv, _ = aero.drag_derivs(mass, v)
    fd = central_diff(lambda u: aero.drag(mass, u), v, 1e-3)
    assert math.isclose(dd_dv, fd, rel_tol=1e-6)


@pytest.mark.parametrize("mass,mach,alt", ENVELOPE_POINTS)
def test_drag_mass_derivative_matches_central_difference(mass, mach, alt):
    aero = CruiseAero(B767_300ER, alt)
    v = mach * aero.sound_speed
    _, _, dd_dm = aero.drag_derivs(mass, v)
    fd = central_diff(lambda u: aero.drag(u, v), mass, 1.0)
    assert math.isclose(dd_dm, fd, rel_tol=1e-6)


@pytest.mark.parametrize("mass,mach,alt", ENVELOPE_POINTS)
def test_thrust_derivative_matches_central_difference(mass, mach, alt):
    aero = CruiseAero(B767_300ER, alt)
    v = mach * aero.sound_speed
    t, dt_dv = aero.thrust_max_deriv(v)
    assert math.isclose(t, aero.thrust_max(v), rel_tol=1e-14)
    fd = central_diff(aero.thrust_max, v, 1e-3)
    assert math.isclose(dt_dv, fd, rel_tol=1e-6)


def test_sfc_derivative_matches_central_difference():
    aero = CruiseAero(B767_300ER, 10000.0)
    fd = central_diff(aero.sfc, 230.0, 1e-3)
    assert math.isclose(aero.sfc_deriv(), fd, rel_tol=1e-9)


def test_fuel_log_deriv_consistent_with_fuel_flow():
    aero = CruiseAero(B767_300ER, 10000.0)
    mass, v = 140000.0, 235.0
    fd = central_diff(lambda u: math.log(aero.fuel_flow(mass, u)), v, 1e-3)
    assert math.isclose(aero.fuel_log_deriv(mass, v), fd, rel_tol=1e-6)


def test_mass_decay_rate_positive_and_consistent():
    aero = CruiseAero(B767_300ER, 10000.0)
    mass, v = 150000.0, 240.0
    a = aero.mass_decay_rate(mass, v)
    fd = central_diff(lambda u: aero.fuel_flow(u, v), mass, 1.0)
    assert a > 0
    assert math.isclose(a, fd, rel_tol=1e-6)


# -- envelope property scans ---------------------------------------------------


def envelope_grid():
    for alt in (9000.0, 10000.0, 11000.0):
        aero = CruiseAero(B767_300ER, alt)
        for fm in (0.55, 0.7, 0.85, 1.0):
            for mach in (0.5, 0.6, 0.7, 0.8, 0.88):
                yield aero, fm * B767_300ER.mtow, mach * aero.sound_speed


def test_sfc_increases_with_speed_over_envelope():
    for aero, mass, v in envelope_grid():
        assert aero.sfc_deriv() > 0.0


def test_drag_increases_with_speed_on_the_front_side():
    # The polar's minimum-drag lift coefficient is sqrt(C_D0/C_D2) ~ 0.47 at
    # low Mach; heavy-and-slow envelope corners sit above it (backside of the
    # drag curve) where dD/dv < 0 by basic aerodynamics. Monotone drag is a
    # front-side property, so scan the cells with C_L <= 0.45.
    checked = 0
    for aero, mass, v in envelope_grid():
        cl = aero.cl_base * mass / (v * v)
        if cl > 0.45:
            continue
        _, dd_dv, _ = aero.drag_derivs(mass, v)
        assert dd_dv > 0.0
        checked += 1
    assert checked >= 20  # the restriction must keep a meaningful share of cells


def test_fuel_flow_negative_mass_rate_everywhere():
    for aero, mass, v in envelope_grid():
        assert -aero.fuel_flow(mass, v) < 0.0


def test_fuel_flow_convex_in_speed_over_envelope():
    # d^2(C_s D)/dv^2 > 0, i.e. F_m,vv < 0 for F_m = -C_s D
    for aero, mass, v in envelope_grid():
        h = 0.5
        f = lambda u: aero.fuel_flow(mass, u)
        second = (f(v + h) - 2.0 * f(v) + f(v - h)) / h**2
        assert second > 0.0
