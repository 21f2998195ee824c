"""Aircraft performance models: compressible drag polar, thrust lapse, fuel burn.

The drag polar couples an incompressible polar with polynomial-in-K̄(M)
compressibility corrections; thrust and specific fuel consumption follow the
usual turbofan ram/lapse correlations. All closed-form speed and mass
derivatives used by the optimizer are hand-derived here and verified against
central finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .atmosphere import AtmosphereState, GAMMA, THETA0, P0, G0, isa_state

# Exponents of the thrust ram-pressure factor, fixed by gamma = 1.4
_RAM_EXP = GAMMA / (GAMMA - 1.0)        # 3.5
_RAM_HALF = (GAMMA - 1.0) / 2.0         # 0.2


@dataclass(frozen=True)
class AircraftModel:
    """Immutable performance constants for one airframe/engine pairing."""

    name: str
    wing_area: float                      # s, m^2
    mtow: float                           # maximum takeoff mass, kg
    max_fuel: float                       # fuel capacity, kg
    thrust_ref: float                     # T0, N
    sfc_ref: float                        # Cs0, kg/(N s)
    drag_coeffs: tuple[float, float, float]
    # Compressibility corrections: rows multiply C_L^0, C_L^1, C_L^2,
    # columns multiply K̄^1 .. K̄^5.
    compress_coeffs: tuple[tuple[float, float, float, float, float], ...] = field(
        default_factory=tuple
    )

    def __post_init__(self):
        if self.wing_area <= 0 or self.thrust_ref <= 0 or self.sfc_ref <= 0:
            raise ValueError("wing_area, thrust_ref and sfc_ref must be positive")
        if not (0 < self.max_fuel < self.mtow):
            raise ValueError("max_fuel must lie in (0, mtow)")
        if len(self.drag_coeffs) != 3:
            raise ValueError("drag_coeffs must hold (C_D0i, C_D1i, C_D2i)")
        if len(self.compress_coeffs) != 3 or any(
            len(row) != 5 for row in self.compress_coeffs
        ):
            raise ValueError("compress_coeffs must be a 3x5 table")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "wing_area_m2": self.wing_area,
            "mtow_kg": self.mtow,
            "max_fuel_kg": self.max_fuel,
            "thrust_ref_N": self.thrust_ref,
            "sfc_ref_kg_per_Ns": self.sfc_ref,
            "drag_coeffs": list(self.drag_coeffs),
            "compress_coeffs": [list(row) for row in self.compress_coeffs],
        }

    @staticmethod
    def from_dict(doc: dict) -> "AircraftModel":
        return AircraftModel(
            name=str(doc["name"]),
            wing_area=float(doc["wing_area_m2"]),
            mtow=float(doc["mtow_kg"]),
            max_fuel=float(doc["max_fuel_kg"]),
            thrust_ref=float(doc["thrust_ref_N"]),
            sfc_ref=float(doc["sfc_ref_kg_per_Ns"]),
            drag_coeffs=tuple(float(c) for c in doc["drag_coeffs"]),
            compress_coeffs=tuple(
                tuple(float(c) for c in row) for row in doc["compress_coeffs"]
            ),
        )


B767_300ER = AircraftModel(
    name="B767-300ER",
    wing_area=283.3,
    mtow=186880.0,
    max_fuel=73635.0,
    thrust_ref=5.0e5,
    sfc_ref=9.0e-6,
    drag_coeffs=(0.01322, -0.00610, 0.06000),
    compress_coeffs=(
        (0.0067, -0.1861, 2.2420, -6.4350, 6.3428),
        (0.0962, -0.7602, -1.2870, 3.7925, -2.7672),
        (-0.1317, 1.3427, -1.2839, 5.0164, 0.0000),
    ),
)


def compressibility_kbar(mach: float) -> float:
    """Compressibility argument K̄(M) = (M-0.4)^2 (1-M^2)^(-1/2), zero below M=0.4."""
    if mach < 0.0 or mach >= 1.0:
        raise ValueError(f"mach must lie in [0, 1), got {mach}")
    if mach < 0.4:
        return 0.0
    u = mach - 0.4
    return u * u / math.sqrt(1.0 - mach * mach)


def _kbar_and_deriv(mach: float) -> tuple[float, float]:
    """K̄(M) and dK̄/dM on 0 <= M < 1 (both zero below the 0.4 breakpoint)."""
    if mach < 0.4:
        return 0.0, 0.0
    u = mach - 0.4
    w = 1.0 - mach * mach
    rw = 1.0 / math.sqrt(w)
    kbar = u * u * rw
    dkbar = 2.0 * u * rw + u * u * mach * rw / w
    return kbar, dkbar


class CruiseAero:
    """Performance model bound to one aircraft and one cruise altitude.

    Caches the atmosphere column and every altitude-only factor so that the
    per-timestep evaluations inside the optimizer reduce to a handful of
    scalar operations.
    """

    def __init__(self, model: AircraftModel, altitude: float):
        self.model = model
        self.atmosphere: AtmosphereState = isa_state(altitude)
        atm = self.atmosphere
        self.sound_speed = atm.sound_speed
        self.half_rho_s = 0.5 * atm.density * model.wing_area
        # 2 g / (rho s): C_L = cl_base * m / v^2
        self.cl_base = 2.0 * G0 / (atm.density * model.wing_area)
        # Thrust reference with the pressure/temperature lapse factor
        self.thrust_lapse = (
            atm.pressure * THETA0 / (P0 * atm.temperature) * model.thrust_ref
        )
        # SFC with the temperature factor applied
        self.sfc_base = model.sfc_ref * math.sqrt(atm.temperature / THETA0)
        # dC_s/dv is constant at fixed altitude
        self.sfc_slope = self.sfc_base * 1.2 / self.sound_speed

    # -- drag polar -------------------------------------------------------

    def _polar_groups(self, kbar: float) -> tuple[float, float, float]:
        """Polynomial coefficient groups (A, B, C) of C_D = A + B C_L + C C_L^2."""
        cd0, cd1, cd2 = self.model.drag_coeffs
        k0, k1, k2 = self.model.compress_coeffs
        a, b, c = cd0, cd1, cd2
        kp = 1.0
        for j in range(5):
            kp *= kbar
            a += k0[j] * kp
            b += k1[j] * kp
            c += k2[j] * kp
        return a, b, c

    def _polar_group_derivs(self, kbar: float) -> tuple[float, float, float]:
        """d(A, B, C)/dK̄."""
        k0, k1, k2 = self.model.compress_coeffs
        da = db = dc = 0.0
        kp = 1.0
        for j in range(5):
            p = j + 1
            da += p * k0[j] * kp
            db += p * k1[j] * kp
            dc += p * k2[j] * kp
            kp *= kbar
        return da, db, dc

    def _polar_all(self, kbar: float):
        """Groups and their K̄-derivatives in one pass over the table."""
        cd0, cd1, cd2 = self.model.drag_coeffs
        k0, k1, k2 = self.model.compress_coeffs
        a, b, c = cd0, cd1, cd2
        da = db = dc = 0.0
        kp = 1.0
        for j in range(5):
            p = j + 1
            da += p * k0[j] * kp
            db += p * k1[j] * kp
            dc += p * k2[j] * kp
            kp *= kbar
            a += k0[j] * kp
            b += k1[j] * kp
            c += k2[j] * kp
        return a, b, c, da, db, dc

    def drag(self, mass: float, speed: float) -> float:
        """Drag force D = 1/2 rho v^2 s C_D at level-flight lift."""
        mach = speed / self.sound_speed
        kbar, _ = _kbar_and_deriv(mach)
        a, b, c = self._polar_groups(kbar)
        cl = self.cl_base * mass / (speed * speed)
        cd = a + (b + c * cl) * cl
        return self.half_rho_s * speed * speed * cd

    def drag_derivs(self, mass: float, speed: float) -> tuple[float, float, float]:
        """(D, dD/dv, dD/dm) with C_L(m, v) dependence included."""
        mach = speed / self.sound_speed
        kbar, dkbar = _kbar_and_deriv(mach)
        a, b, c, da, db, dc = self._polar_all(kbar)
        cl = self.cl_base * mass / (speed * speed)
        cd = a + (b + c * cl) * cl
        bc = b + 2.0 * c * cl
        # dC_D/dv: compressibility chain through M plus lift coefficient decay
        dcd_dv = (da + (db + dc * cl) * cl) * dkbar / self.sound_speed \
            - bc * 2.0 * cl / speed
        dcd_dm = bc * cl / mass
        v2 = speed * speed
        drag = self.half_rho_s * v2 * cd
        dd_dv = self.half_rho_s * (2.0 * speed * cd + v2 * dcd_dv)
        dd_dm = self.half_rho_s * v2 * dcd_dm
        return drag, dd_dv, dd_dm

    # -- propulsion -------------------------------------------------------

    def thrust_max(self, speed: float) -> float:
        """Maximum available thrust at this altitude and the given speed."""
        mach = speed / self.sound_speed
        ram = (1.0 + _RAM_HALF * mach * mach) ** _RAM_EXP
        return self.thrust_lapse * ram * (1.0 - 0.49 * math.sqrt(mach))

    def thrust_max_deriv(self, speed: float) -> tuple[float, float]:
        """(T_max, dT_max/dv)."""
        mach = speed / self.sound_speed
        base = 1.0 + _RAM_HALF * mach * mach
        ram_low = base ** (_RAM_EXP - 1.0)
        ram = ram_low * base
        sq = math.sqrt(mach)
        t = self.thrust_lapse * ram * (1.0 - 0.49 * sq)
        dt_dm = self.thrust_lapse * (
            _RAM_EXP * ram_low * 2.0 * _RAM_HALF * mach * (1.0 - 0.49 * sq)
            - ram * 0.245 / sq
        )
        return t, dt_dm / self.sound_speed

    def sfc(self, speed: float) -> float:
        """Thrust-specific fuel consumption C_s."""
        mach = speed / self.sound_speed
        return self.sfc_base * (1.0 + 1.2 * mach)

    def sfc_deriv(self) -> float:
        """dC_s/dv, constant at fixed altitude."""
        return self.sfc_slope

    # -- composite quantities used by the optimizer ------------------------

    def fuel_flow(self, mass: float, speed: float) -> float:
        """Fuel mass flow C_s(v) D(m, v) > 0; the mass ODE is dm/dt = -fuel_flow."""
        return self.sfc(speed) * self.drag(mass, speed)

    def fuel_flow_pieces(
        self, mass: float, speed: float
    ) -> tuple[float, float, float, float]:
        """(D, dD/dv, dD/dm, C_s) in one evaluation; shared by the speed root."""
        d, dd_dv, dd_dm = self.drag_derivs(mass, speed)
        return d, dd_dv, dd_dm, self.sfc(speed)

    def fuel_log_deriv(self, mass: float, speed: float) -> float:
        """d/dv ln(C_s D) = C_s'/C_s + D'/D, the fuel-flow log-derivative."""
        d, dd_dv, _ = self.drag_derivs(mass, speed)
        cs = self.sfc(speed)
        return self.sfc_deriv() / cs + dd_dv / d

    def stationarity_pieces(
        self, mass: float, speed: float
    ) -> tuple[float, float, float, float]:
        """(D, dD/dm, C_s, G) with G the fuel-flow log-derivative.

        Everything the optimal-speed root needs from the airframe in one
        drag-polar pass: the drag and C_s feed the mass costate and throttle,
        G = C_s'/C_s + D'/D multiplies the fuel term of the stationarity
        function.
        """
        d, dd_dv, dd_dm = self.drag_derivs(mass, speed)
        cs = self.sfc(speed)
        g = self.sfc_slope / cs + dd_dv / d
        return d, dd_dm, cs, g

    def mass_decay_rate(self, mass: float, speed: float) -> float:
        """a = C_s dD/dm, the decay rate of the mass costate (1/s)."""
        _, _, dd_dm = self.drag_derivs(mass, speed)
        return self.sfc(speed) * dd_dm

    def throttle(self, mass: float, speed: float) -> float:
        """Throttle setting Pi = D / T_max; not clamped."""
        return self.drag(mass, speed) / self.thrust_max(speed)


# -- module-level wrappers matching the scenario-facing API -----------------


def _check_speed_mass(mass: float, speed: float):
    if mass <= 0.0:
        raise ValueError(f"mass must be positive, got {mass}")
    if speed <= 0.0:
        raise ValueError(f"speed must be positive, got {speed}")


def drag(
    mass: float, speed: float, altitude: float, model: AircraftModel = B767_300ER
) -> float:
    """Drag force at level-flight lift, N."""
    _check_speed_mass(mass, speed)
    aero = CruiseAero(model, altitude)
    if speed / aero.sound_speed >= 1.0:
        raise ValueError("drag polar is subsonic only (Mach >= 1)")
    return aero.drag(mass, speed)


def thrust_max(
    speed: float, altitude: float, model: AircraftModel = B767_300ER
) -> float:
    """Maximum available thrust, N."""
    if speed <= 0.0:
        raise ValueError(f"speed must be positive, got {speed}")
    return CruiseAero(model, altitude).thrust_max(speed)


def sfc(speed: float, altitude: float, model: AircraftModel = B767_300ER) -> float:
    """Thrust-specific fuel consumption, kg/(N s)."""
    if speed < 0.0:
        raise ValueError(f"speed must be nonnegative, got {speed}")
    return CruiseAero(model, altitude).sfc(speed)


def throttle_required(
    mass: float, speed: float, altitude: float, model: AircraftModel = B767_300ER
) -> float:
    """Throttle Pi = D/T_max needed to hold speed in level cruise; unclamped."""
    _check_speed_mass(mass, speed)
    aero = CruiseAero(model, altitude)
    if speed / aero.sound_speed >= 1.0:
        raise ValueError("drag polar is subsonic only (Mach >= 1)")
    return aero.drag(mass, speed) / aero.thrust_max(speed)
