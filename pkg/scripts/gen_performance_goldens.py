"""Independent high-precision evaluation of the performance formulas.

Produces tests/golden/performance.json. Written directly from the published
closed forms with mpmath at 50 digits; deliberately does not import the
package so the goldens stay an independent oracle.
"""

import json
import pathlib

import mpmath as mp

mp.mp.dps = 50

THETA0 = mp.mpf("288.15")
P0 = mp.mpf("101325")
BETA = mp.mpf("0.0065")
R = mp.mpf("287.04")
C0 = mp.mpf("1.4")
G = mp.mpf("9.81")

S = mp.mpf("283.3")
T0 = mp.mpf("5e5")
CS0 = mp.mpf("9e-6")
CD0I = mp.mpf("0.01322")
CD1I = mp.mpf("-0.00610")
CD2I = mp.mpf("0.06000")
K0 = [mp.mpf(x) for x in ("0.0067", "-0.1861", "2.2420", "-6.4350", "6.3428")]
K1 = [mp.mpf(x) for x in ("0.0962", "-0.7602", "-1.2870", "3.7925", "-2.7672")]
K2 = [mp.mpf(x) for x in ("-0.1317", "1.3427", "-1.2839", "5.0164", "0.0000")]


def isa(h):
    th = THETA0 - BETA * h
    p = P0 * (th / THETA0) ** (G / (BETA * R))
    rho = p / (R * th)
    a = mp.sqrt(C0 * R * th)
    return th, p, rho, a


def kbar(mach):
    if mach < mp.mpf("0.4"):
        return mp.mpf(0)
    return (mach - mp.mpf("0.4")) ** 2 / mp.sqrt(1 - mach**2)


def drag(mass, v, h):
    th, p, rho, a = isa(h)
    mach = v / a
    kb = kbar(mach)
    A = CD0I + sum(K0[i] * kb ** (i + 1) for i in range(5))
    B = CD1I + sum(K1[i] * kb ** (i + 1) for i in range(5))
    C = CD2I + sum(K2[i] * kb ** (i + 1) for i in range(5))
    cl = 2 * mass * G / (rho * S * v**2)
    cd = A + B * cl + C * cl**2
    return rho * v**2 * S * cd / 2


def thrust_max(v, h):
    th, p, rho, a = isa(h)
    mach = v / a
    ram = (1 + (C0 - 1) / 2 * mach**2) ** (C0 / (C0 - 1))
    return (p * THETA0 / (P0 * th)) * T0 * ram * (1 - mp.mpf("0.49") * mp.sqrt(mach))


def sfc(v, h):
    th, p, rho, a = isa(h)
    mach = v / a
    return CS0 * mp.sqrt(th / THETA0) * (1 + mp.mpf("1.2") * mach)


def main():
    h = mp.mpf("10000")
    v = mp.mpf("230")
    m = mp.mpf("140000")
    th, p, rho, a = isa(h)
    d = drag(m, v, h)
    t = thrust_max(v, h)
    c = sfc(v, h)
    out = {
        "isa_10000_m": {
            "temperature_K": float(th),
            "pressure_Pa": float(p),
            "density_kg_m3": float(rho),
            "sound_speed_mps": float(a),
        },
        "point_m140000kg_v230mps_h10000m": {
            "mach": float(v / a),
            "kbar": float(kbar(v / a)),
            "drag_N": float(d),
            "thrust_max_N": float(t),
            "sfc_kg_per_Ns": float(c),
            "throttle": float(d / t),
            "fuel_flow_kg_per_s": float(c * d),
        },
    }
    path = pathlib.Path(__file__).resolve().parents[1] / "tests" / "golden" / "performance.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
