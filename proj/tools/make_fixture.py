#!/usr/bin/env python3
"""Generate the bundled three-machine case files.

Topology and loads follow the widely published WSCC 3-machine, 9-bus system
(branch data as distributed with MATPOWER's case9). Machine data are typical
values in the style of the Anderson-Fouad tables, completed with sub-transient
parameters, a first-order exciter and a first-order governor. Buses 5 and 9
carry induction motors for 40% of their load. The power flow is solved here
by Newton-Raphson, so the file is self-consistent to ~1e-12 pu.

Usage: make_fixture.py OUT_DIR
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

BASE_MVA = 100.0

BUSES = [(1, 16.5), (2, 18.0), (3, 13.8), (4, 230.0), (5, 230.0), (6, 230.0), (7, 230.0), (8, 230.0), (9, 230.0)]

# from, to, r, x, b
BRANCHES = [
    (1, 4, 0.0, 0.0576, 0.0),
    (4, 5, 0.017, 0.092, 0.158),
    (5, 6, 0.039, 0.17, 0.358),
    (3, 6, 0.0, 0.0586, 0.0),
    (6, 7, 0.0119, 0.1008, 0.209),
    (7, 8, 0.0085, 0.072, 0.149),
    (8, 2, 0.0, 0.0625, 0.0),
    (8, 9, 0.032, 0.161, 0.306),
    (9, 4, 0.01, 0.085, 0.176),
]

# bus: (P MW, Q Mvar)
LOADS = {5: (90.0, 30.0), 7: (100.0, 35.0), 9: (125.0, 50.0)}
MOTOR_SHARE = 0.4
MOTOR_BUS_ZIP = [0.12, 0.18, 0.30, MOTOR_SHARE]
PLAIN_ZIP = [0.2, 0.3, 0.5, 0.0]

# bus, V setpoint, P MW (None for the slack)
GEN_SETPOINTS = [(1, 1.04, None), (2, 1.025, 163.0), (3, 1.025, 85.0)]

GENERATORS = {
    1: dict(xd=0.146, xd1=0.0608, xd2=0.04, xq=0.0969, xq1=0.0969, xq2=0.04,
            td01=8.96, td02=0.03, tq01=0.31, tq02=0.05, h=23.64, d=2.0),
    2: dict(xd=0.8958, xd1=0.1198, xd2=0.089, xq=0.8645, xq1=0.1969, xq2=0.089,
            td01=6.0, td02=0.03, tq01=0.535, tq02=0.05, h=6.4, d=2.0),
    3: dict(xd=1.3125, xd1=0.1813, xd2=0.107, xq=1.2578, xq1=0.25, xq2=0.12,
            td01=5.89, td02=0.04, tq01=0.6, tq02=0.05, h=3.01, d=2.0),
}
CONTROLS = dict(ra=0.0, ka=20.0, te=0.05, r=0.05, tg=0.4)

# Motor data on the motor's own rating, converted to the system base below.
MOTOR_OWN = dict(rs=0.031, xs=3.1, xs1=0.178, xr=3.08, rr=0.018, h=0.7)
MOTOR_LOADING = 0.8  # rated MVA = motor P / loading


def ybus(n, index):
    y = np.zeros((n, n), dtype=complex)
    for f, t, r, x, b in BRANCHES:
        i, j = index[f], index[t]
        ys = 1.0 / complex(r, x)
        y[i, i] += ys + 0.5j * b
        y[j, j] += ys + 0.5j * b
        y[i, j] -= ys
        y[j, i] -= ys
    return y


def power_flow():
    n = len(BUSES)
    index = {bid: k for k, (bid, _) in enumerate(BUSES)}
    y = ybus(n, index)
    vm = np.ones(n)
    va = np.zeros(n)
    p_sched = np.zeros(n)
    q_sched = np.zeros(n)
    for bus, (p, q) in LOADS.items():
        p_sched[index[bus]] -= p / BASE_MVA
        q_sched[index[bus]] -= q / BASE_MVA
    slack = None
    pv = []
    for bus, v, p in GEN_SETPOINTS:
        vm[index[bus]] = v
        if p is None:
            slack = index[bus]
        else:
            pv.append(index[bus])
            p_sched[index[bus]] += p / BASE_MVA
    pq = [k for k in range(n) if k != slack and k not in pv]
    ang = [k for k in range(n) if k != slack]

    for _ in range(50):
        v = vm * np.exp(1j * va)
        s = v * np.conj(y @ v)
        dp = p_sched[ang] - s.real[ang]
        dq = q_sched[pq] - s.imag[pq]
        mis = np.concatenate([dp, dq])
        if np.max(np.abs(mis)) < 1e-14:
            break
        # Numerical Jacobian is adequate at this size.
        x0 = np.concatenate([va[ang], vm[pq]])

        def f(x):
            va2 = va.copy()
            vm2 = vm.copy()
            va2[ang] = x[: len(ang)]
            vm2[pq] = x[len(ang):]
            v2 = vm2 * np.exp(1j * va2)
            s2 = v2 * np.conj(y @ v2)
            return np.concatenate([s2.real[ang], s2.imag[pq]])

        f0 = f(x0)
        jac = np.zeros((len(x0), len(x0)))
        for k in range(len(x0)):
            dx = np.zeros(len(x0))
            dx[k] = 1e-7
            jac[:, k] = (f(x0 + dx) - f(x0 - dx)) / 2e-7
        x1 = x0 + np.linalg.solve(jac, mis)
        va[ang] = x1[: len(ang)]
        vm[pq] = x1[len(ang):]
    else:
        raise RuntimeError("power flow did not converge")

    v = vm * np.exp(1j * va)
    s = v * np.conj(y @ v)
    gen_pq = {}
    for bus, _, _ in GEN_SETPOINTS:
        k = index[bus]
        load = LOADS.get(bus, (0.0, 0.0))
        gen_pq[bus] = (s[k].real + load[0] / BASE_MVA, s[k].imag + load[1] / BASE_MVA)
    return vm, va, gen_pq, float(np.max(np.abs(mis)))


def motor_params(p_pu):
    rating = p_pu / MOTOR_LOADING  # system pu
    z = 1.0 / rating
    m = {k: MOTOR_OWN[k] * z for k in ("rs", "xs", "xs1", "xr", "rr")}
    m["h"] = MOTOR_OWN["h"] * rating
    m["f1"] = 0.0
    m["f2"] = 1.0
    m["lambda1"] = 0.0
    m["lambda2"] = 2.0
    return m


def build_case(stiff=False):
    vm, va, gen_pq, mismatch = power_flow()
    case = {
        "format_version": 1,
        "name": "three_machine_stiff" if stiff else "three_machine",
        "notes": "Synthetic 3-machine 9-bus case; see tools/make_fixture.py for provenance. "
        "Power-flow mismatch %.1e pu." % mismatch,
        "base_mva": BASE_MVA,
        "frequency_hz": 60.0,
        "buses": [
            {"id": bid, "base_kv": kv, "vm": float(vm[k]), "va_deg": float(math.degrees(va[k]))}
            for k, (bid, kv) in enumerate(BUSES)
        ],
        "branches": [{"from": f, "to": t, "r": r, "x": x, "b": b} for f, t, r, x, b in BRANCHES],
        "generators": [],
        "loads": [],
        "motors": [],
    }
    for bus, _, _ in GEN_SETPOINTS:
        g = dict(GENERATORS[bus])
        if stiff:
            g["td02"] = 0.002
            g["tq02"] = 0.002
        p, q = gen_pq[bus]
        case["generators"].append({"bus": bus, "p": float(p), "q": float(q), **g, **CONTROLS})
    for bus, (p, q) in LOADS.items():
        has_motor = bus in (5, 9)
        shares = MOTOR_BUS_ZIP if has_motor else PLAIN_ZIP
        case["loads"].append({"bus": bus, "p": p / BASE_MVA, "q": q / BASE_MVA, "zip": {"p": shares, "q": shares}})
        if has_motor:
            case["motors"].append({"bus": bus, **motor_params(MOTOR_SHARE * p / BASE_MVA)})
    return case


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    for stiff, name in ((False, "three_machine.json"), (True, "three_machine_stiff.json")):
        (out / name).write_text(json.dumps(build_case(stiff), indent=2) + "\n")
        print("wrote", out / name)


if __name__ == "__main__":
    main()
