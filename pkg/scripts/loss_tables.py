#!/usr/bin/env python3
"""Regenerate the dark-state loss tables for all three detection schemes.

Prints one table per scheme: loss per detection cycle versus molecule number
and cavity parameters, at fixed detected output flux.  Runtime is a couple of
minutes on a laptop.
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from helpers import eit_model, eit_model_fixed_flux, vrs_model  # noqa: E402

from cavimol import dynamics as dy  # noqa: E402

TWO_PI = 2.0 * math.pi


def vrs_table():
    print("VRS scan, 200 steps over 0.1 ms, peak output 10 pW")
    print(f"{'configuration':28s} {'N_c=5e4':>12s} {'N_c=1e6':>12s}")
    rows = [
        ("kappa_t/2pi=2.5 MHz, r2=0.8", dict()),
        ("kappa_t/2pi=2.5 MHz, r2=0.01", dict(r2=0.01)),
        ("kappa_t/2pi=20 MHz, r2=0.8", dict(kappa_t_hz=20e6)),
        ("kappa_t/2pi=0.5 MHz, r2=0.8", dict(kappa_t_hz=0.5e6)),
    ]
    for label, kw in rows:
        losses = []
        for n_c in (5e4, 1e6):
            model = vrs_model(n_c, p_out_peak_w=10e-12, **kw)
            scan = dy.ScanSpec(*dy.vrs_auto_span(model), steps=200, dwell=0.5e-6)
            res = dy.run_vrs_scan(model, scan)
            losses.append(res.rho_gpgp[-1])
        print(f"{label:28s} {100 * losses[0]:>11.4g}% {100 * losses[1]:>11.4g}%")
    print()


def eit_table():
    print("EIT scan, 200 steps over 1 ms, fixed window output flux")
    print(f"{'configuration':28s} {'N_c=1e3':>12s} {'N_c=5e4':>12s}")
    for label, kappa_t_hz, fixed in [
        ("kappa_t/2pi=0.5 MHz", 0.5e6, False),
        ("kappa_t/2pi=2.5 MHz", 2.5e6, True),
    ]:
        losses = []
        for n_c in (1e3, 5e4):
            model = eit_model_fixed_flux(n_c, kappa_t_hz) if fixed \
                else eit_model(n_c, kappa_t_hz=kappa_t_hz)
            scan = dy.ScanSpec(*dy.eit_auto_span(model), steps=200, dwell=5e-6)
            res = dy.run_eit_scan(model, scan)
            losses.append(res.rho_gpp[-1])
        print(f"{label:28s} {100 * losses[0]:>11.4g}% {100 * losses[1]:>11.4g}%")
    print()


def ringdown_table():
    print("EIT ring-down, loss accumulated over detection cycles")
    print(f"{'configuration':34s} {'N_c=1e3':>12s} {'N_c=5e4':>12s}")
    rows = [
        ("kappa_t/2pi=0.5 MHz, 10 cycles", 0.5e6, 0.8, 10),
        ("kappa_t/2pi=0.05 MHz, 1 cycle", 0.05e6, 0.8, 1),
        ("kappa_t/2pi=0.5 MHz, r2=0.01, x10", 0.5e6, 0.01, 10),
    ]
    for label, kappa_t_hz, r2, cycles in rows:
        losses = []
        for n_c in (1e3, 5e4):
            model = eit_model_fixed_flux(n_c, kappa_t_hz, r2=r2)
            rd = dy.run_ringdown(model, cycles=cycles)
            losses.append(rd.rho_gpp_cycles[-1])
        print(f"{label:34s} {100 * losses[0]:>11.4g}% {100 * losses[1]:>11.4g}%")
    print()


if __name__ == "__main__":
    vrs_table()
    eit_table()
    ringdown_table()
